"""Normal faithful conditional expectations E: M -> iota(N) < M.

The trace-preserving expectation E_tau is the orthogonal projection of M
onto iota(N) for the inner product <x,y> = Tr_s(x*y).  Every expectation is
parameterized by a density h in the relative commutant: positive invertible
with E_tau(h) = 1, via

    E_h(x) = E_tau(h^(1/2) x h^(1/2)) = E_tau(h x),

the two expressions agreeing because h commutes with iota(N) and E_tau is
the Tr_s-orthogonal projection.  The linear form makes solve_density (the
inverse parameterization) a plain least-squares problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    EPS_NUM,
    RANK_CUTOFF,
    AlgebraElement,
    TraceVector,
    is_positive,
    left_mult_matrix,
    orthonormalize_coords,
    positive_power,
    right_mult_matrix,
)
from .errors import ToleranceError
from .inclusion import Inclusion


class ConditionalExpectation:
    """A verified expectation, stored as a dim_M x dim_M matrix on coordinates."""

    def __init__(self, inclusion, matrix, reference, h=None, verify=True, tol=EPS_NUM):
        self.inclusion = inclusion
        self.matrix = np.asarray(matrix, dtype=complex)
        self.reference = reference
        self.h = h
        if self.matrix.shape != (inclusion.M.dim, inclusion.M.dim):
            raise ValueError("expectation matrix has wrong shape")
        if verify:
            report = verify_expectation(self, tol=tol)
            if not report.ok(tol):
                raise ToleranceError(f"not a conditional expectation: {report}")

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        if x.algebra != self.inclusion.M:
            raise ValueError("element is not in M")
        return self.inclusion.M.from_coords(self.matrix @ x.coords())

    def restrict_to_n(self, x: AlgebraElement) -> AlgebraElement:
        """iota^{-1} E(x), an element of N."""
        return self.inclusion.unembed(self(x), tol=1e-7)

    def distance(self, other: "ConditionalExpectation") -> float:
        return float(np.linalg.norm(self.matrix - other.matrix, 2))

    def __repr__(self):
        return f"ConditionalExpectation({self.inclusion!r})"


@dataclass
class ExpectationReport:
    unital: float
    idempotent: float
    range_resid: float
    range_rank_ok: bool
    bimodular: float
    cp_min_eig: float
    faithful_min_eig: float

    def ok(self, tol=EPS_NUM) -> bool:
        return (
            self.unital <= tol
            and self.idempotent <= tol
            and self.range_resid <= tol
            and self.range_rank_ok
            and self.bimodular <= tol
            and self.cp_min_eig >= -tol
            and self.faithful_min_eig > RANK_CUTOFF
        )

    def __str__(self):
        return (
            f"unital={self.unital:.2e} idem={self.idempotent:.2e} "
            f"range={self.range_resid:.2e} rank_ok={self.range_rank_ok} "
            f"bimod={self.bimodular:.2e} cp_min={self.cp_min_eig:.2e} "
            f"faithful_min={self.faithful_min_eig:.2e}"
        )


def trace_expectation(inc: Inclusion, s: TraceVector = None) -> ConditionalExpectation:
    """The unique Tr_s-preserving expectation onto iota(N)."""
    if s is None:
        s = TraceVector(inc.M)
    if s.algebra != inc.M:
        raise ValueError("trace vector must live on M")
    w = s.metric_diagonal()
    b = inc.iota_matrix
    gram = b.conj().T @ (w[:, None] * b)
    proj = b @ np.linalg.solve(gram, b.conj().T * w[None, :])
    e = ConditionalExpectation(inc, proj, s, h=inc.M.identity(), verify=True)
    return e


def from_density(inc: Inclusion, s: TraceVector, h: AlgebraElement,
                 tol=EPS_NUM, verify=True, _etau=None) -> ConditionalExpectation:
    """E_h(x) = E_tau(h x) for a density h in the relative commutant.

    Requires h positive invertible with E_tau(h) = 1 within tol.
    """
    if h.algebra != inc.M:
        raise ValueError("density must be an element of M")
    etau = _etau if _etau is not None else trace_expectation(inc, s)
    if verify:
        comm = inc.relative_commutant()
        cm = np.array([c.coords() for c in comm])
        v = h.coords()
        proj = cm.conj() @ v  # comm basis is Tr-orthonormal
        resid = np.linalg.norm(cm.T @ proj - v)
        if resid > tol * max(1.0, np.linalg.norm(v)):
            raise ValueError(f"density is not in the relative commutant: residual {resid:.3e}")
        rep = is_positive(h, eps=tol)
        if not rep.ok or rep.min_eig <= RANK_CUTOFF * max(1.0, h.norm()):
            raise ValueError(f"density is not positive invertible (min eig {rep.min_eig:.3e})")
        unit = (etau(h) - inc.M.identity()).norm()
        if unit > tol * 10:
            raise ValueError(f"density is not normalized: ||E_tau(h)-1|| = {unit:.3e}")
    matrix = etau.matrix @ left_mult_matrix(h)
    return ConditionalExpectation(inc, matrix, s, h=h, verify=verify)


def verify_expectation(e: ConditionalExpectation, tol=EPS_NUM) -> ExpectationReport:
    """Residual report for the expectation axioms (report-only)."""
    inc = e.inclusion
    m_alg, n_alg = inc.M, inc.N
    one = m_alg.identity()
    unital = (m_alg.from_coords(e.matrix @ one.coords()) - one).norm()
    idem = float(np.linalg.norm(e.matrix @ e.matrix - e.matrix, 2))

    # range must be exactly iota(N): contained in it and of full rank on it
    b = inc.iota_matrix
    p = b @ np.linalg.solve(b.conj().T @ b, b.conj().T)
    range_resid = float(
        np.linalg.norm(e.matrix - p @ e.matrix, 2) / max(1.0, np.linalg.norm(e.matrix, 2))
    )
    sv = np.linalg.svd(e.matrix, compute_uv=False)
    rank = int(np.sum(sv > RANK_CUTOFF * max(sv[0], 1.0)))
    range_rank_ok = rank == n_alg.dim

    bimod = 0.0
    nb = n_alg.basis()
    mb = m_alg.basis()
    for n1 in nb:
        left = left_mult_matrix(inc.apply(n1))
        for n2 in nb:
            right = right_mult_matrix(inc.apply(n2))
            # E(i(n1) m i(n2)) - i(n1) E(m) i(n2), as matrices on coords
            diff = e.matrix @ left @ right - left @ e.matrix @ right
            bimod = max(bimod, float(np.linalg.norm(diff, 2)))

    cp_min = _choi_min_eig(e)
    faith = _faithfulness_min_eig(e)
    return ExpectationReport(unital, idem, range_resid, range_rank_ok, bimod, cp_min, faith)


def _choi_min_eig(e: ConditionalExpectation) -> float:
    """Min eigenvalue of the Choi matrix of E extended to B(H) by pinching."""
    inc = e.inclusion
    n = inc.M.hilbert_dim
    choi = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[i, j] = 1.0
            out = e(_pinch(inc.M, unit)).block_diag()
            choi[i * n:(i + 1) * n, j * n:(j + 1) * n] = out
    w = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    return float(w[0])


def _pinch(m_alg, full_matrix) -> AlgebraElement:
    blocks = []
    off = 0
    for d in m_alg.block_dims:
        blocks.append(full_matrix[off:off + d, off:off + d])
        off += d
    return AlgebraElement(m_alg, blocks)


def _faithfulness_min_eig(e: ConditionalExpectation) -> float:
    """Min eigenvalue of the Gram form (x, y) -> Tr E(x* y)."""
    basis = e.inclusion.M.basis()
    k = len(basis)
    g = np.zeros((k, k), dtype=complex)
    for j, bj in enumerate(basis):
        for i, bi in enumerate(basis):
            val = e(bi.adjoint() * bj)
            g[i, j] = sum(np.trace(blk) for blk in val.blocks)
    w = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    return float(w[0])


def multiplicative_domain(e: ConditionalExpectation, tol=RANK_CUTOFF):
    """Basis of {x in M : E(xm) = E(x)E(m) for all m}; spans exactly iota(N)."""
    inc = e.inclusion
    rows = []
    for b in inc.M.basis():
        rb = right_mult_matrix(b)
        eb = right_mult_matrix(e(b))
        rows.append(e.matrix @ rb - eb @ e.matrix)
    stacked = np.vstack(rows)
    u, s, vh = np.linalg.svd(stacked)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > max(tol * max(smax, 1.0), 1e-8)))
    null = vh[rank:].conj()
    return [inc.M.from_coords(v) for v in null]


def solve_density(e: ConditionalExpectation, tol=1e-8) -> AlgebraElement:
    """The unique h with E = E_h w.r.t. e.reference, by linear solve."""
    inc = e.inclusion
    etau = trace_expectation(inc, e.reference)
    comm = inc.relative_commutant()
    basis = inc.M.basis()
    cols = []
    for c in comm:
        block = [etau(c * b).coords() for b in basis]
        cols.append(np.concatenate(block))
    a = np.array(cols, dtype=complex).T
    target = np.concatenate([e(b).coords() for b in basis])
    coeff, *_ = np.linalg.lstsq(a, target, rcond=None)
    resid = np.linalg.norm(a @ coeff - target)
    if resid > tol * max(1.0, np.linalg.norm(target)):
        raise ToleranceError(
            f"no density reproduces this map w.r.t. the reference trace: residual {resid:.3e}"
        )
    h = inc.M.zero()
    for w, c in zip(coeff, comm):
        h = h + w * c
    h = 0.5 * (h + h.adjoint())
    return h


def symmetric_density_map(inc, s, h) -> np.ndarray:
    """Matrix of x -> E_tau(h^(1/2) x h^(1/2)), for cross-checking from_density."""
    etau = trace_expectation(inc, s)
    r = positive_power(h, 0.5)
    return etau.matrix @ left_mult_matrix(r) @ right_mult_matrix(r)


def normalize_density(inc: Inclusion, etau: ConditionalExpectation,
                      h: AlgebraElement) -> AlgebraElement:
    """Rescale a positive element of the commutant so that E_tau(h) = 1.

    E_tau(h) lies in iota(Z(N)), which commutes with the relative commutant,
    so h * iota(E_tau-part)^{-1} stays positive and in the commutant.
    """
    from .algebra import CentralElement

    z = CentralElement.from_element(inc.unembed(etau(h)))
    h = h * inc.apply(z.inverse().to_element())
    return 0.5 * (h + h.adjoint())


def random_expectation(inc: Inclusion, s: TraceVector, rng,
                       spread=1.0) -> ConditionalExpectation:
    """A random verified expectation: normalized exp of a random Hermitian
    element of the relative commutant."""
    herm = inc.relative_commutant_hermitian_basis()
    a = inc.M.zero()
    for hb in herm:
        a = a + (spread * float(rng.standard_normal())) * hb
    etau = trace_expectation(inc, s)
    h = normalize_density(inc, etau, hermitian_exp(a))
    return from_density(inc, s, h)


def hermitian_exp(a: AlgebraElement) -> AlgebraElement:
    blocks = []
    for b in a.blocks:
        w, u = np.linalg.eigh(0.5 * (b + b.conj().T))
        blocks.append((u * np.exp(w)) @ u.conj().T)
    return AlgebraElement(a.algebra, blocks)
