"""Finite-dimensional von Neumann algebras as direct sums of matrix blocks.

An algebra is a list of block dimensions (n_1, ..., n_a); an element is one
complex n_i x n_i matrix per block.  Coordinates of an element are the
row-major vecs of its blocks, concatenated in block order, so the plain
Hilbert-Schmidt inner product Tr(x*y) is the standard one on coordinates.

This module also owns the global numerical policy: tolerance for identity
checks, the rank cutoff used whenever a spectral decomposition decides
invertibility, and the convention that Hermitian eigendecompositions are the
canonical spectral tool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ToleranceError

# Global numerical policy: double precision, desk-scale well-conditioned
# problems.  EPS_NUM is the relative tolerance for identity checks; singular
# values / eigenvalues below RANK_CUTOFF times the largest are treated as 0.
EPS_NUM = 1e-9
RANK_CUTOFF = 1e-10


class MultiMatrixAlgebra:
    """A finite direct sum of full complex matrix blocks.

    Immutable.  Block order is part of the data and is never re-sorted.
    """

    def __init__(self, block_dims, label=""):
        dims = tuple(int(d) for d in block_dims)
        if len(dims) == 0:
            raise ValueError("block_dims must be non-empty")
        if any(d < 1 for d in dims):
            raise ValueError(f"block dimensions must be >= 1, got {dims}")
        self.block_dims = dims
        self.label = str(label)
        self.nblocks = len(dims)
        #: linear dimension sum n_i^2 (= length of coordinate vectors)
        self.dim = int(sum(d * d for d in dims))
        #: dimension of the defining Hilbert space (+) C^{n_i}
        self.hilbert_dim = int(sum(dims))
        # offsets of each block in the coordinate vector
        self._offsets = np.cumsum([0] + [d * d for d in dims])

    def __repr__(self):
        return f"MultiMatrixAlgebra({list(self.block_dims)}, {self.label!r})"

    def __eq__(self, other):
        return (
            isinstance(other, MultiMatrixAlgebra)
            and self.block_dims == other.block_dims
            and self.label == other.label
        )

    def __hash__(self):
        return hash((self.block_dims, self.label))

    # ---- constructors of elements ----

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self, blocks)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((d, d), dtype=complex) for d in self.block_dims])

    def identity(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(d, dtype=complex) for d in self.block_dims])

    def from_coords(self, v) -> "AlgebraElement":
        v = np.asarray(v, dtype=complex).ravel()
        if v.shape[0] != self.dim:
            raise ValueError(f"coordinate length {v.shape[0]} != algebra dimension {self.dim}")
        blocks = []
        for k, d in enumerate(self.block_dims):
            blocks.append(v[self._offsets[k]:self._offsets[k + 1]].reshape(d, d))
        return AlgebraElement(self, blocks)

    def basis(self):
        """Deterministic ordered basis of matrix units, block-major then row-major."""
        out = []
        for k, d in enumerate(self.block_dims):
            for i in range(d):
                for j in range(d):
                    x = self.zero()
                    x.blocks[k][i, j] = 1.0
                    out.append(x)
        return out

    def basis_index(self, block, i, j) -> int:
        d = self.block_dims[block]
        return int(self._offsets[block]) + i * d + j

    def random_element(self, rng) -> "AlgebraElement":
        blocks = [
            (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
            for d in self.block_dims
        ]
        return AlgebraElement(self, blocks)

    def random_hermitian(self, rng) -> "AlgebraElement":
        x = self.random_element(rng)
        return (x + x.adjoint()) * 0.5

    def to_full_matrix_map(self):
        """Block-diagonal embedding of elements into B(C^hilbert_dim)."""
        return lambda x: x.block_diag()


class AlgebraElement:
    """One complex matrix per block of a MultiMatrixAlgebra."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra, blocks):
        blocks = [np.array(b, dtype=complex) for b in blocks]
        if len(blocks) != algebra.nblocks:
            raise ValueError("wrong number of blocks")
        for b, d in zip(blocks, algebra.block_dims):
            if b.shape != (d, d):
                raise ValueError(f"block shape {b.shape} does not match dimension {d}")
        self.algebra = algebra
        self.blocks = blocks

    # ---- linear structure ----

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.algebra, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.algebra, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)])
        return AlgebraElement(self.algebra, [other * b for b in self.blocks])

    def __rmul__(self, scalar):
        return AlgebraElement(self.algebra, [scalar * b for b in self.blocks])

    def __neg__(self):
        return (-1.0) * self

    def __matmul__(self, other):
        return self.__mul__(other)

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, [b.conj().T for b in self.blocks])

    # ---- data access ----

    def coords(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    def block_diag(self) -> np.ndarray:
        """The element as one block-diagonal matrix on C^hilbert_dim."""
        n = self.algebra.hilbert_dim
        out = np.zeros((n, n), dtype=complex)
        off = 0
        for b, d in zip(self.blocks, self.algebra.block_dims):
            out[off:off + d, off:off + d] = b
            off += d
        return out

    def norm(self) -> float:
        """Operator norm: max spectral norm over blocks."""
        return max(np.linalg.norm(b, 2) for b in self.blocks)

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.coords()))

    def is_hermitian(self, tol=EPS_NUM) -> bool:
        scale = max(self.norm(), 1.0)
        return all(np.linalg.norm(b - b.conj().T, 2) <= tol * scale for b in self.blocks)

    def _check(self, other):
        if self.algebra != other.algebra:
            raise ValueError(
                f"algebra mismatch: {self.algebra.label!r} vs {other.algebra.label!r}"
            )

    def __repr__(self):
        return f"<{self.algebra.label or 'element'}: {self.algebra.block_dims}>"


@dataclass(frozen=True)
class TraceVector:
    """Strictly positive weight per block, defining Tr_s(x) = sum_i s_i Tr(x_i)."""

    algebra: MultiMatrixAlgebra
    weights: tuple = None

    def __post_init__(self):
        w = self.weights
        if w is None:
            w = tuple(1.0 for _ in range(self.algebra.nblocks))
        else:
            w = tuple(float(v) for v in w)
        if len(w) != self.algebra.nblocks:
            raise ValueError("one weight per block required")
        if any(v <= 0 for v in w):
            raise ValueError("trace weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    def eval(self, x: AlgebraElement) -> complex:
        if x.algebra != self.algebra:
            raise ValueError("element does not belong to this trace's algebra")
        return complex(sum(s * np.trace(b) for s, b in zip(self.weights, x.blocks)))

    def inner(self, x: AlgebraElement, y: AlgebraElement) -> complex:
        return self.eval(x.adjoint() * y)

    def metric_diagonal(self) -> np.ndarray:
        """Diagonal of the coordinate Gram matrix of <x,y> = Tr_s(x*y)."""
        return np.concatenate(
            [np.full(d * d, s) for s, d in zip(self.weights, self.algebra.block_dims)]
        )


class CentralElement:
    """One scalar per block: an element of the center Z(A)."""

    __slots__ = ("algebra", "scalars")

    def __init__(self, algebra, scalars):
        scalars = np.asarray(scalars, dtype=complex).ravel()
        if scalars.shape[0] != algebra.nblocks:
            raise ValueError("one scalar per block required")
        self.algebra = algebra
        self.scalars = scalars

    def to_element(self) -> AlgebraElement:
        return AlgebraElement(
            self.algebra,
            [s * np.eye(d) for s, d in zip(self.scalars, self.algebra.block_dims)],
        )

    @staticmethod
    def from_element(x: AlgebraElement, tol=EPS_NUM) -> "CentralElement":
        """Project onto the center; raise if x is not central within tol."""
        scalars = [np.trace(b) / d for b, d in zip(x.blocks, x.algebra.block_dims)]
        z = CentralElement(x.algebra, scalars)
        resid = (x - z.to_element()).norm()
        scale = max(x.norm(), 1.0)
        if resid > tol * scale:
            raise ToleranceError(f"element is not central: residual {resid:.3e}")
        return z

    def real_values(self, tol=EPS_NUM):
        if np.max(np.abs(self.scalars.imag)) > tol * max(1.0, np.max(np.abs(self.scalars))):
            raise ToleranceError("central element has non-real block scalars")
        return self.scalars.real.copy()

    def norm(self) -> float:
        return float(np.max(np.abs(self.scalars)))

    def min_real(self) -> float:
        return float(np.min(self.real_values()))

    def inverse(self) -> "CentralElement":
        if np.min(np.abs(self.scalars)) < RANK_CUTOFF * max(1.0, self.norm()):
            raise ToleranceError("central element is not invertible")
        return CentralElement(self.algebra, 1.0 / self.scalars)

    def power(self, p: float) -> "CentralElement":
        vals = self.real_values()
        if np.min(vals) <= 0 and p != int(p) or (p < 0 and np.min(np.abs(vals)) < RANK_CUTOFF):
            raise ToleranceError("central power undefined for this element")
        return CentralElement(self.algebra, np.power(vals, p).astype(complex))

    def __mul__(self, other):
        if isinstance(other, CentralElement):
            return CentralElement(self.algebra, self.scalars * other.scalars)
        return CentralElement(self.algebra, self.scalars * other)

    __rmul__ = __mul__

    def __repr__(self):
        return f"CentralElement({np.round(self.scalars, 10).tolist()})"


# ---------------------------------------------------------------------------
# module operations
# ---------------------------------------------------------------------------

def make_algebra(block_dims, label="") -> MultiMatrixAlgebra:
    return MultiMatrixAlgebra(block_dims, label)


def center_of(algebra: MultiMatrixAlgebra):
    """Basis of the center: the indicator of each block."""
    basis = []
    for k in range(algebra.nblocks):
        scalars = np.zeros(algebra.nblocks)
        scalars[k] = 1.0
        basis.append(CentralElement(algebra, scalars))
    return basis


@dataclass
class PositivityReport:
    ok: bool
    min_eig: float
    block_min_eigs: list = field(default_factory=list)


def is_positive(x: AlgebraElement, eps=EPS_NUM) -> PositivityReport:
    """Positivity with a certificate: the minimal eigenvalue per block.

    Rejects inputs that are not Hermitian within eps (relative).
    """
    scale = max(x.norm(), 1.0)
    for b in x.blocks:
        if np.linalg.norm(b - b.conj().T, 2) > eps * scale:
            raise ValueError("is_positive requires a Hermitian input")
    mins = [float(np.linalg.eigvalsh(0.5 * (b + b.conj().T))[0]) for b in x.blocks]
    m = min(mins)
    return PositivityReport(ok=m >= -eps * scale, min_eig=m, block_min_eigs=mins)


def trace_eval(s: TraceVector, x: AlgebraElement) -> complex:
    return s.eval(x)


def positive_power(x: AlgebraElement, p: float, cutoff=RANK_CUTOFF) -> AlgebraElement:
    """x^p for positive x via per-block eigendecomposition.

    For p < 0 (and any non-integer p) the element must be invertible: the
    minimal eigenvalue has to clear the global rank cutoff.
    """
    blocks = []
    for b in x.blocks:
        h = 0.5 * (b + b.conj().T)
        if np.linalg.norm(b - h, 2) > EPS_NUM * max(1.0, np.linalg.norm(b, 2)):
            raise ValueError("positive_power requires a Hermitian input")
        w, u = np.linalg.eigh(h)
        top = max(np.max(w), 0.0)
        if np.min(w) <= cutoff * max(top, 1.0) and (p < 0 or p != int(p)):
            raise ToleranceError(
                f"positive_power({p}): eigenvalue {np.min(w):.3e} at or below rank cutoff"
            )
        blocks.append((u * np.power(np.clip(w, 0.0, None) if p >= 0 else w, p)) @ u.conj().T)
    return AlgebraElement(x.algebra, blocks)


def pseudo_inverse_sqrt(x: AlgebraElement, cutoff=RANK_CUTOFF):
    """(x^+)^(1/2) for positive x, zeroing eigenvalues under the cutoff.

    Returns the pseudo-inverse square root together with the support
    projection (both AlgebraElements).  Used by Pimsner-Popa Gram-Schmidt
    where trailing pivots may have sub-unit support.
    """
    inv_blocks, supp_blocks = [], []
    top = 0.0
    for b in x.blocks:
        w = np.linalg.eigvalsh(0.5 * (b + b.conj().T))
        top = max(top, float(np.max(w, initial=0.0)))
    thr = cutoff * max(top, 1.0)
    for b in x.blocks:
        h = 0.5 * (b + b.conj().T)
        w, u = np.linalg.eigh(h)
        keep = w > thr
        vals = np.where(keep, w, 1.0)
        inv_blocks.append((u * np.where(keep, 1.0 / np.sqrt(vals), 0.0)) @ u.conj().T)
        supp_blocks.append((u * np.where(keep, 1.0, 0.0)) @ u.conj().T)
    alg = x.algebra
    return AlgebraElement(alg, inv_blocks), AlgebraElement(alg, supp_blocks)


def left_mult_matrix(x: AlgebraElement) -> np.ndarray:
    """Matrix of y -> x y on coordinates (row-major vec per block)."""
    mats = [np.kron(b, np.eye(d)) for b, d in zip(x.blocks, x.algebra.block_dims)]
    return _block_diag(mats)


def right_mult_matrix(x: AlgebraElement) -> np.ndarray:
    """Matrix of y -> y x on coordinates."""
    mats = [np.kron(np.eye(d), b.T) for b, d in zip(x.blocks, x.algebra.block_dims)]
    return _block_diag(mats)


def _block_diag(mats):
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    off = 0
    for m in mats:
        k = m.shape[0]
        out[off:off + k, off:off + k] = m
        off += k
    return out


def orthonormalize_coords(vectors, cutoff=RANK_CUTOFF):
    """Orthonormal basis (rows) of the span of the given coordinate vectors."""
    a = np.asarray(vectors, dtype=complex)
    if a.size == 0:
        return np.zeros((0, 0), dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(s > cutoff * max(s[0], 1.0))) if s.size else 0
    return vh[:rank]
