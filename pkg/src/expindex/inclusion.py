"""Unital inclusions iota(N) < M of multi-matrix algebras.

An inclusion is specified by an a x b nonnegative integer matrix Lambda with
the unitality constraint sum_i Lambda[i,j] * n_i = m_j for every M-block j.
The canonical embedding places, inside M-block j, each N-block i repeated
Lambda[i,j] times along the diagonal, N-block-major.  Arbitrary embeddings
twisted by a unitary per M-block are accepted as well and validated by the
homomorphism residuals.
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    EPS_NUM,
    RANK_CUTOFF,
    AlgebraElement,
    MultiMatrixAlgebra,
    left_mult_matrix,
    orthonormalize_coords,
    right_mult_matrix,
)


class Inclusion:
    """A validated unital embedding iota: N -> M."""

    def __init__(self, N, M, lam, unitaries=None):
        self.N = N
        self.M = M
        self.lam = np.asarray(lam, dtype=int)
        if self.lam.shape != (N.nblocks, M.nblocks):
            raise ValueError(
                f"lambda must be {N.nblocks}x{M.nblocks}, got {self.lam.shape}"
            )
        if np.any(self.lam < 0):
            raise ValueError("lambda entries must be nonnegative")
        for j, m in enumerate(M.block_dims):
            got = int(np.dot(self.lam[:, j], N.block_dims))
            if got != m:
                raise ValueError(
                    f"unitality violated in M-block {j}: sum_i lambda[i,{j}]*n_i = {got} != {m}"
                )
        if np.any(self.lam.sum(axis=0) == 0):
            raise ValueError("lambda has a zero column (non-unital block)")
        if np.any(self.lam.sum(axis=1) == 0):
            raise ValueError("lambda has a zero row (iota would not be injective)")
        if unitaries is None:
            unitaries = [np.eye(m, dtype=complex) for m in M.block_dims]
        self.unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
        for u, m in zip(self.unitaries, M.block_dims):
            if u.shape != (m, m):
                raise ValueError("embedding unitary has wrong shape")
            if np.linalg.norm(u.conj().T @ u - np.eye(m), 2) > EPS_NUM:
                raise ValueError("embedding twist is not unitary")
        # iota as a dim_M x dim_N matrix on coordinates
        cols = [self.apply(b).coords() for b in N.basis()]
        self.iota_matrix = np.array(cols, dtype=complex).T
        self._validate_homomorphism()

    # ---- the embedding ----

    def apply(self, n: AlgebraElement) -> AlgebraElement:
        """iota(n) in M."""
        if n.algebra != self.N:
            raise ValueError("element is not in N")
        blocks = []
        for j, m in enumerate(self.M.block_dims):
            bj = np.zeros((m, m), dtype=complex)
            off = 0
            for i, ni in enumerate(self.N.block_dims):
                for _ in range(self.lam[i, j]):
                    bj[off:off + ni, off:off + ni] = n.blocks[i]
                    off += ni
            u = self.unitaries[j]
            blocks.append(u @ bj @ u.conj().T)
        return AlgebraElement(self.M, blocks)

    def unembed(self, m: AlgebraElement, tol=1e-8) -> AlgebraElement:
        """iota^{-1} on the range; raises if m is not in iota(N) within tol."""
        if m.algebra != self.M:
            raise ValueError("element is not in M")
        v = m.coords()
        c, *_ = np.linalg.lstsq(self.iota_matrix, v, rcond=None)
        resid = np.linalg.norm(self.iota_matrix @ c - v)
        if resid > tol * max(1.0, np.linalg.norm(v)):
            raise ValueError(f"element is not in iota(N): residual {resid:.3e}")
        return self.N.from_coords(c)

    def _validate_homomorphism(self):
        basis = self.N.basis()
        one = (self.apply(self.N.identity()) - self.M.identity()).norm()
        if one > EPS_NUM:
            raise ValueError(f"iota is not unital: residual {one:.3e}")
        rng = np.random.default_rng(7)
        for _ in range(4):
            x, y = self.N.random_element(rng), self.N.random_element(rng)
            mult = (self.apply(x * y) - self.apply(x) * self.apply(y)).norm()
            star = (self.apply(x.adjoint()) - self.apply(x).adjoint()).norm()
            scale = max(1.0, x.norm() * y.norm())
            if mult > EPS_NUM * scale or star > EPS_NUM * max(1.0, x.norm()):
                raise ValueError("embedding is not a *-homomorphism")

    # ---- derived structure ----

    def relative_commutant(self, tol=RANK_CUTOFF):
        """Orthonormal (plain Tr) basis of iota(N)' cap M by linear solve."""
        rows = []
        eye = np.eye(self.M.dim)
        for g in self.N.basis():
            ig = self.apply(g)
            rows.append(left_mult_matrix(ig) - right_mult_matrix(ig))
        stacked = np.vstack(rows)
        u, s, vh = np.linalg.svd(stacked)
        smax = s[0] if s.size else 0.0
        null_mask = s <= tol * max(smax, 1.0)
        nullity = self.M.dim - int(np.sum(~null_mask))
        basis = vh[self.M.dim - nullity:].conj()
        # rows of vh are orthonormal; conj needed because the nullspace is of
        # the linear (not conjugated) action on coordinates
        del eye
        return [self.M.from_coords(b) for b in basis]

    def relative_commutant_hermitian_basis(self):
        """Real-linear basis of Hermitian elements of the relative commutant."""
        comm = self.relative_commutant()
        cand = []
        for c in comm:
            cand.append(0.5 * (c + c.adjoint()))
            cand.append((-0.5j) * (c - c.adjoint()))
        coords = np.array([x.coords() for x in cand])
        # orthonormalize over the reals: stack real and imaginary parts
        real = np.hstack([coords.real, coords.imag])
        u, s, vh = np.linalg.svd(real, full_matrices=False)
        rank = int(np.sum(s > RANK_CUTOFF * max(s[0], 1.0))) if s.size else 0
        out = []
        for row in vh[:rank]:
            v = row[: self.M.dim] + 1j * row[self.M.dim:]
            x = self.M.from_coords(v)
            out.append(0.5 * (x + x.adjoint()))
        return out

    def central_intersection_dim(self) -> int:
        """dim( Z(iota(N)) cap Z(M) ) computed numerically on coordinates."""
        from .algebra import center_of

        span_a = np.array(
            [self.apply(c.to_element()).coords() for c in center_of(self.N)]
        )
        span_b = np.array([c.to_element().coords() for c in center_of(self.M)])
        ra = orthonormalize_coords(span_a).shape[0]
        rb = orthonormalize_coords(span_b).shape[0]
        rab = orthonormalize_coords(np.vstack([span_a, span_b])).shape[0]
        return ra + rb - rab

    def is_connected(self) -> bool:
        """Connectedness of the bipartite Lambda-graph.

        Cross-checked against dim(Z(iota(N)) cap Z(M)) = 1.
        """
        a, b = self.N.nblocks, self.M.nblocks
        seen_n, seen_m = {0}, set()
        frontier = [("n", 0)]
        while frontier:
            side, k = frontier.pop()
            if side == "n":
                for j in range(b):
                    if self.lam[k, j] > 0 and j not in seen_m:
                        seen_m.add(j)
                        frontier.append(("m", j))
            else:
                for i in range(a):
                    if self.lam[i, k] > 0 and i not in seen_n:
                        seen_n.add(i)
                        frontier.append(("n", i))
        graph_connected = len(seen_n) == a and len(seen_m) == b
        assert graph_connected == (self.central_intersection_dim() == 1)
        return graph_connected

    def __repr__(self):
        return f"Inclusion({self.N.label!r} < {self.M.label!r}, lambda={self.lam.tolist()})"


def build_inclusion(N, M, lam, unitaries=None) -> Inclusion:
    return Inclusion(N, M, lam, unitaries=unitaries)


def apply_embedding(inc: Inclusion, n: AlgebraElement) -> AlgebraElement:
    return inc.apply(n)


def relative_commutant(inc: Inclusion):
    return inc.relative_commutant()


def is_connected(inc: Inclusion) -> bool:
    return inc.is_connected()
