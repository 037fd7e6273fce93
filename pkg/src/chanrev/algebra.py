"""Finite-dimensional *-subalgebras of ``M_d``.

Subalgebras are represented by a Hilbert-Schmidt orthonormal basis.  Linear
spans are computed with an SVD and a relative rank threshold, so every
membership decision in this module is "HS-projection residual at most
``MEMBERSHIP_RTOL * ||x||``".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .channels import Channel, vec
from .errors import ClosureNotReached, NumericalDegeneracy, NotInvertible

MEMBERSHIP_RTOL = 1e-8
RANK_RTOL = 1e-8
DEFAULT_T_GRID = tuple(
    s * t for t in (0.25, 0.5, 1.0, 2.0, np.e, np.pi) for s in (1.0, -1.0)
)


def _vecs(mats) -> np.ndarray:
    """Stack matrices as columns of row-major vectorizations."""
    return np.column_stack([np.asarray(m, dtype=complex).reshape(-1) for m in mats])


def orthonormal_span(mats, dim: int, rtol: float = RANK_RTOL) -> np.ndarray:
    """HS-orthonormal basis (shape ``(k, dim, dim)``) of the span of ``mats``."""
    mats = list(mats)
    if not mats:
        return np.zeros((0, dim, dim), dtype=complex)
    a = _vecs(mats)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, dim, dim), dtype=complex)
    k = int(np.sum(s > rtol * s[0]))
    return u[:, :k].T.reshape(k, dim, dim)


@dataclass(frozen=True)
class AlgebraBasis:
    ambient_dim: int
    basis: np.ndarray = field(repr=False)
    contains_identity: bool = True

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Basis as columns of row-major vectorizations."""
        return self.basis.reshape(self.dimension, -1).T

    def project(self, x) -> np.ndarray:
        b = self.matrix
        return (b @ (la.dag(b) @ np.asarray(x, dtype=complex).reshape(-1))).reshape(
            self.ambient_dim, self.ambient_dim
        )

    def residual(self, x) -> float:
        """HS distance from ``x`` to the span."""
        x = np.asarray(x, dtype=complex)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.residual(x) <= rtol * max(np.linalg.norm(x), 1e-300)

    def closure_residuals(self) -> tuple[float, float]:
        """Largest relative residuals of ``b_i*`` and ``b_i b_j`` from the span."""
        star = max((self.residual(la.dag(b)) for b in self.basis), default=0.0)
        prod = max(
            (self.residual(bi @ bj) for bi in self.basis for bj in self.basis), default=0.0
        )
        return star, prod


def full_algebra(d: int) -> AlgebraBasis:
    return AlgebraBasis(d, np.eye(d * d, dtype=complex).reshape(d * d, d, d))


def scalars(d: int) -> AlgebraBasis:
    return AlgebraBasis(d, (np.eye(d, dtype=complex) / np.sqrt(d))[None])


def generated_algebra(gens: Sequence[np.ndarray], ambient_dim: int) -> AlgebraBasis:
    """Smallest unital *-subalgebra containing ``gens``.

    The span is grown by left multiplication with the generators and their
    adjoints until its dimension stops changing; a span that contains ``I``
    and is invariant under those multiplications contains every word.
    """
    d = ambient_dim
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if any(g.shape != (d, d) for g in gens):
        raise ValueError("generators must be square matrices of the ambient dimension")
    letters = [g for g in gens if np.linalg.norm(g) > 0]
    letters += [la.dag(g) for g in letters]
    basis = orthonormal_span([np.eye(d)] + letters, d)
    for _ in range(2 * d * d):
        grown = orthonormal_span(
            list(basis) + [g @ b for g in letters for b in basis], d
        )
        if grown.shape[0] == basis.shape[0]:
            return AlgebraBasis(d, grown)
        basis = grown
    raise ClosureNotReached("algebra closure still growing after iteration cap")


def commutant(alg: AlgebraBasis, within: AlgebraBasis | None = None) -> AlgebraBasis:
    """Relative commutant ``{x in within : x b = b x for all b in alg}``."""
    d = alg.ambient_dim
    within = within or full_algebra(d)
    eye = np.eye(d)
    # row-major vec: vec(x b - b x) = (I (x) b^T - b (x) I) vec(x)
    blocks = [np.kron(eye, b.T) - np.kron(b, eye) for b in alg.basis]
    stacked = np.vstack(blocks) @ within.matrix
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    scale = max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > RANK_RTOL * scale))
    kernel = la.dag(vh[rank:])  # coefficient vectors over ``within``
    mats = (within.matrix @ kernel).T.reshape(-1, d, d)
    return AlgebraBasis(d, orthonormal_span(list(mats), d))


def center(alg: AlgebraBasis) -> AlgebraBasis:
    return commutant(alg, within=alg)


def same_subspace(a: AlgebraBasis, b: AlgebraBasis, atol: float = 1e-8) -> bool:
    if a.dimension != b.dimension:
        return False
    return all(a.residual(x) <= atol for x in b.basis)


@dataclass(frozen=True)
class BlockStructure:
    """``U* alg U = (+)_k M_{n_k} (x) I_{m_k}``; columns of ``unitary`` are ordered block by block."""

    unitary: np.ndarray = field(repr=False)
    blocks: tuple[tuple[int, int], ...]
    central_projections: tuple = field(repr=False, default=())

    def offsets(self) -> list[int]:
        out, pos = [], 0
        for n, m in self.blocks:
            out.append(pos)
            pos += n * m
        return out

    def components(self, x) -> list[np.ndarray]:
        """The ``n_k x n_k`` factors of an algebra element ``x``."""
        y = la.dag(self.unitary) @ np.asarray(x, dtype=complex) @ self.unitary
        comps = []
        for (n, m), off in zip(self.blocks, self.offsets()):
            blk = y[off:off + n * m, off:off + n * m].reshape(n, m, n, m)
            comps.append(np.einsum("ikjk->ij", blk) / m)
        return comps

    def assemble(self, comps) -> np.ndarray:
        d = self.unitary.shape[0]
        y = np.zeros((d, d), dtype=complex)
        for (n, m), off, c in zip(self.blocks, self.offsets(), comps):
            y[off:off + n * m, off:off + n * m] = np.kron(c, np.eye(m))
        return self.unitary @ y @ la.dag(self.unitary)

    def reconstruction_residual(self, alg: AlgebraBasis) -> float:
        return max(
            float(np.linalg.norm(self.assemble(self.components(b)) - b)) for b in alg.basis
        )


def _random_element(alg: AlgebraBasis, rng, hermitian: bool = True) -> np.ndarray:
    coeffs = rng.standard_normal(alg.dimension) + 1j * rng.standard_normal(alg.dimension)
    x = np.tensordot(coeffs, alg.basis, axes=1)
    return 0.5 * (x + la.dag(x)) if hermitian else x


def _eigen_groups(h: np.ndarray, tol: float) -> list[np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (h + la.dag(h)))
    groups, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            groups.append(v[:, start:k])
            start = k
    return groups


def structure_decomposition(alg: AlgebraBasis, seed: int = 12345) -> BlockStructure:
    """Wedderburn decomposition of a unital *-subalgebra.

    Minimal central projections come from the spectral projections of a
    random Hermitian central element; inside each block a random Hermitian
    element gives ``n_k`` minimal projections of rank ``m_k``, and random
    elements ``e_j a e_1`` supply the matrix units that align them.
    """
    d = alg.ambient_dim
    rng = np.random.default_rng(seed)
    zalg = center(alg)
    h = _random_element(zalg, rng)
    scale = max(1.0, float(np.linalg.norm(h, 2)))
    central = _eigen_groups(h, 1e-6 * scale)
    columns, blocks, zs = [], [], []
    for w in central:
        z = w @ la.dag(w)
        if not zalg.contains(z, 1e-6):
            raise NumericalDegeneracy("spectral projection of a central element left the center")
        block_alg = orthonormal_span([z @ b for b in alg.basis], d)
        dim_k = block_alg.shape[0]
        n = int(round(np.sqrt(dim_k)))
        r = w.shape[1]
        if n * n != dim_k or r % n:
            raise NumericalDegeneracy(f"block of dimension {dim_k} and rank {r} is not M_n (x) I_m")
        m = r // n
        balg = AlgebraBasis(d, block_alg)
        hk = la.dag(w) @ _random_element(balg, rng) @ w
        hscale = max(1.0, float(np.linalg.norm(hk, 2)))
        minimal = _eigen_groups(hk, 1e-6 * hscale)
        if len(minimal) != n or any(g.shape[1] != m for g in minimal):
            raise NumericalDegeneracy("could not separate minimal projections in a block")
        e = [w @ g for g in minimal]  # ambient isometries onto ranges of e_j
        e1 = e[0]
        cols = [None] * n
        cols[0] = e1
        for j in range(1, n):
            for _ in range(10):
                a = _random_element(balg, rng, hermitian=False)
                x = e[j] @ la.dag(e[j]) @ a @ e1  # maps range(e_1) into range(e_j)
                norm = np.sqrt(np.real(np.trace(la.dag(x) @ x)) / m)
                if norm > 1e-6:
                    cols[j] = x / norm
                    break
            else:
                raise NumericalDegeneracy("failed to build matrix units")
        columns.append(np.hstack(cols))
        blocks.append((n, m))
        zs.append(z)
    u = np.hstack(columns)
    if u.shape != (d, d) or not np.allclose(la.dag(u) @ u, np.eye(d), atol=1e-8):
        raise NumericalDegeneracy("block unitary is not unitary; algebra may not be unital")
    return BlockStructure(u, tuple(blocks), tuple(zs))


def trace_conditional_expectation(alg: AlgebraBasis) -> Channel:
    """The trace-preserving conditional expectation (HS projection) onto ``alg``."""
    d = alg.ambient_dim
    # switch to the column-major convention used by Channel
    cols = np.column_stack([vec(b) for b in alg.basis])
    return Channel(cols @ la.dag(cols), d, d, label="conditional_expectation")


def modular_invariance_check(
    rho, alg: AlgebraBasis, t_grid=DEFAULT_T_GRID, threshold: float = MEMBERSHIP_RTOL
) -> tuple[bool, float]:
    """Test ``rho^{it} alg rho^{-it} subset alg`` on a grid of ``t``.

    Returns ``(residual <= threshold, residual)``; the residual is relative
    to ``||b||`` and maximized over the grid and the basis.
    """
    rho = la.hermitian_part(rho)
    w, v = la.eigh(rho)
    if w[-1] <= la.SUPPORT_CUTOFF * w[0]:
        raise NotInvertible("rho must be invertible")
    worst = 0.0
    for t in t_grid:
        u = (v * np.exp(1j * t * np.log(w))) @ la.dag(v)
        for b in alg.basis:
            y = u @ b @ la.dag(u)
            worst = max(worst, alg.residual(y) / np.linalg.norm(b))
    return worst <= threshold, worst
