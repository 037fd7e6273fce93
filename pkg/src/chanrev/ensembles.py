"""Seeded random matrices, states and channels for property suites."""

from __future__ import annotations

import numpy as np

from .linalg import dag


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(d: int, rng) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(ginibre(d, d, rng))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_isometry(rows: int, cols: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rows, cols, rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng) -> np.ndarray:
    g = ginibre(d, d, rng)
    return 0.5 * (g + dag(g))


def random_state(d: int, rng, rank: int | None = None, env: int | None = None) -> np.ndarray:
    """Random density matrix ``G G* / Tr G G*``.

    ``G`` is ``d x k`` Ginibre with ``k = rank`` when given (rank-deficient
    states), otherwise ``k = env`` (default ``2 d``, a well-conditioned
    induced measure).
    """
    k = rank if rank is not None else (env if env is not None else 2 * d)
    g = ginibre(d, k, rng)
    rho = g @ dag(g)
    rho = 0.5 * (rho + dag(rho))
    return rho / np.trace(rho).real


def random_diagonal_state(d: int, rng) -> np.ndarray:
    p = rng_from(rng).dirichlet(np.ones(d) * 2.0)
    return np.diag(p).astype(complex)


def random_pure_state(d: int, rng) -> np.ndarray:
    psi = ginibre(d, 1, rng)
    psi /= np.linalg.norm(psi)
    return psi @ dag(psi)


def random_kraus(in_dim: int, out_dim: int, rng, n_kraus: int | None = None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map from a Stinespring isometry."""
    n_kraus = n_kraus or in_dim * out_dim
    if n_kraus * out_dim < in_dim:
        raise ValueError(f"a trace-preserving map {in_dim}->{out_dim} needs at least "
                         f"{-(-in_dim // out_dim)} Kraus operators")
    v = random_isometry(out_dim * n_kraus, in_dim, rng)
    return [v[k * out_dim:(k + 1) * out_dim, :] for k in range(n_kraus)]


def random_stochastic(n_in: int, n_out: int, rng) -> np.ndarray:
    """Column-stochastic matrix ``P[j, i] = p(j | i)``."""
    return rng_from(rng).dirichlet(np.ones(n_out), size=n_in).T
