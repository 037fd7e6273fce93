"""Dense Hermitian linear algebra used throughout chanrev.

Everything here works on plain ``numpy`` arrays.  Eigenvalues that lie
within ``group_tol`` of each other are merged into one spectral projection,
and "support" always means the span of eigenvectors whose eigenvalue exceeds
``cutoff * lambda_max``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    NotHermitian,
    NotPositive,
    NumericalFailure,
    SizeCapExceeded,
)

ATOL = 1e-10
GROUP_RTOL = 1e-8
SUPPORT_CUTOFF = 1e-10
TENSOR_SIZE_CAP = 4096


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("matrix has non-finite entries")
    return m


def _square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def is_hermitian(a, atol: float = ATOL) -> bool:
    m = _square(a)
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return bool(np.max(np.abs(m - dag(m)), initial=0.0) <= atol * scale)


def hermitian_part(a, atol: float = ATOL) -> np.ndarray:
    """Return ``(a + a*)/2`` after checking that ``a`` is Hermitian."""
    m = _square(a)
    if not is_hermitian(m, atol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    return 0.5 * (m + dag(m))


def eigh(a, atol: float = ATOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors of a Hermitian matrix."""
    h = hermitian_part(a, atol)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(str(exc)) from exc
    return w[::-1], v[:, ::-1]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Grouped spectral decomposition ``M = sum_i eigenvalues[i] * projections[i]``.

    ``vectors[i]`` holds an orthonormal basis (as columns) of the range of
    ``projections[i]``.
    """

    eigenvalues: np.ndarray
    projections: list[np.ndarray]
    vectors: list[np.ndarray]
    group_tol: float

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.projections))

    @property
    def multiplicities(self) -> list[int]:
        return [v.shape[1] for v in self.vectors]


def hermitian_spectral(
    m, group_tol: float | None = None, atol: float = ATOL
) -> SpectralDecomposition:
    """Spectral decomposition with eigenvalue grouping.

    Consecutive (sorted) eigenvalues closer than ``group_tol`` are merged,
    which is the transitive closure of the pairwise rule.  The default
    ``group_tol`` is ``1e-8`` times the spectral radius.
    """
    w, v = eigh(m, atol)
    radius = float(np.max(np.abs(w), initial=0.0))
    if group_tol is None:
        group_tol = GROUP_RTOL * radius if radius > 0 else atol
    if group_tol < 0:
        raise ValueError("group_tol must be non-negative")
    groups: list[list[int]] = [[0]]
    for k in range(1, len(w)):
        if w[groups[-1][-1]] - w[k] <= group_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    eigenvalues = np.array([w[g].mean() for g in groups])
    vectors = [v[:, g] for g in groups]
    projections = [vec @ dag(vec) for vec in vectors]
    return SpectralDecomposition(eigenvalues, projections, vectors, float(group_tol))


@dataclass(frozen=True)
class SupportProjection:
    projection: np.ndarray
    isometry: np.ndarray
    rank: int
    cutoff: float


def support_projection(
    a, cutoff: float = SUPPORT_CUTOFF, atol: float = ATOL
) -> SupportProjection:
    """Projection onto the support of a positive semidefinite matrix."""
    w, v = eigh(a, atol)
    lam_max = float(w[0]) if len(w) else 0.0
    if w[-1] < -atol * max(1.0, abs(lam_max)):
        raise NotPositive(f"minimum eigenvalue {w[-1]:.3e} is negative")
    keep = w > cutoff * lam_max if lam_max > 0 else np.zeros(len(w), bool)
    iso = v[:, keep]
    return SupportProjection(iso @ dag(iso), iso, int(keep.sum()), cutoff)


def psd_power(
    a, power: complex, cutoff: float = SUPPORT_CUTOFF, atol: float = ATOL
) -> np.ndarray:
    """``a**power`` on the support of ``a``; zero on its kernel.

    For ``power == 0`` this gives ``supp a``, and negative powers give the
    generalized (Moore-Penrose) inverse powers.
    """
    w, v = eigh(a, atol)
    lam_max = float(w[0]) if len(w) else 0.0
    if w[-1] < -atol * max(1.0, abs(lam_max)):
        raise NotPositive(f"minimum eigenvalue {w[-1]:.3e} is negative")
    keep = w > cutoff * lam_max if lam_max > 0 else np.zeros(len(w), bool)
    vals = np.zeros(len(w), dtype=complex)
    vals[keep] = w[keep].astype(complex) ** power
    return (v * vals) @ dag(v)


def pinv_psd(c, cutoff: float = SUPPORT_CUTOFF, atol: float = ATOL) -> np.ndarray:
    return psd_power(c, -1.0, cutoff, atol)


def matrix_function(
    f: Callable[[np.ndarray], np.ndarray],
    a,
    on_support: bool = False,
    cutoff: float = SUPPORT_CUTOFF,
    group_tol: float | None = None,
    atol: float = ATOL,
) -> np.ndarray:
    """Apply ``f`` through the grouped spectral decomposition of ``a``.

    With ``on_support=True`` the matrix must be PSD and eigenvalues at or
    below ``cutoff * lambda_max`` are mapped to zero without calling ``f``
    (the ``x**0 = supp x`` convention).
    """
    sd = hermitian_spectral(a, group_tol, atol)
    lam = sd.eigenvalues
    out = np.zeros(lam.shape, dtype=complex)
    mask = np.ones(len(lam), bool)
    if on_support:
        if lam[-1] < -atol * max(1.0, abs(lam[0])):
            raise NotPositive("on_support requires a PSD matrix")
        mask = lam > cutoff * lam[0] if lam[0] > 0 else np.zeros(len(lam), bool)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(lam[mask]), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise DomainError("function is undefined on part of the spectrum")
    out[mask] = vals
    dim = sd.projections[0].shape[0]
    result = np.zeros((dim, dim), dtype=complex)
    for val, p in zip(out, sd.projections):
        result += val * p
    return result


def sqrtm_psd(a, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    return psd_power(a, 0.5, cutoff)


def logm_psd(a, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """Matrix logarithm restricted to the support (zero on the kernel)."""
    return matrix_function(np.log, a, on_support=True, cutoff=cutoff)


def trace_norm(a) -> float:
    m = as_matrix(a)
    if m.shape[0] == m.shape[1] and is_hermitian(m):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + dag(m))))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def operator_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), 2))


def min_eigenvalue(a) -> float:
    h = hermitian_part(a)
    return float(np.linalg.eigvalsh(h)[0])


def block_positive(a, b, c, atol: float = ATOL, cutoff: float = SUPPORT_CUTOFF) -> bool:
    """Positivity of ``[[a, b], [b*, c]]`` via the generalized Schur complement.

    True iff ``c >= 0``, the range of ``b*`` lies in the range of ``c`` and
    ``a - b c^- b* >= 0``, where ``c^-`` uses the same cutoff rule as
    :func:`support_projection`.
    """
    a, b, c = as_matrix(a), as_matrix(b), as_matrix(c)
    if a.shape[0] != a.shape[1] or c.shape[0] != c.shape[1]:
        raise DimensionMismatch("diagonal blocks must be square")
    if b.shape != (a.shape[0], c.shape[0]):
        raise DimensionMismatch(f"off-diagonal block has shape {b.shape}")
    scale = max(1.0, *(float(np.max(np.abs(x), initial=0.0)) for x in (a, b, c)))
    tol = atol * scale
    if not (is_hermitian(a, atol) and is_hermitian(c, atol)):
        raise NotHermitian("diagonal blocks must be Hermitian")
    w, v = eigh(c, atol)
    if w[-1] < -tol:
        return False
    lam_max = max(float(w[0]), 0.0)
    keep = w > cutoff * lam_max if lam_max > 0 else np.zeros(len(w), bool)
    kernel = v[:, ~keep]
    if kernel.shape[1] and np.max(np.abs(b @ kernel)) > np.sqrt(tol):
        return False
    vk = v[:, keep]
    schur = a - (b @ vk) @ np.diag(1.0 / w[keep]) @ dag(b @ vk)
    return bool(np.linalg.eigvalsh(0.5 * (schur + dag(schur)))[0] >= -tol)


def tensor_power(a, n: int, size_cap: int = TENSOR_SIZE_CAP) -> np.ndarray:
    m = as_matrix(a)
    if n < 1:
        raise ValueError("n must be at least 1")
    if max(m.shape) ** n > size_cap:
        raise SizeCapExceeded(f"{m.shape[0]}**{n} rows exceeds the cap {size_cap}")
    return reduce(np.kron, [m] * n)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr a* b``."""
    return complex(np.vdot(as_matrix(a), as_matrix(b)))


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a
