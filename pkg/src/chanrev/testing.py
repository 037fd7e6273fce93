"""Binary quantum hypothesis testing: Neyman-Pearson tests, Bayes error,
trace-norm families, Chernoff and Hoeffding distances.

Throughout, ``rho`` is the null hypothesis and ``sigma`` the alternative.
Infinite distances are returned as ``math.inf``, never produced by overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import linalg as la
from .divergences import check_support, relative_entropy
from .errors import DimensionMismatch

KERNEL_RTOL = 1e-10
CHERNOFF_GRID = 64
HOEFFDING_CAP = 1.0 - 1e-6
HOEFFDING_GRID = 256


@dataclass
class NPTestResult:
    t: float
    P_plus: la.SupportProjection
    P_zero: la.SupportProjection
    trace_norm: float
    eigenvalues: np.ndarray

    @property
    def rank_plus(self) -> int:
        return self.P_plus.rank

    @property
    def rank_zero(self) -> int:
        return self.P_zero.rank


def np_test(sigma, rho, t: float, tol: float | None = None) -> NPTestResult:
    """Spectral split of ``sigma - t rho`` into positive part and kernel.

    Eigenvalues with ``|lambda| <= tol`` count as kernel; the default is
    ``1e-10 * max(1, ||sigma|| + t ||rho||)``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    s, r = la.hermitian_part(sigma), la.hermitian_part(rho)
    if s.shape != r.shape:
        raise DimensionMismatch("sigma and rho must have the same shape")
    x = s - t * r
    if tol is None:
        tol = KERNEL_RTOL * max(1.0, la.operator_norm(s) + t * la.operator_norm(r))
    w, v = la.eigh(x)
    plus, zero = w > tol, np.abs(w) <= tol
    vp, vz = v[:, plus], v[:, zero]
    return NPTestResult(
        t=float(t),
        P_plus=la.SupportProjection(vp @ la.dag(vp), vp, int(plus.sum()), tol),
        P_zero=la.SupportProjection(vz @ la.dag(vz), vz, int(zero.sum()), tol),
        trace_norm=float(np.sum(np.abs(w))),
        eigenvalues=w,
    )


def bayes_error(sigma, rho, s: float) -> float:
    """Minimal Bayes error ``(1 - ||(1-s) sigma - s rho||_1) / 2``."""
    if not 0.0 <= s < 1.0:
        raise ValueError("s must lie in [0, 1)")
    x = (1 - s) * la.hermitian_part(sigma) - s * la.hermitian_part(rho)
    return 0.5 * (1.0 - la.trace_norm(x))


def error_probabilities(sigma, rho, m) -> tuple[float, float]:
    """``alpha(M) = Tr rho M`` and ``beta(M) = Tr sigma (1 - M)``."""
    m = np.asarray(m)
    alpha = float(np.real(np.trace(la.hermitian_part(rho) @ m)))
    beta = float(np.real(np.trace(la.hermitian_part(sigma) @ (np.eye(m.shape[0]) - m))))
    return alpha, beta


def bayes_error_of_test(sigma, rho, s: float, m) -> float:
    alpha, beta = error_probabilities(sigma, rho, m)
    return s * alpha + (1 - s) * beta


def bayes_error_direct(sigma, rho, s: float) -> float:
    """Bayes error of the NP test ``P_{t,+}`` with ``t = s / (1 - s)``."""
    res = np_test(sigma, rho, s / (1.0 - s))
    return bayes_error_of_test(sigma, rho, s, res.P_plus.projection)


# -- Chernoff / Hoeffding -------------------------------------------------------


class PowerTraceCurve:
    """``u -> Tr a^u b^(1-u)`` for PSD ``a, b`` with ``x^0 = supp x``.

    Built once from both eigendecompositions:
    ``Q(u) = sum_ij a_i^u b_j^(1-u) |<phi_i|psi_j>|^2`` over the supports.
    """

    def __init__(self, a, b, cutoff: float = la.SUPPORT_CUTOFF):
        wa, va = la.eigh(a)
        wb, vb = la.eigh(b)
        ka = wa > cutoff * wa[0]
        kb = wb > cutoff * wb[0]
        ov = np.abs(la.dag(va[:, ka]) @ vb[:, kb]) ** 2
        la_, lb_ = np.log(wa[ka]), np.log(wb[kb])
        self._ov = ov.ravel()
        self._la = np.repeat(la_, kb.sum())
        self._lb = np.tile(lb_, ka.sum())
        nz = self._ov > 0
        self._ov, self._la, self._lb = self._ov[nz], self._la[nz], self._lb[nz]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self._ov.size == 0:
            return np.zeros_like(u)
        expo = np.multiply.outer(u, self._la) + np.multiply.outer(1.0 - u, self._lb)
        return np.exp(expo) @ self._ov

    def log(self, u):
        with np.errstate(divide="ignore"):
            return np.log(self(u))


@dataclass
class ChernoffResult:
    value: float
    minimizer_u: float
    min_power_trace: float


def _refine_min(func, grid: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    k = int(np.argmin(vals))
    best_u, best_v = float(grid[k]), float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(func, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12, "maxiter": 500})
        if res.fun < best_v:
            best_u, best_v = float(res.x), float(res.fun)
    return best_u, best_v


def chernoff(sigma, rho) -> ChernoffResult:
    """``C(sigma, rho) = -log min_{0<=u<=1} Tr sigma^u rho^(1-u)``.

    The minimum of the (log-convex) power-trace curve is bracketed on a
    64-point grid and refined with a bounded scalar minimizer.
    """
    q = PowerTraceCurve(sigma, rho)
    grid = np.linspace(0.0, 1.0, CHERNOFF_GRID + 1)
    vals = q(grid)
    if np.all(vals[1:-1] <= 0.0):
        return ChernoffResult(math.inf, 0.5, 0.0)
    u, v = _refine_min(lambda x: float(q(x)), grid, vals)
    if v <= 0.0:
        return ChernoffResult(math.inf, u, 0.0)
    return ChernoffResult(max(0.0, float(-math.log(v))), u, float(v))


@dataclass
class HoeffdingResult:
    value: float
    maximizer_u: float
    from_limit: bool
    capped_value: float
    cap_stable: bool


def _hoeffding_objective(q: PowerTraceCurve, r: float):
    def g(u):
        u = np.asarray(u, dtype=float)
        return (-u * r - q.log(u)) / (1.0 - u)
    return g


def hoeffding_details(sigma, rho, r: float, cap: float = HOEFFDING_CAP) -> HoeffdingResult:
    """``H_r(sigma, rho) = sup_{0<=u<1} (-u r - log Tr sigma^u rho^(1-u)) / (1 - u)``.

    The objective is quasi-concave in ``u``; it is maximized on
    ``[0, cap]`` (grid plus bounded refinement) and compared with its exact
    limit at ``u -> 1``: ``S(sigma, rho)`` when ``r = 0`` and
    ``supp sigma <= supp rho``, ``+inf`` when ``Tr sigma supp(rho) < e^-r``,
    and ``-inf`` otherwise.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    q = PowerTraceCurve(sigma, rho)
    g = _hoeffding_objective(q, r)
    grid = np.concatenate([np.linspace(0.0, 0.99, HOEFFDING_GRID), 1.0 - np.logspace(-2, np.log10(1 - cap), 32)])
    grid = np.unique(np.clip(grid, 0.0, cap))
    with np.errstate(all="ignore"):
        vals = g(grid)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    if np.all(np.isneginf(vals)):
        u_best, capped = 0.0, -math.inf
    else:
        u_best, neg = _refine_min(lambda x: -float(g(x)), grid, -vals)
        capped = -neg
    # refinement of the cap, as a stability diagnostic
    with np.errstate(all="ignore"):
        finer = float(g(1.0 - (1.0 - cap) / 10.0))
    cap_stable = not (math.isfinite(finer) and finer - capped > 1e-6)

    q1 = float(q(1.0))
    numerator = -r - math.log(q1) if q1 > 0 else math.inf
    if numerator > 1e-12:
        limit = math.inf
    elif r == 0.0 and check_support(sigma, rho):
        limit = relative_entropy(sigma, rho)
    else:
        limit = -math.inf
    if limit > capped:
        return HoeffdingResult(limit, 1.0, True, capped, cap_stable)
    return HoeffdingResult(capped, u_best, False, capped, cap_stable)


def hoeffding(sigma, rho, r: float) -> float:
    return hoeffding_details(sigma, rho, r).value


def hoeffding_threshold(sigma, rho) -> float:
    """``-log Tr q rho + Tr rho (log rho - log sigma) q / Tr q rho`` with ``q = supp sigma``.

    Beyond this value of ``r``, ``H_r(sigma, rho)`` is constant and equal to
    ``-log Tr q rho``.
    """
    s, r = la.hermitian_part(sigma), la.hermitian_part(rho)
    q = la.support_projection(s).projection
    tqr = float(np.real(np.trace(q @ r)))
    if tqr <= 0:
        return math.inf
    rlogr = la.matrix_function(lambda x: x * np.log(x), r, on_support=True)
    term = np.trace(rlogr @ q) - np.trace(r @ la.logm_psd(s) @ q)
    return float(-math.log(tqr) + np.real(term) / tqr)


def hoeffding_plateau(sigma, rho) -> float:
    q = la.support_projection(sigma).projection
    return float(-math.log(np.real(np.trace(q @ la.hermitian_part(rho)))))


# -- trace-norm families ------------------------------------------------------


def eigenvalue_t_grid(sigma, rho, extra: Sequence[float] = ()) -> list[float]:
    """Eigenvalues of ``d(sigma, rho)``, midpoints, ``0`` and ``max + 1``."""
    from .reversibility import rn_derivative

    ev = np.linalg.eigvalsh(rn_derivative(sigma, rho).matrix)
    pts = np.unique(np.round(np.concatenate([ev.clip(0, None), np.asarray(extra, float)]), 14))
    mids = 0.5 * (pts[1:] + pts[:-1])
    grid = np.unique(np.concatenate([[0.0], pts, mids, [pts.max() + 1.0 if pts.size else 1.0]]))
    return [float(t) for t in grid if t >= 0]


def ncopy_t_grid(sigma, rho, n: int, extra_eigs: Sequence[float] = ()) -> list[float]:
    """Eigenvalue-complete grid for ``d(sigma^n, rho^n)`` from single-copy eigenvalues."""
    from .reversibility import rn_derivative

    ev = np.linalg.eigvalsh(rn_derivative(sigma, rho).matrix).clip(0, None)
    ev = np.unique(np.round(np.concatenate([ev, np.asarray(extra_eigs, float)]), 12))
    prods = np.array([1.0])
    for _ in range(n):
        prods = np.unique(np.round(np.multiply.outer(prods, ev).ravel(), 12))
    mids = 0.5 * (prods[1:] + prods[:-1])
    grid = np.unique(np.concatenate([[0.0], prods, mids, [prods.max() + 1.0]]))
    return [float(t) for t in grid]


@dataclass
class L1Family:
    t_grid: list[float]
    gaps: list[float]
    n: int

    @property
    def max_gap(self) -> float:
        return max(self.gaps, default=0.0)

    @property
    def min_gap(self) -> float:
        return min(self.gaps, default=0.0)


def l1_equality_family(
    T, sigma, rho, t_grid: Sequence[float] | None = None, n: int = 1,
    size_cap: int = la.TENSOR_SIZE_CAP,
) -> L1Family:
    """Gaps ``||sigma^n - t rho^n||_1 - ||T(sigma)^n - t T(rho)^n||_1`` on a t-grid."""
    s, r = la.hermitian_part(sigma), la.hermitian_part(rho)
    ts, tr = T(s), T(r)
    ts, tr = 0.5 * (ts + la.dag(ts)), 0.5 * (tr + la.dag(tr))
    if t_grid is None:
        t_grid = ncopy_t_grid(s, r, n) if n > 1 else eigenvalue_t_grid(s, r)
    sn, rn = la.tensor_power(s, n, size_cap), la.tensor_power(r, n, size_cap)
    tsn, trn = la.tensor_power(ts, n, size_cap), la.tensor_power(tr, n, size_cap)
    gaps = []
    for t in t_grid:
        a = np.sum(np.abs(np.linalg.eigvalsh(sn - t * rn)))
        b = np.sum(np.abs(np.linalg.eigvalsh(tsn - t * trn)))
        gaps.append(float(a - b))
    return L1Family(list(map(float, t_grid)), gaps, n)
