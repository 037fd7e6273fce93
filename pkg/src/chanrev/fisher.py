"""Monotone (quantum Fisher) metrics and chi-square divergences.

For a symmetric operator monotone ``f`` and an invertible state ``rho`` the
metric is ``lambda^f_rho(x, y) = Tr (J^f_rho)^-1(x) y`` with
``J^f_rho = f(Delta_rho) R_rho``.  In the eigenbasis of ``rho`` the
superoperator ``J^f_rho`` multiplies the ``(i, j)`` matrix entry by
``f(l_i / l_j) l_j``, which is how every operation here is computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .channels import Channel, petz_recovery, vec
from .divergences import check_support
from .errors import DomainError, NotInvertible

DEFAULT_S_GRID = tuple(np.logspace(-3, 3, 16))
DEFAULT_T_GRID = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
CHECK_GRID = np.logspace(-3, 3, 50)


@dataclass(frozen=True)
class MonotoneFunction:
    """An operator monotone ``f`` on ``(0, inf)``.

    ``nu_measure`` lists atoms ``(s_k, v_k)`` with
    ``1/f(t) = sum_k v_k / (s_k + t)`` when such a discrete form exists.
    """

    tag: str
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    symmetric: bool = True
    normalized: bool = True
    nu_measure: tuple[tuple[float, float], ...] | None = None
    verified: bool = True
    nu_support: float | None = None

    def __call__(self, t):
        return self.f(np.asarray(t, dtype=float))

    @property
    def nu_support_size(self) -> float:
        if self.nu_support is not None:
            return self.nu_support
        if self.nu_measure is None:
            return 0
        return sum(1 for _, v in self.nu_measure if v > 0)

    def nu_points(self) -> list[float]:
        return [s for s, v in (self.nu_measure or ()) if v > 0]

    def symmetry_residual(self, grid=CHECK_GRID) -> float:
        return float(np.max(np.abs(self(grid) - grid * self(1.0 / grid))))

    def nu_residual(self, grid=CHECK_GRID) -> float:
        if self.nu_measure is None:
            return math.nan
        approx = sum(v / (s + grid) for s, v in self.nu_measure)
        return float(np.max(np.abs(1.0 / self(grid) - approx)))


def _kubo_mori(t):
    t = np.asarray(t, dtype=float)
    u = t - 1.0
    out = np.empty_like(t)
    small = np.abs(u) < 1e-6
    out[small] = 1.0 + u[small] / 2.0 - u[small] ** 2 / 12.0
    big = ~small
    out[big] = u[big] / np.log1p(u[big])
    return out


def bures() -> MonotoneFunction:
    return MonotoneFunction("bures", lambda t: (1.0 + t) / 2.0, nu_measure=((1.0, 2.0),))


def kubo_mori() -> MonotoneFunction:
    # 1/f(t) = int_0^inf ds / ((s + 1)(s + t)): a continuous nu
    return MonotoneFunction("kubo_mori", _kubo_mori, nu_support=math.inf)


def rld() -> MonotoneFunction:
    # 1/f(t) = 1/2 + (1/2)/t: atoms at s = 0 and at infinity, so no finite list
    return MonotoneFunction("rld", lambda t: 2.0 * t / (1.0 + t), nu_support=2)


def f_s(s: float) -> MonotoneFunction:
    """``t -> s + t`` (neither symmetric nor normalized); ``J = s R + L``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    return MonotoneFunction(
        f"f_s({s:g})", lambda t: s + t, symmetric=False, normalized=False,
        nu_measure=((float(s), 1.0),),
    )


def rich(n_atoms: int, spread: float = 3.0) -> MonotoneFunction:
    """Symmetric normalized ``f`` with ``1/f`` a sum of ``n_atoms`` poles.

    Atoms come in pairs ``(s, v), (1/s, v/s)`` (which makes ``f`` symmetric),
    with ``s`` log-spaced in ``(1, 10**spread]``; an odd count adds ``s = 1``.
    Weights are scaled so that ``f(1) = 1``.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    m = n_atoms // 2
    svals = np.logspace(0, spread, m + 1)[1:]
    atoms = []
    for s in svals:
        atoms += [(float(s), 1.0), (float(1.0 / s), float(1.0 / s))]
    if n_atoms % 2:
        atoms.append((1.0, 1.0))
    norm = sum(v / (s + 1.0) for s, v in atoms)
    atoms = tuple(sorted((s, v / norm) for s, v in atoms))

    def f(t):
        t = np.asarray(t, dtype=float)
        return 1.0 / sum(v / (s + t) for s, v in atoms)

    return MonotoneFunction(f"rich({n_atoms})", f, nu_measure=atoms)


def rich_for(in_dim: int, out_dim: int) -> MonotoneFunction:
    """``rich`` with ``2 (d^2 + d'^2)`` atoms, enough for the support-count hypotheses."""
    return rich(2 * (in_dim ** 2 + out_dim ** 2))


def by_tag(tag: str, in_dim: int = 2, out_dim: int = 2) -> MonotoneFunction:
    tag = tag.strip()
    table = {"bures": bures, "kubo_mori": kubo_mori, "rld": rld}
    if tag in table:
        return table[tag]()
    if tag == "rich":
        return rich_for(in_dim, out_dim)
    if tag.startswith("rich"):
        return rich(int(tag[4:].strip("()[]: =")))
    if tag.startswith("f_s"):
        return f_s(float(tag[3:].strip("()[]: =")))
    raise KeyError(f"unknown monotone function {tag!r}")


def catalog(in_dim: int = 2, out_dim: int = 2) -> dict[str, MonotoneFunction]:
    return {
        "bures": bures(), "kubo_mori": kubo_mori(), "rld": rld(),
        "rich": rich_for(in_dim, out_dim),
    }


# -- J^f calculus --------------------------------------------------------------


def _invertible_eig(rho):
    w, v = la.eigh(rho)
    if w[-1] <= la.SUPPORT_CUTOFF * max(w[0], 0.0) or w[-1] <= 0:
        raise NotInvertible("rho must be invertible")
    return w, v


def _coefficients(w, f: MonotoneFunction) -> np.ndarray:
    """``c_ij = f(l_i / l_j) l_j``."""
    c = f(w[:, None] / w[None, :]) * w[None, :]
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise DomainError(f"{f.tag} is not positive on the spectral ratios")
    return c


def metric_inverse_apply(rho, f: MonotoneFunction, x) -> np.ndarray:
    """``(J^f_rho)^-1(x) = sum_ij [f(l_i/l_j) l_j]^-1 P_i x P_j``."""
    w, v = _invertible_eig(la.hermitian_part(rho))
    c = _coefficients(w, f)
    xe = la.dag(v) @ np.asarray(x, dtype=complex) @ v
    return v @ (xe / c) @ la.dag(v)


def metric_apply(rho, f: MonotoneFunction, y) -> np.ndarray:
    """``J^f_rho(y)``."""
    w, v = _invertible_eig(la.hermitian_part(rho))
    c = _coefficients(w, f)
    ye = la.dag(v) @ np.asarray(y, dtype=complex) @ v
    return v @ (ye * c) @ la.dag(v)


def metric_inverse_superoperator(rho, f: MonotoneFunction) -> np.ndarray:
    """Column-major superoperator of ``(J^f_rho)^-1``."""
    w, v = _invertible_eig(la.hermitian_part(rho))
    c = _coefficients(w, f)
    u = np.kron(np.conj(v), v)
    return u @ np.diag(1.0 / c.reshape(-1, order="F")) @ la.dag(u)


def fisher_metric(rho, f: MonotoneFunction, x, y) -> float:
    """``Tr (J^f_rho)^-1(x) y``; real for Hermitian ``x, y``."""
    val = np.trace(metric_inverse_apply(rho, f, x) @ np.asarray(y))
    return float(np.real(val))


def chi2_divergence(sigma, rho, f: MonotoneFunction) -> float:
    """``chi^2_{1/f}(sigma, rho) = lambda^f_rho(sigma - rho, sigma - rho)``.

    A singular ``rho`` is handled on ``supp rho``; the value is ``inf`` when
    ``supp sigma`` is not contained in it.
    """
    s, r = la.hermitian_part(sigma), la.hermitian_part(rho)
    sp = la.support_projection(r)
    if sp.rank < r.shape[0]:
        if not check_support(s, r):
            return math.inf
        v = sp.isometry
        s, r = la.dag(v) @ s @ v, la.dag(v) @ r @ v
    x = s - r
    return fisher_metric(r, f, x, x)


def metric_gap(T: Channel, rho, f: MonotoneFunction, x) -> float:
    """``lambda^f_rho(x, x) - lambda^f_T(rho)(T(x), T(x))``."""
    r = la.hermitian_part(rho)
    tx = T(x)
    return fisher_metric(r, f, x, x) - fisher_metric(T(r), f, tx, tx)


def monotonicity_form_min_eig(T: Channel, rho, f: MonotoneFunction) -> float:
    """Smallest eigenvalue of ``(J^f_rho)^-1 - T* (J^f_T(rho))^-1 T`` as an HS form."""
    r = la.hermitian_part(rho)
    a = metric_inverse_superoperator(r, f)
    b = la.dag(T.superop) @ metric_inverse_superoperator(T(r), f) @ T.superop
    diff = a - b
    return float(np.linalg.eigvalsh(0.5 * (diff + la.dag(diff)))[0])


def interval_rho_x(rho, x, shrink: float = 0.01) -> tuple[float, float]:
    """Range of ``u`` with ``rho + u x >= 0``, shrunk by ``shrink`` towards 0."""
    w, v = _invertible_eig(la.hermitian_part(rho))
    s = (v / np.sqrt(w)) @ la.dag(v)
    mu = np.linalg.eigvalsh(la.hermitian_part(s @ np.asarray(x) @ s, atol=1e-8))
    lo = -1.0 / mu[-1] if mu[-1] > 0 else -math.inf
    hi = -1.0 / mu[0] if mu[0] < 0 else math.inf
    return lo * (1 - shrink), hi * (1 - shrink)


def _powers(rho):
    w, v = _invertible_eig(la.hermitian_part(rho))
    return w, v


def _mpow(w, v, p):
    return (v * (w.astype(complex) ** p)) @ la.dag(v)


@dataclass
class FisherEqualityCheck:
    tag: str
    metric_gap: float
    per_s: dict[float, float]
    cocycle: dict[float, float]
    sandwich_residual: float
    recovery_residuals: dict[float, float] = field(default_factory=dict)
    nu_support_size: float = 0
    spectrum_count: int = 0

    @property
    def support_hypothesis(self) -> bool:
        """``|supp nu_f| >= |spec Delta_rho  U  spec Delta_T(rho)|``."""
        return self.nu_support_size >= self.spectrum_count

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "metric_gap": self.metric_gap,
            "per_s": {f"{k:.6g}": v for k, v in self.per_s.items()},
            "cocycle": {f"{k:.6g}": v for k, v in self.cocycle.items()},
            "sandwich_residual": self.sandwich_residual,
            "recovery_residuals": {f"{k:.6g}": v for k, v in self.recovery_residuals.items()},
            "nu_support_size": self.nu_support_size,
            "spectrum_count": self.spectrum_count,
            "support_hypothesis": self.support_hypothesis,
        }


def modular_spectrum(rho, tol: float = 1e-9) -> np.ndarray:
    """Distinct eigenvalues ``l_i / l_j`` of the modular operator ``Delta_rho``."""
    w, _ = _invertible_eig(la.hermitian_part(rho))
    ratios = np.sort((w[:, None] / w[None, :]).ravel())
    keep = [ratios[0]]
    for r in ratios[1:]:
        if r - keep[-1] > tol * max(1.0, r):
            keep.append(r)
    return np.array(keep)


def fisher_equality_check(
    T: Channel, rho, x, f: MonotoneFunction,
    s_grid: Sequence[float] | None = None,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    n_u: int = 5,
) -> FisherEqualityCheck:
    """Residuals of the equality conditions for the metric ``lambda^f``.

    ``per_s`` compares ``(s R_rho + L_rho)^-1(x)`` with
    ``T*[(s R_T(rho) + L_T(rho))^-1(T(x))]`` at each atom of ``nu_f`` (or
    ``s_grid``); ``cocycle`` compares ``rho^(it) x rho^(-it-1)`` with its
    pullback; ``sandwich_residual`` does the same for
    ``rho^-1/2 x rho^-1/2``.  ``recovery_residuals`` evaluates the Petz
    recovery of ``rho + u x`` at ``n_u`` points of the admissible interval.
    """
    r = la.hermitian_part(rho)
    x = np.asarray(x, dtype=complex)
    tr, tx = T(r), T(x)
    tr = 0.5 * (tr + la.dag(tr))
    ts = T.adjoint()
    gap = fisher_metric(r, f, x, x) - fisher_metric(tr, f, tx, tx)
    if s_grid is None:
        s_grid = f.nu_points() or list(DEFAULT_S_GRID)
    per_s = {}
    for s in s_grid:
        fs = f_s(s)
        lhs = metric_inverse_apply(r, fs, x)
        rhs = ts(metric_inverse_apply(tr, fs, tx))
        per_s[float(s)] = float(np.linalg.norm(lhs - rhs))
    w, v = _powers(r)
    w0, v0 = _powers(tr)
    cocycle = {}
    for t in t_grid:
        lhs = _mpow(w, v, 1j * t) @ x @ _mpow(w, v, -1j * t - 1)
        rhs = ts(_mpow(w0, v0, 1j * t) @ tx @ _mpow(w0, v0, -1j * t - 1))
        cocycle[float(t)] = float(np.linalg.norm(lhs - rhs))
    lhs = _mpow(w, v, -0.5) @ x @ _mpow(w, v, -0.5)
    rhs = ts(_mpow(w0, v0, -0.5) @ tx @ _mpow(w0, v0, -0.5))
    sandwich = float(np.linalg.norm(lhs - rhs))

    rec = {}
    if np.linalg.norm(x) > 0 and n_u > 0:
        lo, hi = interval_rho_x(r, x)
        lo, hi = max(lo, -1e6), min(hi, 1e6)
        recovery = petz_recovery(T, r)
        for u in np.linspace(lo, hi, n_u + 2)[1:-1]:
            su = r + u * x
            rec[float(u)] = la.trace_norm(recovery(T(su)) - su)
    count = len(np.unique(np.round(np.concatenate([modular_spectrum(r), modular_spectrum(tr)]), 9)))
    return FisherEqualityCheck(f.tag, gap, per_s, cocycle, sandwich, rec, f.nu_support_size, count)


def tangent_basis(sigmas: Sequence[np.ndarray], rho) -> list[np.ndarray]:
    """Orthonormal (HS) basis of ``span{sigma - rho}`` as Hermitian matrices."""
    r = la.hermitian_part(rho)
    diffs = [la.hermitian_part(s) - r for s in sigmas]
    if not diffs:
        return []
    a = np.column_stack([vec(dd) for dd in diffs])
    # real coordinates keep the basis Hermitian
    ar = np.vstack([a.real, a.imag])
    u, s, vh = np.linalg.svd(ar, full_matrices=False)
    if s.size == 0 or s[0] <= 1e-14:
        return []
    k = int(np.sum(s > 1e-10 * s[0]))
    coeffs = la.dag(vh[:k]).real / s[:k]
    out = []
    for j in range(k):
        m = sum(c * dd for c, dd in zip(coeffs[:, j], diffs))
        out.append(0.5 * (m + la.dag(m)))
    return out
