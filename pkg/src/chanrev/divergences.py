"""Quantum f-divergences through the joint spectrum of the relative modular operator.

For ``sigma = sum_i a_i |phi_i><phi_i|`` and ``rho = sum_j b_j |psi_j><psi_j|``
(``b_j > 0``) the relative modular operator ``X -> sigma X rho^-1`` acts on
the components of ``rho^1/2`` with eigenvalues ``a_i / b_j`` and weights
``b_j |<phi_i|psi_j>|^2``, so that

    S_f(sigma, rho) = sum_ij f(a_i / b_j) b_j |<phi_i|psi_j>|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import roots_legendre, xlogy

from . import linalg as la
from .errors import DomainError, SupportViolation

WEIGHT_ATOL = la.ATOL
SUPPORT_ATOL = 1e-10


@dataclass(frozen=True)
class OperatorConvexFunction:
    """``f(x) = f0 + a x + b x^2 + int (x/(1+t) - x/(x+t)) dmu(t)``.

    ``measure`` holds the atoms ``(t_k, w_k)`` of ``mu``.  For closed-form
    tags whose measure is continuous, ``continuous_measure`` is set and the
    atoms (if any) are only a quadrature of it.
    """

    f0: float
    a: float
    b: float
    measure: tuple[tuple[float, float], ...] = ()
    tag: str | None = None
    param: float | None = None
    continuous_measure: bool = False

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be non-negative")
        ts = [t for t, _ in self.measure]
        if any(t <= 0 for t in ts) or any(w < 0 for _, w in self.measure):
            raise ValueError("measure atoms need t > 0 and w >= 0")
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("atoms must be strictly increasing in t")

    @property
    def support_size(self) -> float:
        if self.continuous_measure:
            return math.inf
        return sum(1 for _, w in self.measure if w > 0)

    def closed_form(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "xlogx":
            return xlogy(x, x)
        if self.tag == "one_minus_power":
            return 1.0 - x ** self.param
        if self.tag == "inv_one_plus":
            return 1.0 / (1.0 + x)
        return None

    def __call__(self, x):
        cf = self.closed_form(x)
        return cf if cf is not None else eval_operator_convex(self, x)


def eval_operator_convex(f: OperatorConvexFunction, x):
    """Evaluate the integral representation using the stored atoms."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("operator convex functions are evaluated on x >= 0")
    out = f.f0 + f.a * x + f.b * x * x
    for t, w in f.measure:
        out = out + w * (x / (1.0 + t) - x / (x + t))
    return out


def xlogx() -> OperatorConvexFunction:
    # mu = Lebesgue measure on (0, inf)
    return OperatorConvexFunction(0.0, 0.0, 0.0, tag="xlogx", continuous_measure=True)


def one_minus_power(s: float, atoms: int = 0) -> OperatorConvexFunction:
    """``1 - x**s`` for ``0 < s < 1``; dmu = sin(s pi)/pi t^(s-1) dt, a = -1.

    With ``atoms > 0`` the atoms of :func:`power_measure_atoms` are attached,
    so that :func:`eval_operator_convex` evaluates a quadrature of ``mu``.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    measure = power_measure_atoms(s, atoms) if atoms else ()
    return OperatorConvexFunction(
        1.0, -1.0, 0.0, measure=measure, tag="one_minus_power", param=float(s),
        continuous_measure=True,
    )


def power_measure_atoms(s: float, n: int) -> tuple[tuple[float, float], ...]:
    """Discretize ``dmu = c t^(s-1) dt`` (``c = sin(s pi)/pi``) with ``n`` atoms.

    Uses ``t = tan(theta)**(1/s)``, under which ``t^(s-1) dt`` becomes
    ``sec(theta)^2 dtheta / s``, and Gauss-Legendre nodes on ``(0, pi/2)``.
    """
    c = math.sin(s * math.pi) / math.pi
    nodes, weights = roots_legendre(n)
    theta = (nodes + 1.0) * math.pi / 4.0
    wtheta = weights * math.pi / 4.0
    tan = np.tan(theta)
    t = tan ** (1.0 / s)
    # dt = (1/s) tan^(1/s - 1) sec^2 dtheta and t^(s-1) = tan^((s-1)/s)
    # so t^(s-1) dt = (1/s) sec^2(theta) dtheta
    w = c / s * (1.0 + tan ** 2) * wtheta
    return tuple((float(ti), float(wi)) for ti, wi in sorted(zip(t, w)))


def inv_one_plus() -> OperatorConvexFunction:
    """``1/(1+x)``: a single atom ``mu({1}) = 1`` and linear term ``-x/2``."""
    return OperatorConvexFunction(1.0, -0.5, 0.0, measure=((1.0, 1.0),), tag="inv_one_plus")


def by_tag(tag: str) -> OperatorConvexFunction:
    """Look up ``xlogx``, ``inv_one_plus`` or ``one_minus_power(s)``."""
    tag = tag.strip()
    if tag == "xlogx":
        return xlogx()
    if tag == "inv_one_plus":
        return inv_one_plus()
    if tag.startswith("one_minus_power"):
        inner = tag[len("one_minus_power"):].strip("()[]: =")
        return one_minus_power(float(inner) if inner else 0.5)
    raise KeyError(f"unknown divergence function {tag!r}")


FunctionLike = Union[str, OperatorConvexFunction, Callable[[np.ndarray], np.ndarray]]


@dataclass
class DivergenceSpectrum:
    """Joint spectral data of ``Delta_{sigma,rho}`` seen from ``rho^1/2``.

    ``pairs`` are ``(ratio, weight)`` with ``ratio > 0``; the weight sitting
    on the kernel of ``sigma`` (ratio ``0``) is kept in ``zero_block_weight``.
    """

    ratios: np.ndarray
    weights: np.ndarray
    zero_block_weight: float
    extra: dict = field(default_factory=dict)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.ratios.tolist(), self.weights.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum() + self.zero_block_weight)


def _eig(x):
    w, v = la.eigh(x)
    return np.clip(w, 0.0, None), v


def check_support(sigma, rho, atol: float = SUPPORT_ATOL) -> bool:
    """``supp sigma <= supp rho``, i.e. ``Tr sigma (1 - supp rho)`` vanishes."""
    p = la.support_projection(rho).projection
    s = la.hermitian_part(sigma)
    leak = np.real(np.trace(s) - np.trace(s @ p))
    return bool(leak <= atol * max(1.0, np.real(np.trace(s))))


def relative_modular_spectrum(sigma, rho, cutoff: float = la.SUPPORT_CUTOFF) -> DivergenceSpectrum:
    if not check_support(sigma, rho):
        raise SupportViolation("supp sigma is not contained in supp rho")
    a, phi = _eig(sigma)
    b, psi = _eig(rho)
    keep_b = b > cutoff * b[0]
    b, psi = b[keep_b], psi[:, keep_b]
    zero_a = a <= cutoff * a[0]
    overlap = np.abs(la.dag(phi) @ psi) ** 2  # [i, j]
    weights = overlap * b[None, :]
    zero_w = float(weights[zero_a].sum())
    w = weights[~zero_a]
    r = a[~zero_a][:, None] / b[None, :]
    r, w = r.ravel(), w.ravel()
    mask = w > WEIGHT_ATOL
    r, w = r[mask], w[mask]
    order = np.argsort(r, kind="stable")
    r, w = r[order], w[order]
    # merge numerically equal ratios
    merged_r, merged_w = [], []
    for ri, wi in zip(r, w):
        if merged_r and abs(ri - merged_r[-1]) <= 1e-12 * max(1.0, ri):
            merged_w[-1] += wi
        else:
            merged_r.append(ri)
            merged_w.append(wi)
    return DivergenceSpectrum(np.array(merged_r), np.array(merged_w), zero_w)


def _resolve(f: FunctionLike):
    if isinstance(f, str):
        return by_tag(f)
    return f


def f_divergence(f: FunctionLike, sigma, rho) -> float:
    """``S_f(sigma, rho) = <rho^1/2, f(Delta_{sigma,rho}) rho^1/2>``."""
    f = _resolve(f)
    spec = relative_modular_spectrum(sigma, rho)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(spec.ratios), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DomainError("f is undefined at a realized likelihood ratio")
    total = float(np.dot(vals, spec.weights))
    if spec.zero_block_weight > WEIGHT_ATOL:
        with np.errstate(all="ignore"):
            f0 = float(np.asarray(f(np.array([0.0])), dtype=float)[0])
        if not math.isfinite(f0):
            raise DomainError("f(0) is undefined but sigma has a kernel inside supp rho")
        total += f0 * spec.zero_block_weight
    return total


def relative_entropy(sigma, rho) -> float:
    """``Tr sigma (log sigma - log rho)``; ``inf`` when ``supp sigma`` leaks out of ``supp rho``."""
    if not check_support(sigma, rho):
        return math.inf
    s = la.hermitian_part(sigma)
    val = np.trace(s @ (la.logm_psd(s) - la.logm_psd(rho)))
    return float(np.real(val))


def power_trace(sigma, rho, s: float) -> float:
    """``Tr sigma^s rho^(1-s)`` with ``x^0 = supp x``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return float(np.real(np.trace(la.psd_power(sigma, s) @ la.psd_power(rho, 1.0 - s))))


def monotonicity_gap(f: FunctionLike, T, sigma, rho) -> float:
    """``S_f(sigma, rho) - S_f(T(sigma), T(rho))`` (non-negative for Schwarz-dual maps)."""
    return f_divergence(f, sigma, rho) - f_divergence(f, T(sigma), T(rho))


def support_condition(f: OperatorConvexFunction, in_dim: int, out_dim: int) -> bool:
    """Whether ``|supp mu_f| >= dim(H)^2 + dim(K)^2`` (continuous measures pass)."""
    return f.support_size >= in_dim ** 2 + out_dim ** 2


def catalog(s_values: Sequence[float] = (0.25, 0.5, 0.75)) -> dict[str, OperatorConvexFunction]:
    out = {"xlogx": xlogx(), "inv_one_plus": inv_one_plus()}
    for s in s_values:
        out[f"one_minus_power({s:g})"] = one_minus_power(s)
    return out
