"""Reversibility (sufficiency) of a channel for a family of states.

The ground truth is the Petz recovery condition ``T_rho*(T(sigma)) = sigma``
(condition C1).  :func:`check_conditions` evaluates it together with the
equivalent characterizations and reports a tri-state verdict for each:

    C1  Petz recovery residual
    C2  relative entropy gap
    C3  cocycle intertwining ``T*(T(s)^it T(r)^-it) = s^it r^-it`` on a t-grid
    C4  power-trace gaps ``Tr s^a r^(1-a)``
    C5  pullback of the Radon-Nikodym derivative ``T*(d(Ts, Tr)) = d(s, r)``
    C6  ``d(s, r)`` in the fixed-point algebra of ``Phi = T* o T_rho``
    C7  trace-norm family gaps (extended family), C7_family on the family only
    C8  n-copy trace-norm gaps
    C9  Chernoff gaps
    C10 Hoeffding gaps
    C11 monotone metric gaps over the tangent span of the family
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import algebra as alg
from . import divergences as dv
from . import fisher as fi
from . import linalg as la
from . import testing as te
from .channels import (
    Channel, Compression, extend_recovery, petz_dual, petz_recovery,
    positivity_report, restrict_to_support, unvec, vec,
)
from .errors import (
    NotAnAlgebra, NotInvertible, NotReversible, NumericalFailure, SupportViolation,
)

HOLD_RTOL = 1e-8
FAIL_RTOL = 1e-4
KERNEL_RTOL = 1e-9

HOLDS, FAILS, INCONCLUSIVE, SKIPPED = "holds", "fails", "inconclusive", "skipped"


def verdict(residual: float, scale: float = 1.0, hold_rtol: float = HOLD_RTOL,
            fail_rtol: float = FAIL_RTOL) -> str:
    if math.isnan(residual):
        return INCONCLUSIVE
    if residual <= hold_rtol * scale:
        return HOLDS
    if residual >= fail_rtol * scale:
        return FAILS
    return INCONCLUSIVE


# -- Radon-Nikodym derivative -------------------------------------------------


@dataclass
class RNDerivative:
    matrix: np.ndarray
    norm: float

    def drs_residual(self, sigma, rho, samples: int = 20, seed: int = 0) -> float:
        """Max ``|Tr sigma a - <d, a>_rho|`` over random ``a``."""
        from .channels import rho_inner
        from .ensembles import ginibre

        rng = np.random.default_rng(seed)
        d = self.matrix.shape[0]
        worst = 0.0
        for _ in range(samples):
            a = ginibre(d, d, rng)
            lhs = np.trace(np.asarray(sigma) @ a)
            worst = max(worst, abs(lhs - rho_inner(self.matrix, a, rho)))
        return float(worst)


def rn_derivative(sigma, rho) -> RNDerivative:
    """``d(sigma, rho) = rho^-1/2 sigma rho^-1/2`` on ``supp rho``."""
    s, r = la.hermitian_part(sigma), la.hermitian_part(rho)
    if not dv.check_support(s, r):
        raise SupportViolation("supp sigma is not contained in supp rho")
    ri = la.psd_power(r, -0.5)
    d = ri @ s @ ri
    d = 0.5 * (d + la.dag(d))
    return RNDerivative(d, la.operator_norm(d))


# -- fixed points and multiplicative domains ---------------------------------


def _kernel(m: np.ndarray, rtol: float = KERNEL_RTOL) -> np.ndarray:
    _, s, vh = np.linalg.svd(m)
    scale = max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > rtol * scale))
    return la.dag(vh[rank:])


def fixed_point_projection(Phi: Channel) -> np.ndarray:
    """Spectral projection ``R (L* R)^-1 L*`` of the superoperator onto eigenvalue 1.

    This is the Cesaro limit ``lim (1/n) sum_k Phi^k``.
    """
    n = Phi.superop.shape[0]
    m = Phi.superop - np.eye(n)
    right = _kernel(m)
    left = _kernel(la.dag(m))
    if right.shape[1] != left.shape[1]:
        raise NumericalFailure("eigenvalue 1 is not semisimple at tolerance")
    if right.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    g = la.dag(left) @ right
    return right @ np.linalg.solve(g, la.dag(left))


def fixed_point_algebra(Phi: Channel, check: bool = True) -> alg.AlgebraBasis:
    """``F_Phi = {a : Phi(a) = a}`` for a unital Schwarz map with a faithful invariant state."""
    if Phi.in_dim != Phi.out_dim:
        raise ValueError("Phi must map an algebra into itself")
    d = Phi.in_dim
    ker = _kernel(Phi.superop - np.eye(d * d))
    mats = [unvec(ker[:, k], d) for k in range(ker.shape[1])]
    # Phi commutes with the adjoint operation, so Hermitian parts span too
    herm = [0.5 * (m + la.dag(m)) for m in mats] + [0.5j * (la.dag(m) - m) for m in mats]
    basis = alg.AlgebraBasis(d, alg.orthonormal_span(herm, d))
    if check:
        star, prod = basis.closure_residuals()
        if max(star, prod) > 1e-6:
            raise NotAnAlgebra(f"fixed points are not closed (residuals {star:.2e}, {prod:.2e})")
    return basis


def multiplicative_domain_membership(Phi: Channel, a, rtol: float = HOLD_RTOL) -> tuple[bool, float]:
    a = np.asarray(a, dtype=complex)
    pa = Phi(a)
    r1 = np.linalg.norm(Phi(la.dag(a) @ a) - la.dag(pa) @ pa, 2)
    r2 = np.linalg.norm(Phi(a @ la.dag(a)) - pa @ la.dag(pa), 2)
    res = float(max(r1, r2))
    return res <= rtol * max(1.0, np.linalg.norm(a, 2) ** 2), res


def recovery_composition(T: Channel, rho) -> Channel:
    """``Phi = T* o T_rho`` on the input algebra."""
    return T.adjoint().compose(petz_dual(T, rho))


def output_composition(T: Channel, rho) -> Channel:
    """``Phi~ = T_rho o T*`` on the output algebra."""
    return petz_dual(T, rho).compose(T.adjoint())


# -- factorization ------------------------------------------------------------


@dataclass
class Factorization:
    rho_A: np.ndarray
    rho_B: np.ndarray
    rho0_A: np.ndarray
    sigma0_A: list[np.ndarray]
    residuals: list[tuple[float, float]]
    fixed_algebra: alg.AlgebraBasis = field(repr=False)
    output_algebra: alg.AlgebraBasis = field(repr=False)
    blocks: tuple = ()

    @property
    def max_residual(self) -> float:
        return max((max(r) for r in self.residuals), default=0.0)


def factorize(T: Channel, rho, sigmas: Sequence, force: bool = False,
              hold_rtol: float = HOLD_RTOL) -> Factorization:
    """Decompose ``sigma = T*(sigma0_A) rho_B`` and ``T(sigma) = sigma0_A T(rho_B)``.

    ``rho_A`` is the trace-preserving conditional expectation of ``rho`` onto
    the fixed-point algebra ``F`` of ``T* o T_rho``, ``rho_B = rho_A^-1 rho``
    lies in the commutant of ``F``, and
    ``sigma0_A = rho0_A^1/2 d(T sigma, T rho) rho0_A^1/2`` with
    ``rho0_A = T_rho(rho_A)``.
    """
    r = la.hermitian_part(rho)
    tr = T(r)
    if min(la.min_eigenvalue(r), la.min_eigenvalue(tr)) <= la.SUPPORT_CUTOFF:
        raise NotInvertible("factorize needs invertible rho and T(rho); compress first")
    if not force:
        rec = petz_recovery(T, r)
        worst = max((la.trace_norm(rec(T(s)) - s) for s in sigmas), default=0.0)
        if worst > hold_rtol:
            raise NotReversible(f"recovery residual {worst:.3e} exceeds the hold threshold")
    phi = recovery_composition(T, r)
    fa = fixed_point_algebra(phi)
    fb = fixed_point_algebra(output_composition(T, r))
    e = alg.trace_conditional_expectation(fa)
    rho_a = la.hermitian_part(e(r), atol=1e-6)
    rho_b = np.linalg.solve(rho_a, r)
    rho_b = 0.5 * (rho_b + la.dag(rho_b))
    rho0_a = petz_dual(T, r)(rho_a)
    rho0_a = 0.5 * (rho0_a + la.dag(rho0_a))
    half = la.sqrtm_psd(rho0_a)
    ts = T.adjoint()
    trb = T(rho_b)
    sig0, res = [], []
    for s in sigmas:
        s = la.hermitian_part(s)
        d0 = rn_derivative(T(s), tr).matrix
        s0 = half @ d0 @ half
        sig0.append(s0)
        res.append((
            float(np.linalg.norm(s - ts(s0) @ rho_b)),
            float(np.linalg.norm(T(s) - s0 @ trb)),
        ))
    try:
        blocks = alg.structure_decomposition(fa).blocks
    except NumericalFailure:
        blocks = ()
    return Factorization(rho_a, rho_b, rho0_a, sig0, res, fa, fb, blocks)


def recovery_from_factorization(T: Channel, fac: Factorization) -> Channel:
    """Petz map of ``T`` at the normalized ``rho_B``; CPTP whenever ``T`` is CP."""
    omega = fac.rho_B / np.real(np.trace(fac.rho_B))
    rec = petz_recovery(T, omega)
    rec.label = "factorization_recovery"
    return rec


def extended_family(sigmas: Sequence, rho, s_grid: Sequence[float]) -> list[np.ndarray]:
    """``{rho^is sigma rho^-is}`` over the family and the grid."""
    r = la.hermitian_part(rho)
    w, v = la.eigh(r)
    if w[-1] <= la.SUPPORT_CUTOFF * w[0]:
        raise NotInvertible("rho must be invertible")
    out = []
    for s in s_grid:
        u = (v * np.exp(1j * s * np.log(w))) @ la.dag(v)
        for sig in sigmas:
            m = u @ la.hermitian_part(sig) @ la.dag(u)
            out.append(0.5 * (m + la.dag(m)))
    return out


# -- report -------------------------------------------------------------------


@dataclass
class ConditionEntry:
    condition: str
    residual: float
    verdict: str
    diagnostic: bool = False
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "residual": self.residual,
            "verdict": self.verdict,
            "diagnostic": self.diagnostic,
            "detail": self.detail,
        }


@dataclass
class CheckOptions:
    hold_rtol: float = HOLD_RTOL
    fail_rtol: float = FAIL_RTOL
    t_grid: tuple = alg.DEFAULT_T_GRID
    power_s: tuple = (0.25, 0.5, 0.75)
    extended_s_grid: tuple = (-1.0, -0.5, 0.5, 1.0)
    ncopy_max: int = 2
    size_cap: int = la.TENSOR_SIZE_CAP
    r_grid: tuple = (0.0, 0.1, 1.0)
    family0: tuple | None = None
    r0_epsilon: float = 0.5
    fisher_tags: tuple = ("bures", "kubo_mori", "rld", "rich")
    fdiv_tags: tuple = ("inv_one_plus", "xlogx")
    conditions: tuple | None = None
    factorize: bool = True
    positivity_samples: int = 100
    threads: int | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "CheckOptions":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for k, v in list(known.items()):
            if isinstance(v, list):
                known[k] = tuple(v)
        return cls(**known)


@dataclass
class ReversibilityReport:
    entries: list[ConditionEntry]
    overall: str
    recovery: Channel | None
    factorization: Factorization | None
    standing: dict
    consistent: bool
    violations: list[str]

    def entry(self, cid: str) -> ConditionEntry:
        for e in self.entries:
            if e.condition == cid:
                return e
        raise KeyError(cid)

    def verdicts(self) -> dict[str, str]:
        return {e.condition: e.verdict for e in self.entries}

    @property
    def reversible(self) -> bool:
        return self.overall == HOLDS

    def to_dict(self) -> dict:
        out = {
            "overall": self.overall,
            "consistent": self.consistent,
            "violations": self.violations,
            "standing": self.standing,
            "conditions": [e.to_dict() for e in self.entries],
        }
        if self.factorization is not None:
            fac = self.factorization
            out["factorization"] = {
                "rho_B": fac.rho_B,
                "rho_A": fac.rho_A,
                "sigma0_A": fac.sigma0_A,
                "residuals": [list(r) for r in fac.residuals],
                "blocks": [list(b) for b in fac.blocks],
            }
        if self.recovery is not None:
            out["recovery"] = self.recovery
        return out


def _threads(options: CheckOptions) -> int:
    if options.threads is not None:
        return max(1, int(options.threads))
    env = os.environ.get("CHANREV_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


class _Context:
    """Shared, read-only quantities for one (compressed) instance."""

    def __init__(self, T: Channel, sigmas, rho, options: CheckOptions):
        self.T, self.opt = T, options
        self.rho = la.hermitian_part(rho)
        self.sigmas = [la.hermitian_part(s) for s in sigmas]
        self.Tstar = T.adjoint()
        self.Trho = 0.5 * (T(self.rho) + la.dag(T(self.rho)))
        self.Tsig = [0.5 * (T(s) + la.dag(T(s))) for s in self.sigmas]
        self.recovery = petz_recovery(T, self.rho)
        self.petz = petz_dual(T, self.rho)
        self.phi = self.Tstar.compose(self.petz)

    def v(self, residual: float, scale: float = 1.0) -> str:
        return verdict(residual, scale, self.opt.hold_rtol, self.opt.fail_rtol)


def _rel(values: list[tuple[float, float]]) -> float:
    """Largest ``residual / scale``."""
    return max((r / s for r, s in values), default=0.0)


def _c1(c: _Context) -> ConditionEntry:
    res = [la.trace_norm(c.recovery(ts) - s) for s, ts in zip(c.sigmas, c.Tsig)]
    worst = max(res, default=0.0)
    return ConditionEntry("C1", worst, c.v(worst), detail={"per_state": res})


def _c2(c: _Context) -> ConditionEntry:
    vals = []
    for s, ts in zip(c.sigmas, c.Tsig):
        a, b = dv.relative_entropy(s, c.rho), dv.relative_entropy(ts, c.Trho)
        gap = 0.0 if (math.isinf(a) and math.isinf(b)) else a - b
        vals.append((abs(gap), max(1.0, abs(a)) if math.isfinite(a) else 1.0))
    worst = _rel(vals)
    return ConditionEntry("C2", worst, c.v(worst), detail={"per_state": [g for g, _ in vals]})


def _c3(c: _Context) -> ConditionEntry:
    vals = []
    for s, ts in zip(c.sigmas, c.Tsig):
        for t in c.opt.t_grid:
            lhs = la.psd_power(s, 1j * t) @ la.psd_power(c.rho, -1j * t)
            rhs = c.Tstar(la.psd_power(ts, 1j * t) @ la.psd_power(c.Trho, -1j * t))
            vals.append((float(np.linalg.norm(lhs - rhs)), max(1.0, float(np.linalg.norm(lhs)))))
    worst = _rel(vals)
    return ConditionEntry("C3", worst, c.v(worst), detail={"t_grid": list(c.opt.t_grid), "on_grid": True})


def _c4(c: _Context) -> ConditionEntry:
    vals, per = [], {}
    for a in c.opt.power_s:
        gaps = [dv.power_trace(ts, c.Trho, a) - dv.power_trace(s, c.rho, a)
                for s, ts in zip(c.sigmas, c.Tsig)]
        per[f"{a:g}"] = gaps
        vals += [(abs(g), 1.0) for g in gaps]
    worst = _rel(vals)
    return ConditionEntry("C4", worst, c.v(worst), detail={"per_s": per})


def _c5(c: _Context) -> tuple[ConditionEntry, list[np.ndarray]]:
    vals, ds = [], []
    for s, ts in zip(c.sigmas, c.Tsig):
        d = rn_derivative(s, c.rho)
        d0 = rn_derivative(ts, c.Trho)
        ds.append(d.matrix)
        vals.append((float(np.linalg.norm(c.Tstar(d0.matrix) - d.matrix)), max(1.0, d.norm)))
    worst = _rel(vals)
    return ConditionEntry("C5", worst, c.v(worst)), ds


def _c6(c: _Context, ds) -> ConditionEntry:
    try:
        fa = fixed_point_algebra(c.phi)
        dim = fa.dimension
    except (NotAnAlgebra, NumericalFailure) as exc:
        fa, dim = None, None
        note = str(exc)
    vals = []
    for d in ds:
        r1 = float(np.linalg.norm(c.phi(d) - d))
        r2 = fa.residual(d) if fa is not None else math.nan
        vals.append((max(r1, r2) if fa is not None else r1, max(1.0, la.operator_norm(d))))
    worst = _rel(vals)
    detail = {"fixed_algebra_dim": dim}
    if fa is None:
        detail["note"] = note
    return ConditionEntry("C6", worst, c.v(worst), detail=detail)


def _l1(c: _Context, family, n: int, cid: str, diagnostic: bool = False) -> ConditionEntry:
    vals, per = [], []
    for s in family:
        fam = te.l1_equality_family(c.T, s, c.rho, n=n, size_cap=c.opt.size_cap)
        per.append(fam.max_gap)
        vals += [(abs(g), 1.0 + t) for g, t in zip(fam.gaps, fam.t_grid)]
    worst = _rel(vals)
    return ConditionEntry(cid, worst, c.v(worst), diagnostic, {"n": n, "max_gap_per_state": per})


def _c7(c: _Context) -> list[ConditionEntry]:
    fam = _l1(c, c.sigmas, 1, "C7_family", diagnostic=True)
    ext = extended_family(c.sigmas, c.rho, c.opt.extended_s_grid) + c.sigmas
    full = _l1(c, ext, 1, "C7")
    full.detail["extended_s_grid"] = list(c.opt.extended_s_grid)
    return [full, fam]


def _c8(c: _Context) -> ConditionEntry:
    vals, per = [], {}
    for n in range(2, c.opt.ncopy_max + 1):
        gaps = []
        for s in c.sigmas:
            fam = te.l1_equality_family(c.T, s, c.rho, n=n, size_cap=c.opt.size_cap)
            gaps.append(fam.max_gap)
            vals += [(abs(g), 1.0 + t) for g, t in zip(fam.gaps, fam.t_grid)]
        per[str(n)] = gaps
    worst = _rel(vals)
    return ConditionEntry("C8", worst, c.v(worst), detail={"ncopy_max": c.opt.ncopy_max, "per_n": per})


def _inf_gap(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and a == b:
        return 0.0
    return a - b


def _c9(c: _Context) -> ConditionEntry:
    vals = []
    for s in c.sigmas:
        mid = 0.5 * (s + c.rho)
        for x, y in ((s, c.rho), (mid, c.rho), (s, mid)):
            a = te.chernoff(x, y).value
            b = te.chernoff(c.T(x), c.T(y)).value
            vals.append((abs(_inf_gap(a, b)), max(1.0, a) if math.isfinite(a) else 1.0))
    worst = _rel(vals)
    return ConditionEntry("C9", worst, c.v(worst), detail={"pairs": "sigma/rho, midpoint/rho, sigma/midpoint"})


def _r0(c: _Context) -> float | None:
    fam0 = c.opt.family0
    if not fam0:
        return None
    eps = c.opt.r0_epsilon
    vals = [dv.relative_entropy(c.Trho, c.T(eps * c.rho + (1 - eps) * c.sigmas[i])) for i in fam0]
    return float(min(vals))


def _c10(c: _Context) -> ConditionEntry:
    rs = list(c.opt.r_grid)
    r0 = _r0(c)
    if r0 is not None and math.isfinite(r0) and r0 > 0:
        rs.append(0.5 * r0)
    vals, per = [], {}
    for r in rs:
        gaps = []
        for s, ts in zip(c.sigmas, c.Tsig):
            a = te.hoeffding(s, c.rho, r)
            b = te.hoeffding(ts, c.Trho, r)
            g = _inf_gap(a, b)
            gaps.append(g)
            vals.append((abs(g), max(1.0, abs(a)) if math.isfinite(a) else 1.0))
        per[f"{r:.6g}"] = gaps
    worst = _rel(vals)
    return ConditionEntry("C10", worst, c.v(worst), detail={"per_r": per, "r0": r0})


def _c11(c: _Context) -> ConditionEntry:
    basis = fi.tangent_basis(c.sigmas, c.rho)
    vals, per = [], {}
    for tag in c.opt.fisher_tags:
        f = fi.by_tag(tag, c.T.in_dim, c.T.out_dim)
        gaps = []
        for x in basis:
            lam = fi.fisher_metric(c.rho, f, x, x)
            tx = c.T(x)
            g = lam - fi.fisher_metric(c.Trho, f, tx, tx)
            gaps.append(g)
            vals.append((abs(g), max(1.0, lam)))
        per[tag] = gaps
    worst = _rel(vals)
    return ConditionEntry("C11", worst, c.v(worst), detail={"per_f": per, "tangent_dim": len(basis)})


def _fdiv(c: _Context) -> list[ConditionEntry]:
    out = []
    for tag in c.opt.fdiv_tags:
        vals = []
        for s, ts in zip(c.sigmas, c.Tsig):
            a = dv.f_divergence(tag, s, c.rho)
            b = dv.f_divergence(tag, ts, c.Trho)
            vals.append((abs(a - b), max(1.0, abs(a))))
        worst = _rel(vals)
        out.append(ConditionEntry(f"S_f[{tag}]", worst, c.v(worst), diagnostic=True))
    return out


def _functoriality(c: _Context, ds) -> ConditionEntry:
    vals = []
    for d, ts in zip(ds, c.Tsig):
        d0 = rn_derivative(ts, c.Trho).matrix
        vals.append((float(np.linalg.norm(d0 - c.petz(d))), max(1.0, la.operator_norm(d0))))
    worst = _rel(vals)
    return ConditionEntry("d_functoriality", worst, c.v(worst), diagnostic=True)


def _petz_independence(c: _Context) -> ConditionEntry:
    """``T_sigma = T_rho`` on ``supp sigma`` compressions, for reversible families."""
    vals = []
    for s in c.sigmas:
        p = la.support_projection(s).isometry
        diff = petz_dual(c.T, s).superop - c.petz.superop
        # restrict the input of both duals to matrices supported on supp sigma
        vals.append((float(np.linalg.norm(diff @ np.kron(np.conj(p), p))), 1.0))
    worst = _rel(vals)
    return ConditionEntry("petz_independence", worst, c.v(worst), diagnostic=True)


CONDITIONS = ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11")


def check_conditions(T: Channel, sigmas: Sequence, rho, options: CheckOptions | dict | None = None) -> ReversibilityReport:
    """Evaluate C1-C11 for ``T`` on the family ``sigmas`` with reference ``rho``.

    A singular ``rho`` or ``T(rho)`` is handled by compressing everything to
    ``supp rho -> supp T(rho)``; conditions needing ``supp sigma <= supp rho``
    are skipped for members that violate it, and C1/C2 then fail.
    """
    if options is None:
        options = CheckOptions()
    elif isinstance(options, dict):
        options = CheckOptions.from_dict(options)
    wanted = set(options.conditions or CONDITIONS)
    r = la.hermitian_part(rho)
    sig = [la.hermitian_part(s) for s in sigmas]
    if not sig:
        raise ValueError("the family must contain at least one state")

    pos = positivity_report(T, samples=options.positivity_samples, seed=options.seed)
    comp = restrict_to_support(T, r)
    supported = all(dv.check_support(s, r) for s in sig)
    standing = {
        "rho_invertible": bool(la.support_projection(r).rank == T.in_dim),
        "T_rho_invertible": bool(la.support_projection(T(r)).rank == T.out_dim),
        "compressed": not comp.trivial,
        "supports_contained": supported,
        "adjoint_unital": pos.adjoint_unital,
        "schwarz_adjoint": pos.schwarz_sampled,
        "two_positive": pos.two_positive,
        "completely_positive": pos.completely_positive,
        "trace_preserving": pos.trace_preserving,
    }

    full_recovery = petz_recovery(T, r)
    entries: list[ConditionEntry] = []
    if not supported:
        res = [la.trace_norm(full_recovery(T(s)) - s) for s in sig]
        entries.append(ConditionEntry("C1", max(res), verdict(max(res), 1.0, options.hold_rtol, options.fail_rtol),
                                      detail={"per_state": res}))
        gaps = [_inf_gap(dv.relative_entropy(s, r), dv.relative_entropy(T(s), T(r))) for s in sig]
        g = max(abs(x) for x in gaps)
        entries.append(ConditionEntry("C2", g, verdict(g, 1.0, options.hold_rtol, options.fail_rtol)))
        for cid in CONDITIONS[2:]:
            entries.append(ConditionEntry(cid, math.nan, SKIPPED, detail={"reason": "supp sigma not in supp rho"}))
        return _assemble(entries, full_recovery, None, standing)

    tc = comp.channel
    ctx = _Context(tc, [comp.compress_input(s) for s in sig], comp.compress_input(r), options)
    recovery = full_recovery if comp.trivial else extend_recovery(ctx.recovery, comp, r)

    jobs = {
        "C1": lambda: [_c1(ctx)],
        "C2": lambda: [_c2(ctx)],
        "C3": lambda: [_c3(ctx)],
        "C4": lambda: [_c4(ctx)],
        "C7": lambda: _c7(ctx),
        "C8": lambda: [_c8(ctx)],
        "C9": lambda: [_c9(ctx)],
        "C10": lambda: [_c10(ctx)],
        "C11": lambda: [_c11(ctx)],
        "S_f": lambda: _fdiv(ctx),
    }
    if options.ncopy_max < 2:
        jobs.pop("C8")

    def c56():
        e5, ds = _c5(ctx)
        out = [e5] if "C5" in wanted else []
        if "C6" in wanted:
            out.append(_c6(ctx, ds))
        out.append(_functoriality(ctx, ds))
        return out

    jobs = {k: v for k, v in jobs.items() if k in wanted or k == "S_f"}
    jobs["C5"] = c56
    order = [k for k in ("C1", "C2", "C3", "C4", "C5", "C7", "C8", "C9", "C10", "C11", "S_f") if k in jobs]
    nthreads = _threads(options)
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            futures = {k: pool.submit(jobs[k]) for k in order}
            results = {k: futures[k].result() for k in order}
    else:
        results = {k: jobs[k]() for k in order}
    for k in order:
        entries.extend(results[k])

    fac = None
    c1 = next((e for e in entries if e.condition == "C1"), None)
    if c1 is not None and c1.verdict == HOLDS:
        entries.append(_petz_independence(ctx))
        if options.factorize:
            try:
                fac = factorize(tc, ctx.rho, ctx.sigmas, force=True)
                fres = fac.max_residual
                entries.append(ConditionEntry("factorization", fres, ctx.v(fres), diagnostic=True,
                                              detail={"blocks": [list(b) for b in fac.blocks]}))
                frec = recovery_from_factorization(tc, fac)
                rres = max(la.trace_norm(frec(ts) - s) for s, ts in zip(ctx.sigmas, ctx.Tsig))
                choi_min = float(np.linalg.eigvalsh(frec.choi)[0])
                entries.append(ConditionEntry(
                    "factorization_recovery", rres, ctx.v(rres), diagnostic=True,
                    detail={"choi_min_eigenvalue": choi_min,
                            "trace_preserving": frec.is_trace_preserving(1e-8)},
                ))
            except NumericalFailure as exc:
                entries.append(ConditionEntry("factorization", math.nan, INCONCLUSIVE, diagnostic=True,
                                              detail={"error": str(exc)}))
    return _assemble(entries, recovery, fac, standing)


def _assemble(entries, recovery, fac, standing) -> ReversibilityReport:
    verdicts = {e.condition: e.verdict for e in entries}
    overall = verdicts.get("C1", INCONCLUSIVE)
    violations = []
    if overall == HOLDS:
        violations = [e.condition for e in entries if e.verdict == FAILS]
    elif overall == FAILS:
        core = [verdicts.get(c) for c in ("C2", "C3", "C4", "C5", "C6", "C7")]
        if FAILS not in core and all(v is not None and v != SKIPPED for v in core):
            violations = ["no condition among C2-C7 fails although C1 fails"]
    return ReversibilityReport(entries, overall, recovery, fac, standing, not violations, violations)
