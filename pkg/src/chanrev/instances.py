"""Constructed problem instances: reversible families and the two counterexamples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from . import channels as ch
from . import ensembles as en
from . import linalg as la


@dataclass
class Instance:
    name: str
    channel: ch.Channel
    sigmas: list[np.ndarray]
    rho: np.ndarray
    extra: dict = field(default_factory=dict)


# -- equal f-divergence, not reversible --------------------------------------


def fdiv_counterexample(sigma=None, theta: float = 0.35) -> Instance:
    """Qubit instance where ``S_f`` with ``f(x) = 1/(1+x)`` is preserved by a pinching.

    ``p = |0><0|``, ``lam = Tr p sigma != 1/2``, ``x = (1-lam) p + lam (1-p)``,
    ``rho = x sigma x / (lam (1-lam))`` and ``T`` is the pinching onto the
    algebra generated by ``p``.  Then ``(L_sigma + R_rho)^-1(rho) = x`` and
    the same holds after ``T``, yet ``T`` is not reversible because
    ``[sigma, x] != 0``.
    """
    if sigma is None:
        c, s = np.cos(theta), np.sin(theta)
        v = np.array([[c, -s], [s, c]], dtype=complex)
        sigma = v @ np.diag([0.7, 0.3]).astype(complex) @ la.dag(v)
    sigma = la.hermitian_part(sigma)
    d = sigma.shape[0]
    p = np.zeros((d, d), dtype=complex)
    p[0, 0] = 1.0
    lam = float(np.real(np.trace(p @ sigma)))
    if abs(lam - 0.5) < 1e-6:
        raise ValueError("Tr p sigma must differ from 1/2")
    eye = np.eye(d)
    x = (1 - lam) * p + lam * (eye - p)
    rho = x @ sigma @ x / (lam * (1 - lam))
    rho = 0.5 * (rho + la.dag(rho))
    T = ch.pinching([p, eye - p])
    return Instance("fdiv", T, [sigma], rho, {"p": p, "x": x, "lambda": lam})


# -- equal Bures chi-square, not reversible ----------------------------------


def bures_counterexample(rho=None, y=None, scale: float = 0.5) -> Instance:
    """``sigma = rho + rho y + y rho`` with ``Tr rho y = 0`` and ``[rho, y] != 0``.

    ``T`` is the trace-preserving conditional expectation onto the abelian
    algebra generated by ``y``; then ``(L_rho + R_rho)^-1(sigma - rho) = y``
    before and after ``T``, so the Bures chi-square is preserved while
    ``[sigma, rho] = [rho^2, y] != 0``.
    """
    if rho is None:
        rho = np.array([[0.6, 0.2], [0.2, 0.4]], dtype=complex)
    rho = la.hermitian_part(rho)
    d = rho.shape[0]
    if y is None:
        y = np.diag([1.0] + [0.0] * (d - 1)).astype(complex)
    y = la.hermitian_part(y)
    # shift by a multiple of I so that Tr rho y = 0
    y = y - np.real(np.trace(rho @ y)) * np.eye(d)
    for _ in range(60):
        sigma = rho + scale * (rho @ y + y @ rho)
        if la.min_eigenvalue(sigma) > 1e-3:
            break
        scale *= 0.5
    y = scale * y
    sigma = 0.5 * (sigma + la.dag(sigma))
    T = ch.pinching(list(la.hermitian_spectral(y).projections))
    return Instance("bures", T, [sigma], rho, {"y": y})


# -- reversible constructions -------------------------------------------------


def _family(d: int, rng, size: int) -> list[np.ndarray]:
    return [en.random_state(d, rng) for _ in range(size)]


def identity_instance(d: int, rng, size: int = 3) -> Instance:
    rng = en.rng_from(rng)
    return Instance("identity", ch.identity_channel(d), _family(d, rng, size), en.random_state(d, rng))


def unitary_instance(d: int, rng, size: int = 3) -> Instance:
    rng = en.rng_from(rng)
    T = ch.unitary_channel(en.random_unitary(d, rng))
    return Instance("unitary", T, _family(d, rng, size), en.random_state(d, rng))


def random_block_algebra(d: int, rng) -> alg.AlgebraBasis:
    """A random unitary rotation of ``(+)_k M_{n_k} (x) I_{m_k}`` (not the full algebra)."""
    rng = en.rng_from(rng)
    options = {
        2: [[(1, 1), (1, 1)], [(1, 2)]],
        3: [[(1, 1), (1, 1), (1, 1)], [(2, 1), (1, 1)]],
        4: [[(2, 1), (1, 1), (1, 1)], [(1, 2), (1, 2)], [(2, 2)], [(2, 1), (2, 1)],
            [(1, 1), (1, 1), (1, 1), (1, 1)]],
    }
    blocks = options[d][rng.integers(len(options[d]))]
    u = en.random_unitary(d, rng)
    gens, off = [], 0
    for n, m in blocks:
        for i in range(n):
            for j in range(n):
                e = np.zeros((d, d), dtype=complex)
                for k in range(m):
                    e[off + i * m + k, off + j * m + k] = 1.0
                gens.append(u @ e @ la.dag(u))
        off += n * m
    return alg.AlgebraBasis(d, alg.orthonormal_span(gens, d))


def conditional_expectation_instance(d: int, rng, size: int = 3) -> Instance:
    """``T = E`` onto a random block algebra; states are ``E(random)``, so ``E(sigma) = sigma``."""
    rng = en.rng_from(rng)
    a = random_block_algebra(d, rng)
    E = alg.trace_conditional_expectation(a)
    fam = [la.hermitian_part(E(s), atol=1e-8) for s in _family(d, rng, size)]
    rho = la.hermitian_part(E(en.random_state(d, rng)), atol=1e-8)
    return Instance("conditional_expectation", E, fam, rho, {"algebra": a})


def ancilla_instance(d: int, rng, size: int = 3, k: int = 2) -> Instance:
    rng = en.rng_from(rng)
    omega = en.random_state(k, rng)
    T = ch.ancilla_embedding(d, omega)
    return Instance("ancilla", T, _family(d, rng, size), en.random_state(d, rng), {"omega": omega})


def product_block_instance(d_a: int, d_b: int, rng, size: int = 3) -> Instance:
    """Conditional expectation onto ``M_a (x) I`` with states ``sigma_A (x) omega``."""
    rng = en.rng_from(rng)
    omega = en.random_state(d_b, rng)
    d = d_a * d_b
    gens = []
    for i in range(d_a):
        for j in range(d_a):
            e = np.zeros((d_a, d_a), dtype=complex)
            e[i, j] = 1.0
            gens.append(np.kron(e, np.eye(d_b)))
    a = alg.AlgebraBasis(d, alg.orthonormal_span(gens, d))
    T = alg.trace_conditional_expectation(a)
    fam = [np.kron(en.random_state(d_a, rng), omega) for _ in range(size)]
    rho = np.kron(en.random_state(d_a, rng), omega)
    return Instance("product_block", T, fam, rho, {"omega": omega})


def classical_sufficient_instance(n: int, rng, size: int = 3) -> Instance:
    """Diagonal states ``p_theta(i) = g_theta(s(i)) h(i)`` and ``T`` = the statistic ``s``.

    The statistic merges the outcomes into ``n - 1`` classes; by the
    Fisher-Neyman factorization it is sufficient.
    """
    rng = en.rng_from(rng)
    stat = np.concatenate([np.arange(n - 1), [rng.integers(n - 1)]])
    h = rng.uniform(0.5, 1.5, n)
    members = []
    for _ in range(size + 1):
        g = rng.uniform(0.2, 1.0, n - 1)
        p = g[stat] * h
        members.append(np.diag(p / p.sum()).astype(complex))
    stoch = np.zeros((n - 1, n))
    stoch[stat, np.arange(n)] = 1.0
    T = ch.classical_channel(stoch)
    return Instance("classical_sufficient", T, members[:-1], members[-1], {"statistic": stat, "h": h})


def classical_random_instance(n: int, rng, size: int = 3, n_out: int | None = None) -> Instance:
    rng = en.rng_from(rng)
    fam = [en.random_diagonal_state(n, rng) for _ in range(size)]
    T = ch.classical_channel(en.random_stochastic(n, n_out or n, rng))
    return Instance("classical_random", T, fam, en.random_diagonal_state(n, rng))


def random_instance(d: int, rng, size: int = 3, d_out: int | None = None) -> Instance:
    """Generic random CPTP map; not reversible with probability one."""
    rng = en.rng_from(rng)
    d_out = d_out or d
    T = ch.Channel.from_kraus(en.random_kraus(d, d_out, rng, n_kraus=2))
    return Instance("random", T, _family(d, rng, size), en.random_state(d, rng))


REVERSIBLE_BUILDERS = {
    "identity": identity_instance,
    "unitary": unitary_instance,
    "conditional_expectation": conditional_expectation_instance,
    "ancilla": ancilla_instance,
}


# -- witnesses ------------------------------------------------------------------


def fdiv_witness(inst: Instance) -> dict:
    """Residuals showing equal ``S_f`` (``f = 1/(1+x)``) without reversibility."""
    from scipy.linalg import solve_sylvester

    from . import divergences as dv
    from .reversibility import check_conditions

    T, sigma, rho, x = inst.channel, inst.sigmas[0], inst.rho, inst.extra["x"]
    f = dv.inv_one_plus()
    gap = dv.f_divergence(f, sigma, rho) - dv.f_divergence(f, T(sigma), T(rho))
    # (L_sigma + R_rho)^-1 (rho) = x, before and after T
    before = solve_sylvester(sigma, rho, rho)
    after = solve_sylvester(T(sigma), T(rho), T(rho))
    report = check_conditions(T, [sigma], rho, {"ncopy_max": 2})
    return {
        "lambda": inst.extra["lambda"],
        "f_divergence_gap": gap,
        "sylvester_residual": float(np.linalg.norm(before - x)),
        "sylvester_residual_output": float(np.linalg.norm(after - x)),
        "recovery_residual": report.entry("C1").residual,
        "commutator_sigma_x": float(np.linalg.norm(la.commutator(sigma, x), 2)),
        "ncopy_gap": report.entry("C8").residual if "C8" in report.verdicts() else None,
        "trace_norm_gap": report.entry("C7_family").residual,
        "overall": report.overall,
    }


def bures_witness(inst: Instance) -> dict:
    """Residuals showing equal Bures chi-square without reversibility."""
    from . import fisher as fi
    from .reversibility import check_conditions

    T, sigma, rho, y = inst.channel, inst.sigmas[0], inst.rho, inst.extra["y"]
    x = sigma - rho
    bures = fi.bures()
    rich = fi.rich_for(T.in_dim, T.out_dim)
    b = fi.fisher_equality_check(T, rho, x, bures)
    r = fi.fisher_equality_check(T, rho, x, rich)
    report = check_conditions(T, [sigma], rho, {"ncopy_max": 2})
    return {
        "bures_gap": fi.chi2_divergence(sigma, rho, bures) - fi.chi2_divergence(T(sigma), T(rho), bures),
        "bures_sandwich_residual": b.sandwich_residual,
        "bures_nu_support": b.nu_support_size,
        "rich_gap": fi.chi2_divergence(sigma, rho, rich) - fi.chi2_divergence(T(sigma), T(rho), rich),
        "rich_nu_support": r.nu_support_size,
        "modular_spectrum_count": r.spectrum_count,
        "rich_support_hypothesis": r.support_hypothesis,
        "bures_support_hypothesis": b.support_hypothesis,
        "recovery_residual": report.entry("C1").residual,
        "commutator_sigma_rho": float(np.linalg.norm(la.commutator(sigma, rho), 2)),
        "commutator_rho2_y": float(np.linalg.norm(la.commutator(rho @ rho, y), 2)),
        "overall": report.overall,
    }
