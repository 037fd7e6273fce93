"""Acceptance criteria of the toolkit.

Each test prints one ``PASS``/``FAIL`` line (also collected in the terminal
summary under "acceptance criteria").  Expected values come from
constructions with known answers or from independent oracles (scalar
formulas, dense eigenvalue problems, fine grids), never from the code under
test.
"""

import math
import time

import numpy as np
import pytest
from scipy.linalg import logm

from chanrev import channels as ch
from chanrev import divergences as dv
from chanrev import ensembles as en
from chanrev import fisher as fi
from chanrev import instances
from chanrev import linalg as la
from chanrev import reversibility as rv
from chanrev import testing as te

pytestmark = pytest.mark.acceptance

CONDITIONS = [f"C{i}" for i in range(1, 12)]


def _conditioned_state(d, rng, floor=0.2):
    """A random state mixed with ``I/d`` so that its smallest eigenvalue is at least ``floor/d``."""
    return (1 - floor) * en.random_state(d, rng) + floor * np.eye(d) / d


# -- 1 ---------------------------------------------------------------------------


def test_criterion_1_recovery_on_sufficient_instances(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_c1, bad, count = 0.0, [], 0
    for kind, build in instances.REVERSIBLE_BUILDERS.items():
        for k in range(20):
            d = 2 + k % 3
            inst = build(d, rng)
            rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho)
            per_state = [la.trace_norm(rep.recovery(inst.channel(s)) - s) for s in inst.sigmas]
            worst_c1 = max(worst_c1, *per_state)
            verdicts = rep.verdicts()
            not_holding = [c for c in CONDITIONS if verdicts.get(c) != rv.HOLDS]
            if not_holding or max(per_state) > 1e-9 or not rep.consistent:
                bad.append(f"{kind}[d={d}]:{not_holding}")
            count += 1
    elapsed = time.perf_counter() - start
    ok = not bad and worst_c1 <= 1e-9 and elapsed <= 60
    criterion(1, "Petz recovery exact on sufficient instances", ok,
              f"{count} instances, max C1 residual {worst_c1:.2e}, failures {bad[:3]}, {elapsed:.1f}s")


# -- 2 ---------------------------------------------------------------------------


def test_criterion_2_fdiv_counterexample(criterion):
    start = time.perf_counter()
    inst = instances.fdiv_counterexample()
    T, sigma, rho, x = inst.channel, inst.sigmas[0], inst.rho, inst.extra["x"]
    f = dv.inv_one_plus()
    gap = dv.f_divergence(f, sigma, rho) - dv.f_divergence(f, T(sigma), T(rho))
    # (L_sigma + R_rho)^-1 (rho) = x before and after T, checked entrywise
    syl = max(np.linalg.norm(sigma @ x + x @ rho - rho),
              np.linalg.norm(T(sigma) @ x + x @ T(rho) - T(rho)))
    rep = rv.check_conditions(T, [sigma], rho)
    c1 = rep.entry("C1").residual
    comm = float(np.linalg.norm(la.commutator(sigma, x), 2))
    try:
        rv.factorize(T, rho, [sigma])
        factorization_fails = False
    except rv.NotReversible:
        factorization_fails = True
    forced = rv.factorize(T, rho, [sigma], force=True).max_residual
    elapsed = time.perf_counter() - start
    ok = (abs(gap) <= 1e-10 and syl <= 1e-10 and c1 >= 1e-3 and comm > 1e-6
          and factorization_fails and forced > 1e-6 and rep.overall == rv.FAILS and elapsed <= 5)
    criterion(2, "equal S_f for 1/(1+x) without reversibility", ok,
              f"S_f gap {gap:.1e}, sylvester {syl:.1e}, C1 {c1:.4f}, ||[sigma,x]|| {comm:.4f}, "
              f"forced factorization residual {forced:.3f}, {elapsed:.2f}s")


# -- 3 ---------------------------------------------------------------------------


def test_criterion_3_bures_counterexample(criterion):
    start = time.perf_counter()
    inst = instances.bures_counterexample()
    T, sigma, rho, y = inst.channel, inst.sigmas[0], inst.rho, inst.extra["y"]
    bures = fi.bures()
    gap = fi.chi2_divergence(sigma, rho, bures) - fi.chi2_divergence(T(sigma), T(rho), bures)
    rep = rv.check_conditions(T, [sigma], rho)
    c1 = rep.entry("C1").residual
    c_sr = float(np.linalg.norm(la.commutator(sigma, rho), 2))
    c_ry = float(np.linalg.norm(la.commutator(rho @ rho, y), 2))
    rich = fi.rich_for(T.in_dim, T.out_dim)
    chk = fi.fisher_equality_check(T, rho, sigma - rho, rich)
    spectrum = len(np.unique(np.round(np.concatenate(
        [fi.modular_spectrum(rho), fi.modular_spectrum(T(rho))]), 9)))
    rich_gap = fi.chi2_divergence(sigma, rho, rich) - fi.chi2_divergence(T(sigma), T(rho), rich)
    elapsed = time.perf_counter() - start
    ok = (abs(gap) <= 1e-10 and c1 >= 1e-3 and c_sr > 1e-6 and abs(c_sr - c_ry) <= 1e-10
          and rich.nu_support_size >= spectrum and rich_gap >= 1e-6 and chk.support_hypothesis
          and elapsed <= 5)
    criterion(3, "equal Bures chi-square without reversibility; rich metric separates", ok,
              f"Bures gap {gap:.1e}, C1 {c1:.4f}, ||[sigma,rho]|| {c_sr:.4f} = ||[rho^2,y]|| {c_ry:.4f}, "
              f"rich gap {rich_gap:.4f} (|supp nu| {rich.nu_support_size} >= {spectrum}), {elapsed:.2f}s")


# -- 4 ---------------------------------------------------------------------------


def test_criterion_4_monotonicity_suite(criterion):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    violations, checks = [], 0
    fdivs = {"xlogx": dv.xlogx(), **{f"1-x^{s}": dv.one_minus_power(s) for s in (0.25, 0.5, 0.75)}}
    for k in range(200):
        d, d_out = 2 + k % 3, 2 + (k // 3) % 3
        n_kraus = max(int(rng.integers(1, 4)), -(-d // d_out))
        T = ch.Channel.from_kraus(en.random_kraus(d, d_out, rng, n_kraus=n_kraus))
        s, r = en.random_state(d, rng), en.random_state(d, rng)
        ts, tr = T(s), T(r)
        vals = {}
        for name, f in fdivs.items():
            vals[name] = (dv.f_divergence(f, s, r), dv.f_divergence(f, ts, tr))
        for t in (0.25, 0.5, 1.0, 2.0, 4.0):
            vals[f"l1[t={t}]"] = (la.trace_norm(s - t * r), la.trace_norm(ts - t * tr))
        vals["chernoff"] = (te.chernoff(s, r).value, te.chernoff(ts, tr).value)
        for rate in (0.0, 0.1, 1.0):
            vals[f"hoeffding[r={rate}]"] = (te.hoeffding(s, r, rate), te.hoeffding(ts, tr, rate))
        for tag, f in fi.catalog(d, d_out).items():
            vals[f"chi2[{tag}]"] = (fi.chi2_divergence(s, r, f), fi.chi2_divergence(ts, tr, f))
        for name, (before, after) in vals.items():
            checks += 1
            if not after <= before + 1e-8:
                violations.append(f"#{k} {name}: {before:.3e} < {after:.3e}")
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed <= 120
    criterion(4, "monotonicity under random CPTP maps", ok,
              f"200 triples, {checks} comparisons, {len(violations)} violations {violations[:3]}, {elapsed:.1f}s")


# -- 5 ---------------------------------------------------------------------------


def _pair_with_degenerate_ratio(d, rng):
    """``sigma = rho^1/2 D rho^1/2`` with ``D`` having a repeated eigenvalue."""
    rho = _conditioned_state(d, rng)
    vals = rng.uniform(0.3, 2.0, d)
    vals[1] = vals[0]
    u = en.random_unitary(d, rng)
    dmat = u @ np.diag(vals) @ la.dag(u)
    half = la.sqrtm_psd(rho)
    sigma = half @ dmat @ half
    return la.hermitian_part(sigma / np.trace(sigma), atol=1e-8), rho


def test_criterion_5_kernel_rank_laws(criterion):
    rng = np.random.default_rng(5)
    offset = 1e-7
    violations, checked = [], 0
    for d in (2, 3, 4):
        for k in range(50):
            if k % 5 == 0:
                sigma, rho = _pair_with_degenerate_ratio(d, rng)
            else:
                sigma, rho = _conditioned_state(d, rng), _conditioned_state(d, rng)
            # oracle: eigenvalues of d(sigma, rho) from a dense generalized eigenproblem
            ev = np.sort(np.real(np.linalg.eigvals(np.linalg.solve(rho, sigma))))
            groups = []
            for e in ev:
                if groups and abs(e - groups[-1][0]) <= 1e-9 * max(1.0, abs(e)):
                    groups[-1][1] += 1
                else:
                    groups.append([e, 1])
            for t, mult in groups:
                here = te.np_test(sigma, rho, t)
                left = te.np_test(sigma, rho, t - offset)
                checked += 1
                if here.rank_zero != mult:
                    violations.append(f"d={d} #{k}: rank P0 {here.rank_zero} != multiplicity {mult}")
                if left.rank_plus - here.rank_plus != here.rank_zero:
                    violations.append(f"d={d} #{k}: jump {left.rank_plus - here.rank_plus} != {here.rank_zero}")
    ok = not violations
    criterion(5, "NP kernel rank equals RN-derivative multiplicity; left-limit jump", ok,
              f"150 pairs, {checked} eigenvalues, {len(violations)} violations {violations[:3]}")


# -- 6 ---------------------------------------------------------------------------


def test_criterion_6_equivalence_coherence(criterion):
    rng = np.random.default_rng(6)
    reversible = [
        lambda k: instances.identity_instance(2 + k % 3, rng),
        lambda k: instances.unitary_instance(2 + k % 3, rng),
        lambda k: instances.conditional_expectation_instance(2 + k % 3, rng),
        lambda k: instances.ancilla_instance(2 + k % 2, rng),
        lambda k: instances.product_block_instance(2, 2, rng),
        lambda k: instances.classical_sufficient_instance(3 + k % 2, rng),
    ]
    generic = [
        lambda k: instances.random_instance(2 + k % 3, rng),
        lambda k: instances.random_instance(2 + k % 2, rng, d_out=3 - k % 2),
        lambda k: instances.classical_random_instance(3 + k % 2, rng),
    ]
    problems, classical_checked = [], 0
    for k in range(100):
        builders = reversible if k % 2 == 0 else generic
        inst = builders[(k // 2) % len(builders)](k)
        rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho)
        expected = rv.HOLDS if k % 2 == 0 else rv.FAILS
        if not rep.consistent or rep.overall != expected:
            problems.append(f"#{k} {inst.name}: overall {rep.overall}, violations {rep.violations}")
        if inst.name.startswith("classical"):
            classical_checked += 1
            fam = rep.entry("C7_family").verdict == rv.HOLDS
            if fam != (rep.overall == rv.HOLDS):
                problems.append(f"#{k} {inst.name}: C7 on the family {fam} vs C1 {rep.overall}")
    ok = not problems
    criterion(6, "C1 verdict coherent with C2-C7; classical C7 on family <=> C1", ok,
              f"100 instances ({classical_checked} classical), {len(problems)} disagreements {problems[:3]}")


# -- 7 ---------------------------------------------------------------------------


def _block_instances(rng, n):
    """Mix of clearly positive, clearly indefinite and boundary (singular) block matrices."""
    out = []
    for k in range(n):
        d = 1 + k % 4
        a = en.random_state(d, rng) * d
        c = en.random_state(d, rng, rank=max(1, d - k % 2)) * d
        kind = k % 4
        if kind == 0:  # contraction: a - b c^- b* >= 0 exactly when ||K|| <= 1
            kk = en.ginibre(d, d, rng)
            kk *= rng.uniform(0.2, 1.8) / la.operator_norm(kk)
            b = la.sqrtm_psd(a) @ kk @ la.sqrtm_psd(c)
        elif kind == 1:  # exactly on the boundary
            kk = en.random_unitary(d, rng)
            b = la.sqrtm_psd(a) @ kk @ la.sqrtm_psd(c)
        elif kind == 2:  # leaves the range of c whenever c is singular
            b = en.ginibre(d, d, rng) * 0.3
        else:
            b = en.ginibre(d, d, rng) * rng.uniform(0.05, 2.0)
        out.append((a, b, c))
    return out


def _commuting_pair(d, rng):
    u = en.random_unitary(d, rng)
    p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    return p, q, u @ np.diag(p) @ la.dag(u), u @ np.diag(q) @ la.dag(u)


def test_criterion_7_oracle_equivalences(criterion):
    rng = np.random.default_rng(7)
    notes, failures = [], []

    # block positivity vs eigenvalues of the assembled matrix
    disagreements = 0
    blocks = _block_instances(rng, 240)
    for a, b, c in blocks:
        full = np.block([[a, b], [la.dag(b), c]])
        scale = max(1.0, *(float(np.max(np.abs(x))) for x in (a, b, c)))
        oracle = np.linalg.eigvalsh(full)[0] >= -1e-9 * scale
        if la.block_positive(a, b, c) != oracle:
            disagreements += 1
    notes.append(f"block_positive {len(blocks)} cases, {disagreements} disagreements")
    if disagreements:
        failures.append("block_positive")

    # commuting pairs vs scalar formulas
    worst = 0.0
    for k in range(60):
        p, q, s, r = _commuting_pair(2 + k % 3, rng)
        formulas = {
            "xlogx": float(np.sum(p * np.log(p / q))),
            "inv_one_plus": float(np.sum(q / (1 + p / q))),
            **{f"one_minus_power({a:g})": float(1 - np.sum(p ** a * q ** (1 - a))) for a in (0.25, 0.5, 0.75)},
        }
        for tag, expected in formulas.items():
            worst = max(worst, abs(dv.f_divergence(tag, s, r) - expected))
        worst = max(worst, abs(dv.relative_entropy(s, r) - formulas["xlogx"]))
        for a in (0.25, 0.5, 0.75):
            worst = max(worst, abs(dv.power_trace(s, r, a) - np.sum(p ** a * q ** (1 - a))))
    notes.append(f"commuting divergences max error {worst:.1e}")
    if worst > 1e-10:
        failures.append("commuting divergences")

    # Chernoff / Hoeffding vs 10^4-point grids (curves evaluated with matrix powers directly)
    u_grid = np.linspace(0.0, 1.0, 10_001)
    worst_c = worst_h = 0.0
    for k in range(20):
        d = 2 + k % 3
        s, r = en.random_state(d, rng), en.random_state(d, rng)
        ws, vs = np.linalg.eigh(s)
        wr, vr = np.linalg.eigh(r)
        ov = np.abs(vs.conj().T @ vr) ** 2
        q = np.array([np.sum(np.outer(ws ** u, wr ** (1 - u)) * ov) for u in u_grid])
        c_grid = -math.log(q.min())
        worst_c = max(worst_c, abs(te.chernoff(s, r).value - c_grid))
        for rate in (0.1, 1.0):
            # Tr sigma^u rho^(1-u), u in [0, 1)
            h_grid = float(np.max((-u_grid[:-1] * rate - np.log(q[:-1])) / (1 - u_grid[:-1])))
            worst_h = max(worst_h, abs(te.hoeffding(s, r, rate) - h_grid))
    notes.append(f"Chernoff vs grid {worst_c:.1e}, Hoeffding vs grid {worst_h:.1e}")
    if worst_c > 1e-8 or worst_h > 1e-8:
        failures.append("chernoff/hoeffding grids")

    # H_0 = S(sigma, rho), relative entropy from scipy's logm
    worst0 = 0.0
    for k in range(20):
        d = 2 + k % 3
        s, r = en.random_state(d, rng), en.random_state(d, rng)
        rel = float(np.real(np.trace(s @ (logm(s) - logm(r)))))
        worst0 = max(worst0, abs(te.hoeffding(s, r, 0.0) - rel))
    notes.append(f"H_0 vs S {worst0:.1e}")
    if worst0 > 1e-6:
        failures.append("H_0")

    # plateau beyond the threshold
    worst_p = 0.0
    for k in range(20):
        d = 2 + k % 3
        s = en.random_state(d, rng, rank=max(1, d - 1))
        r = en.random_state(d, rng)
        w, v = np.linalg.eigh(s)
        vq = v[:, w > 1e-12]
        plateau = -math.log(float(np.real(np.trace(vq.conj().T @ r @ vq))))
        thr = te.hoeffding_threshold(s, r)
        for extra in (1e-3, 0.5, 3.0):
            worst_p = max(worst_p, abs(te.hoeffding(s, r, thr + extra) - plateau))
    notes.append(f"plateau {worst_p:.1e}")
    if worst_p > 1e-8:
        failures.append("plateau")

    criterion(7, "oracle equivalences", not failures, "; ".join(notes))


# -- 8 ---------------------------------------------------------------------------


def test_criterion_8_ncopy_scaling(criterion):
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    worst = 0.0
    cases = [instances.identity_instance(2, rng, size=2), instances.unitary_instance(2, rng, size=2),
             instances.conditional_expectation_instance(2, rng, size=2),
             instances.ancilla_instance(2, rng, size=1)]
    for inst in cases:
        for n in range(1, 6):
            for s in inst.sigmas:
                fam = te.l1_equality_family(inst.channel, s, inst.rho, n=n)
                worst = max(worst, max(abs(g) for g in fam.gaps))
    ce = instances.fdiv_counterexample()
    gaps = {}
    for n in (1, 2):
        fam = te.l1_equality_family(ce.channel, ce.sigmas[0], ce.rho, n=n)
        k = int(np.argmax(fam.gaps))
        gaps[n] = (fam.gaps[k], fam.t_grid[k])
    best_n = max(gaps, key=lambda n: gaps[n][0])
    best_gap, best_t = gaps[best_n]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and best_gap > 1e-8 and elapsed <= 60
    criterion(8, "n-copy trace-norm gaps", ok,
              f"reversible max |gap| {worst:.1e} (n <= 5); counterexample gap {best_gap:.4g} "
              f"at n={best_n}, t={best_t:.4g} (n=1: {gaps[1][0]:.3g}); {elapsed:.1f}s")
