import math

import numpy as np
import pytest

from chanrev import algebra as alg
from chanrev import channels as ch
from chanrev import ensembles as en
from chanrev import instances
from chanrev import linalg as la
from chanrev import reversibility as rv
from chanrev.errors import NotInvertible, NotReversible, SupportViolation

FAST = {"ncopy_max": 2, "positivity_samples": 30}


def test_verdict_thresholds():
    assert rv.verdict(1e-12) == rv.HOLDS
    assert rv.verdict(1e-3) == rv.FAILS
    assert rv.verdict(1e-6) == rv.INCONCLUSIVE
    assert rv.verdict(1e-7, scale=100.0) == rv.HOLDS


def test_rn_derivative_examples(rng):
    r = en.random_state(3, rng)
    d = rv.rn_derivative(r, r)
    assert np.allclose(d.matrix, np.eye(3), atol=1e-10)
    d = rv.rn_derivative(np.diag([0.6, 0.4]), np.diag([0.3, 0.7]))
    assert np.allclose(d.matrix, np.diag([2.0, 4 / 7]))
    s = en.random_state(3, rng)
    d = rv.rn_derivative(s, r)
    assert d.drs_residual(s, r) <= 1e-12
    assert la.min_eigenvalue(d.matrix) >= 0
    with pytest.raises(SupportViolation):
        rv.rn_derivative(np.eye(2) / 2, np.diag([1.0, 0.0]))


def test_fixed_point_algebra_examples(rng):
    assert rv.fixed_point_algebra(ch.identity_channel(3)).dimension == 9
    assert rv.fixed_point_algebra(ch.diagonal_pinching(3)).dimension == 3
    T = ch.Channel.from_kraus(en.random_kraus(3, 3, rng))
    phi = rv.recovery_composition(T, en.random_state(3, rng))
    fa = rv.fixed_point_algebra(phi)
    assert fa.dimension == 1
    assert fa.contains(np.eye(3))


def test_fixed_point_projection_is_idempotent(rng):
    T = ch.Channel.from_kraus(en.random_kraus(3, 3, rng))
    phi = rv.recovery_composition(T, en.random_state(3, rng))
    p = rv.fixed_point_projection(phi)
    assert np.allclose(p @ p, p, atol=1e-10)
    assert np.allclose(phi.superop @ p, p, atol=1e-10)


def test_multiplicative_domain(rng):
    u = en.random_unitary(3, rng)
    a = en.ginibre(3, 3, rng)
    ok, res = rv.multiplicative_domain_membership(ch.unitary_channel(u), a)
    assert ok and res <= 1e-12
    ok, _ = rv.multiplicative_domain_membership(ch.diagonal_pinching(3), a)
    assert not ok
    ok, _ = rv.multiplicative_domain_membership(ch.diagonal_pinching(3), np.diag([1.0, 2.0, 3.0]))
    assert ok


def test_factorize_conditional_expectation(rng):
    inst = instances.conditional_expectation_instance(4, rng)
    fac = rv.factorize(inst.channel, inst.rho, inst.sigmas)
    assert fac.max_residual <= 1e-8
    assert np.allclose(fac.rho_B / np.trace(fac.rho_B) * 4, np.eye(4), atol=1e-8)


def test_factorize_identity_and_product(rng):
    inst = instances.identity_instance(3, rng)
    fac = rv.factorize(inst.channel, inst.rho, inst.sigmas)
    assert np.allclose(fac.rho_B, np.eye(3), atol=1e-8)
    assert fac.max_residual <= 1e-8
    inst = instances.product_block_instance(2, 2, rng)
    fac = rv.factorize(inst.channel, inst.rho, inst.sigmas)
    assert fac.max_residual <= 1e-8
    omega = np.kron(np.eye(2), inst.extra["omega"])
    # rho_B is the ancilla factor, up to the normalization fixed by rho_A
    rb = fac.rho_B / np.trace(fac.rho_B) * 2
    assert np.allclose(rb, omega, atol=1e-8)


def test_factorize_classical(rng):
    inst = instances.classical_sufficient_instance(4, rng)
    fac = rv.factorize(inst.channel, inst.rho, inst.sigmas)
    assert fac.max_residual <= 1e-8


def test_factorize_rejects(rng):
    inst = instances.random_instance(3, rng)
    with pytest.raises(NotReversible):
        rv.factorize(inst.channel, inst.rho, inst.sigmas)
    with pytest.raises(NotInvertible):
        rv.factorize(ch.identity_channel(2), np.diag([1.0, 0.0]), [np.diag([1.0, 0.0])])


def test_extended_family(rng):
    r, s = en.random_state(3, rng), en.random_state(3, rng)
    fam = rv.extended_family([s], r, [0.0, 0.7, -1.3])
    assert np.allclose(fam[0], s)
    for m in fam:
        assert np.trace(m) == pytest.approx(1.0, abs=1e-12)
        assert la.min_eigenvalue(m) >= -1e-12
    diag = np.diag([0.2, 0.3, 0.5])
    commuting = rv.extended_family([diag], np.diag([0.5, 0.3, 0.2]), [1.0, 2.0])
    assert all(np.allclose(m, diag) for m in commuting)


def test_identity_report(rng):
    inst = instances.identity_instance(3, rng)
    rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    assert rep.overall == rv.HOLDS and rep.reversible and rep.consistent
    assert all(v == rv.HOLDS for v in rep.verdicts().values())
    assert rep.entry("C1").residual <= 1e-10


@pytest.mark.parametrize("kind", sorted(instances.REVERSIBLE_BUILDERS))
def test_reversible_reports(kind, rng):
    inst = instances.REVERSIBLE_BUILDERS[kind](3, rng)
    rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    bad = {k: v for k, v in rep.verdicts().items() if v != rv.HOLDS}
    assert not bad, bad
    rec = rep.entry("factorization_recovery")
    assert rec.detail["choi_min_eigenvalue"] >= -1e-9
    assert rec.detail["trace_preserving"]
    assert rep.entry("petz_independence").verdict == rv.HOLDS
    assert rep.entry("d_functoriality").residual <= 1e-9


def test_random_report_fails_consistently(rng):
    inst = instances.random_instance(3, rng)
    rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    assert rep.overall == rv.FAILS and rep.consistent
    assert rep.entry("d_functoriality").residual <= 1e-9


def test_recovery_and_rn_pullback_agree(rng):
    # C1 small <=> C5 small, within a factor-10 band around the hold threshold
    cases = [instances.identity_instance(2, rng), instances.unitary_instance(3, rng),
             instances.random_instance(2, rng), instances.classical_random_instance(3, rng)]
    for inst in cases:
        rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho,
                                  {**FAST, "conditions": ("C1", "C5")})
        c1, c5 = rep.entry("C1").residual, rep.entry("C5").residual
        if c1 <= 1e-9:
            assert c5 <= 1e-8
        if c1 >= 1e-7:
            assert c5 >= 1e-8
        if c5 <= 1e-9:
            assert c1 <= 1e-8


def test_counterexamples_fail(rng):
    for inst in (instances.fdiv_counterexample(), instances.bures_counterexample()):
        rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
        assert rep.overall == rv.FAILS and rep.consistent
    inst = instances.bures_counterexample()
    rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    assert rep.entry("C7_family").verdict == rv.HOLDS
    assert rep.entry("C7").verdict == rv.FAILS


def test_singular_reference_is_compressed(rng):
    # rho and the family live on a 2-dimensional subspace of C^3
    v = en.random_isometry(3, 2, rng)
    lift = lambda m: v @ m @ la.dag(v)
    rho = lift(en.random_state(2, rng))
    sigmas = [lift(en.random_state(2, rng)) for _ in range(2)]
    rep = rv.check_conditions(ch.identity_channel(3), sigmas, rho, FAST)
    assert rep.standing["compressed"] and not rep.standing["rho_invertible"]
    assert rep.overall == rv.HOLDS and rep.consistent
    assert la.trace_norm(rep.recovery(sigmas[0]) - sigmas[0]) <= 1e-9


def test_support_violation_skips(rng):
    rho = np.diag([1.0, 0.0]).astype(complex)
    rep = rv.check_conditions(ch.identity_channel(2), [np.eye(2) / 2], rho, FAST)
    assert rep.overall == rv.FAILS
    assert rep.entry("C5").verdict == rv.SKIPPED
    assert rep.consistent


def test_threads_give_identical_reports(rng, monkeypatch):
    inst = instances.random_instance(2, rng)
    a = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    monkeypatch.setenv("CHANREV_THREADS", "4")
    b = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
    assert [e.to_dict() for e in a.entries] == [e.to_dict() for e in b.entries]


def test_classical_trace_norm_family_matches_recovery(rng):
    for inst in (instances.classical_sufficient_instance(4, rng), instances.classical_random_instance(3, rng)):
        rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho, FAST)
        assert (rep.entry("C7_family").verdict == rv.HOLDS) == (rep.overall == rv.HOLDS)


def test_hoeffding_r0_is_used(rng):
    inst = instances.random_instance(2, rng)
    rep = rv.check_conditions(inst.channel, inst.sigmas, inst.rho,
                              {**FAST, "conditions": ("C1", "C10"), "family0": [0]})
    r0 = rep.entry("C10").detail["r0"]
    assert r0 is not None and r0 > 0
    assert f"{0.5 * r0:.6g}" in rep.entry("C10").detail["per_r"]


def test_options_from_dict():
    opts = rv.CheckOptions.from_dict({"r_grid": [0, 0.5], "ncopy_max": 3})
    assert opts.r_grid == (0, 0.5) and opts.ncopy_max == 3
