import json

import numpy as np
import pytest

from chanrev import channels as ch
from chanrev import cli
from chanrev import ensembles as en
from chanrev import io


def write_problem(path, channel, states, reference="rho", family=None, kind="kraus", options=None):
    data = {
        "version": io.VERSION,
        "states": {k: io.matrix_to_record(v) for k, v in states.items()},
        "reference": reference,
        "family": family or [k for k in states if k != reference],
        "channel": io.channel_to_record(channel, kind),
        "options": options or {"positivity_samples": 20},
    }
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def identity_problem(tmp_path, rng):
    states = {"rho": en.random_state(2, rng), "sigma": en.random_state(2, rng)}
    return write_problem(tmp_path / "identity.json", ch.identity_channel(2), states)


@pytest.fixture
def random_problem(tmp_path, rng):
    T = ch.Channel.from_kraus(en.random_kraus(2, 2, rng, n_kraus=2))
    states = {"rho": en.random_state(2, rng), "sigma": en.random_state(2, rng)}
    return write_problem(tmp_path / "random.json", T, states, kind="choi")


def run_json(capsys, argv):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_diagnose_identity(capsys, identity_problem):
    code, out = run_json(capsys, ["diagnose", identity_problem])
    assert code == cli.EX_OK
    entries = out["report"]["conditions"]
    assert all(e["verdict"] == "holds" for e in entries)
    main = [e["residual"] for e in entries if not e["diagnostic"]]
    assert max(main) <= 1e-10


def test_diagnose_random_exits_not_reversible(capsys, random_problem):
    code, out = run_json(capsys, ["diagnose", random_problem, "--ncopy-max", "1"])
    assert code == cli.EX_NOT_REVERSIBLE
    assert out["report"]["overall"] == "fails"


def test_np_test_at_zero(capsys, tmp_path):
    sigma = np.diag([1.0, 0.0]).astype(complex)
    path = write_problem(tmp_path / "pair.json", ch.identity_channel(2),
                         {"rho": np.eye(2) / 2, "sigma": sigma})
    code, out = run_json(capsys, ["np-test", path, "--t", "0"])
    assert code == 0
    assert np.allclose(io.record_to_matrix(out["P_plus"]), sigma)
    assert out["trace_norm"] == pytest.approx(1.0)


@pytest.mark.parametrize("argv", [
    ["chernoff"], ["divergence", "x.json", "--f", "xlogx"], ["hoeffding", "x.json", "--r", "0.1"],
    ["fisher", "x.json", "--f", "bures"], ["recover", "x.json"],
])
def test_pair_commands(capsys, identity_problem, argv):
    argv = [a if a != "x.json" else identity_problem for a in argv]
    if argv == ["chernoff"]:
        argv.append(identity_problem)
    code, out = run_json(capsys, argv)
    assert code == 0 and out["command"] == argv[0]


def test_identity_preserves_everything(capsys, identity_problem):
    _, out = run_json(capsys, ["divergence", identity_problem, "--f", "inv_one_plus"])
    assert abs(out["gap"]) <= 1e-12
    _, out = run_json(capsys, ["recover", identity_problem])
    assert out["states"]["sigma"]["residual"] <= 1e-10


def test_counterexamples(capsys):
    code, out = run_json(capsys, ["counterexample", "fdiv"])
    assert code == 0
    w = out["witness"]
    assert abs(w["f_divergence_gap"]) <= 1e-10 and w["recovery_residual"] > 1e-3
    code, out = run_json(capsys, ["counterexample", "bures"])
    w = out["witness"]
    assert abs(w["bures_gap"]) <= 1e-10 and w["rich_gap"] >= 1e-6


def test_usage_errors(capsys, identity_problem):
    assert cli.run(["bogus"]) == cli.EX_USAGE
    assert cli.run([]) == cli.EX_USAGE
    assert cli.run(["np-test", identity_problem]) == cli.EX_USAGE
    assert cli.run(["np-test", identity_problem, "--t", "-1"]) == cli.EX_USAGE
    assert cli.run(["hoeffding", identity_problem, "--r", "-0.5"]) == cli.EX_USAGE


def test_data_errors(capsys, tmp_path, identity_problem):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["diagnose", str(bad)]) == cli.EX_DATAERR
    assert cli.run(["diagnose", str(tmp_path / "missing.json")]) == cli.EX_DATAERR
    data = json.loads(open(identity_problem).read())
    data["states"]["rho"]["data"][0] = [2.0, 0.0]
    bad.write_text(json.dumps(data))
    assert cli.run(["diagnose", str(bad)]) == cli.EX_DATAERR
    data = json.loads(open(identity_problem).read())
    data["version"] = "chanrev/0"
    bad.write_text(json.dumps(data))
    assert cli.run(["diagnose", str(bad)]) == cli.EX_DATAERR
    assert cli.run(["divergence", identity_problem, "--f", "xlogx", "--sigma", "nobody"]) == cli.EX_DATAERR


def test_out_file_and_determinism(tmp_path, random_problem, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.run(["diagnose", random_problem, "--out", str(a)])
    cli.run(["diagnose", random_problem, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out == ""


def test_threads_env_gives_same_bytes(tmp_path, random_problem, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.run(["diagnose", random_problem, "--out", str(a)])
    monkeypatch.setenv("CHANREV_THREADS", "3")
    cli.run(["diagnose", random_problem, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_problem_round_trip(tmp_path, rng):
    T = ch.Channel.from_kraus(en.random_kraus(2, 3, rng))
    states = {"rho": en.random_state(2, rng), "s1": en.random_state(2, rng)}
    for kind in ("kraus", "choi", "super"):
        path = write_problem(tmp_path / f"{kind}.json", T, states, kind=kind)
        prob = io.load_problem(path)
        assert np.allclose(prob.channel.superop, T.superop, atol=1e-12)
        again = io.parse_problem(json.loads(io.dumps(prob.to_dict())))
        assert io.dumps(again.to_dict()) == io.dumps(prob.to_dict())
        assert np.allclose(again.rho, states["rho"])


def test_non_finite_numbers_are_strings():
    text = io.dumps({"a": float("inf"), "b": -np.inf, "c": np.nan})
    data = json.loads(text)
    assert data == {"a": "inf", "b": "-inf", "c": "nan"}
    assert io.parse_number(data["a"]) == float("inf")
