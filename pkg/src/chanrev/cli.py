"""Command-line front end.

Every subcommand writes one JSON document to stdout (or ``--out``).

Exit codes: 0 success (``diagnose``: reversible), 2 not reversible,
3 inconclusive, 64 usage error, 65 malformed input, 70 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import divergences as dv
from . import fisher as fi
from . import instances
from . import io
from . import testing as te
from .channels import petz_recovery
from .errors import ChanrevError, NumericalFailure, SupportViolation
from .reversibility import FAILS, HOLDS, CheckOptions, check_conditions

EX_OK, EX_NOT_REVERSIBLE, EX_INCONCLUSIVE = 0, 2, 3
EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(payload, out: str | None) -> None:
    text = io.dumps(payload)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pair(problem: io.Problem, args) -> tuple[np.ndarray, np.ndarray, str, str]:
    sname = args.sigma or problem.family[0]
    rname = args.rho or problem.reference
    for n in (sname, rname):
        if n not in problem.states:
            raise io.FormatError(f"unknown state {n!r}")
    return problem.states[sname], problem.states[rname], sname, rname


def _options(problem: io.Problem, args) -> CheckOptions:
    opts = dict(problem.options)
    for key in ("hold_rtol", "fail_rtol", "ncopy_max", "threads"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if getattr(args, "r_grid", None):
        opts["r_grid"] = args.r_grid
    return CheckOptions.from_dict(opts)


def cmd_diagnose(args) -> int:
    problem = io.load_problem(args.problem)
    report = check_conditions(problem.channel, problem.sigmas, problem.rho, _options(problem, args))
    payload = {"command": "diagnose", "version": io.VERSION, "family": problem.family,
               "report": report}
    _emit(payload, args.out)
    if report.overall == HOLDS:
        return EX_OK
    return EX_NOT_REVERSIBLE if report.overall == FAILS else EX_INCONCLUSIVE


def cmd_recover(args) -> int:
    problem = io.load_problem(args.problem)
    T, rho = problem.channel, problem.rho
    rec = petz_recovery(T, rho)
    states = {}
    for name in problem.family:
        s = problem.states[name]
        r = rec(T(s))
        states[name] = {"recovered": r, "residual": float(np.sum(np.abs(np.linalg.eigvalsh(r - s))))}
    _emit({"command": "recover", "version": io.VERSION, "recovery": rec, "states": states}, args.out)
    return EX_OK


def cmd_divergence(args) -> int:
    problem = io.load_problem(args.problem)
    s, r, sn, rn = _pair(problem, args)
    T = problem.channel
    f = dv.by_tag(args.f)
    before = dv.f_divergence(f, s, r)
    after = dv.f_divergence(f, T(s), T(r))
    _emit({"command": "divergence", "f": args.f, "sigma": sn, "rho": rn,
           "value": before, "value_after_channel": after, "gap": before - after}, args.out)
    return EX_OK


def cmd_chernoff(args) -> int:
    problem = io.load_problem(args.problem)
    s, r, sn, rn = _pair(problem, args)
    res = te.chernoff(s, r)
    out = te.chernoff(problem.channel(s), problem.channel(r))
    _emit({"command": "chernoff", "sigma": sn, "rho": rn, "value": res.value,
           "minimizer_u": res.minimizer_u, "value_after_channel": out.value}, args.out)
    return EX_OK


def cmd_hoeffding(args) -> int:
    problem = io.load_problem(args.problem)
    s, r, sn, rn = _pair(problem, args)
    T = problem.channel
    res = te.hoeffding_details(s, r, args.r)
    _emit({"command": "hoeffding", "sigma": sn, "rho": rn, "r": args.r, "value": res.value,
           "maximizer_u": res.maximizer_u, "from_limit": res.from_limit,
           "cap_stable": res.cap_stable, "threshold": te.hoeffding_threshold(s, r),
           "value_after_channel": te.hoeffding(T(s), T(r), args.r)}, args.out)
    return EX_OK


def cmd_fisher(args) -> int:
    problem = io.load_problem(args.problem)
    s, r, sn, rn = _pair(problem, args)
    T = problem.channel
    f = fi.by_tag(args.f, T.in_dim, T.out_dim)
    check = fi.fisher_equality_check(T, r, s - r, f)
    _emit({"command": "fisher", "f": f.tag, "sigma": sn, "rho": rn,
           "chi2": fi.chi2_divergence(s, r, f),
           "chi2_after_channel": fi.chi2_divergence(T(s), T(r), f),
           "equality_check": check}, args.out)
    return EX_OK


def cmd_np_test(args) -> int:
    problem = io.load_problem(args.problem)
    s, r, sn, rn = _pair(problem, args)
    res = te.np_test(s, r, args.t)
    _emit({"command": "np-test", "sigma": sn, "rho": rn, "t": args.t,
           "P_plus": res.P_plus.projection, "P_zero": res.P_zero.projection,
           "rank_plus": res.rank_plus, "rank_zero": res.rank_zero,
           "trace_norm": res.trace_norm}, args.out)
    return EX_OK


def cmd_counterexample(args) -> int:
    if args.which == "fdiv":
        inst = instances.fdiv_counterexample()
        witness = instances.fdiv_witness(inst)
    else:
        inst = instances.bures_counterexample()
        witness = instances.bures_witness(inst)
    problem = io.Problem(inst.channel, {"rho": inst.rho, "sigma": inst.sigmas[0]}, "rho", ["sigma"])
    _emit({"command": "counterexample", "which": args.which, "problem": problem.to_dict(),
           "witness": witness}, args.out)
    return EX_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chanrev", description="Quantum channel reversibility diagnostics.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def problem_cmd(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("problem", help="problem file (chanrev/1 JSON)")
        sp.add_argument("--out", help="write JSON here instead of stdout")
        sp.set_defaults(func=func)
        return sp

    def pair_args(sp):
        sp.add_argument("--sigma", help="state name for sigma (default: first family member)")
        sp.add_argument("--rho", help="state name for rho (default: the reference)")

    sp = problem_cmd("diagnose", cmd_diagnose, "evaluate all reversibility conditions")
    sp.add_argument("--hold-rtol", dest="hold_rtol", type=float, help="hold threshold (default 1e-8)")
    sp.add_argument("--fail-rtol", dest="fail_rtol", type=float, help="fail threshold (default 1e-4)")
    sp.add_argument("--ncopy-max", dest="ncopy_max", type=int, help="largest n for n-copy gaps (default 2)")
    sp.add_argument("--r-grid", dest="r_grid", type=float, nargs="+", help="Hoeffding r values (default 0 0.1 1)")
    sp.add_argument("--threads", type=int, help="worker threads (default: CHANREV_THREADS or 1)")

    problem_cmd("recover", cmd_recover, "apply the Petz recovery map")
    sp = problem_cmd("divergence", cmd_divergence, "f-divergence before and after the channel")
    sp.add_argument("--f", required=True, help="xlogx, inv_one_plus or one_minus_power(s)")
    pair_args(sp)
    sp = problem_cmd("chernoff", cmd_chernoff, "quantum Chernoff distance")
    pair_args(sp)
    sp = problem_cmd("hoeffding", cmd_hoeffding, "quantum Hoeffding distance")
    sp.add_argument("--r", type=float, default=0.0, help="rate r >= 0 (default 0)")
    pair_args(sp)
    sp = problem_cmd("fisher", cmd_fisher, "monotone metric chi-square and equality residuals")
    sp.add_argument("--f", required=True, help="bures, kubo_mori, rld, rich or f_s(s)")
    pair_args(sp)
    sp = problem_cmd("np-test", cmd_np_test, "Neyman-Pearson projections of sigma - t rho")
    sp.add_argument("--t", type=float, required=True, help="threshold t >= 0")
    pair_args(sp)

    sp = sub.add_parser("counterexample", help="reproduce a built-in counterexample")
    sp.add_argument("which", choices=["fdiv", "bures"])
    sp.add_argument("--out", help="write JSON here instead of stdout")
    sp.set_defaults(func=cmd_counterexample)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EX_USAGE
    if getattr(args, "r", 0.0) is not None and getattr(args, "r", 0.0) < 0:
        sys.stderr.write("chanrev: error: --r must be non-negative\n")
        return EX_USAGE
    if getattr(args, "t", 0.0) is not None and getattr(args, "t", 0.0) < 0:
        sys.stderr.write("chanrev: error: --t must be non-negative\n")
        return EX_USAGE
    try:
        return args.func(args)
    except (io.FormatError, OSError, KeyError) as exc:
        sys.stderr.write(f"chanrev: data error: {exc}\n")
        return EX_DATAERR
    except NumericalFailure as exc:
        sys.stderr.write(f"chanrev: numerical failure: {exc}\n")
        return EX_SOFTWARE
    except (SupportViolation, ChanrevError) as exc:
        sys.stderr.write(f"chanrev: data error: {exc}\n")
        return EX_DATAERR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
