"""Command-line experiment runner: ``platoonwave <command> [flags]``.

Exit status is 0 on success, 2 when the problem is infeasible or every run
diverged, and 1 on usage errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import harness, io
from .optimize import InfeasibleProblem, OptimizationProblem
from .params import PlatoonParams
from .spectral import check_circular_stability, signal_velocities, spectral_scan
from .transients import predict_total_error, predict_transient

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2

COMMANDS = ("simulate", "spectrum", "stability", "predict", "verify", "optimize", "scaling",
            "sweep-friction", "sweep-asym", "compare-strategies", "classify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="platoonwave", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--n", type=int, default=100, help="number of followers N")
    parser.add_argument("--a", type=float, default=2.0, help="friction")
    parser.add_argument("--gx", type=float, default=6.2)
    parser.add_argument("--gv", type=float, default=10.0)
    rho_x = parser.add_mutually_exclusive_group()
    rho_x.add_argument("--rho-x", type=float)
    rho_x.add_argument("--beta-x", type=float)
    rho_v = parser.add_mutually_exclusive_group()
    rho_v.add_argument("--rho-v", type=float)
    rho_v.add_argument("--beta-v", type=float)
    parser.add_argument("--dt", type=float, default=harness.DEFAULT_DT)
    parser.add_argument("--t-end", type=float, help="default: five predicted half-periods")
    parser.add_argument("--topology", choices=("path", "circular"), default="path")
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--n-list", help="comma separated, e.g. 40,80,160")
    parser.add_argument("--range", dest="range_", metavar="LO:HI:STEP")
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--gmax", type=float, default=10.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    return parser


def params_from_args(args) -> PlatoonParams:
    if args.beta_x is not None:
        rho_x = (1.0 - args.beta_x) / 2.0
    else:
        rho_x = 0.5 if args.rho_x is None else args.rho_x
    if args.beta_v is not None:
        rho_v = (1.0 - args.beta_v) / 2.0
    else:
        rho_v = 0.4 if args.rho_v is None else args.rho_v
    return PlatoonParams(args.n, args.a, args.gx, args.gv, rho_x, rho_v)


def _n_list(args) -> list[int]:
    if not args.n_list:
        raise UsageError("--n-list is required for this command")
    try:
        values = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --n-list {args.n_list!r}") from None
    if not values:
        raise UsageError("--n-list is empty")
    return values


def _range(args):
    if not args.range_:
        raise UsageError("--range LO:HI:STEP is required for this command")
    try:
        return harness.parse_range(args.range_)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _all_diverged(rows) -> bool:
    return bool(rows) and all(r["diverged"] for r in rows)


def dispatch(args) -> int:
    out = args.out
    params = params_from_args(args)
    cmd = args.command

    if cmd == "simulate":
        trace = harness.run_simulate(params, out, dt=args.dt, t_end=args.t_end,
                                     topology=args.topology)
        return EXIT_INFEASIBLE if trace.diverged else EXIT_OK
    if cmd == "spectrum":
        started = time.perf_counter()
        scan = spectral_scan(params)
        io.write_spectrum(scan, out / "spectrum.csv")
        harness.write_manifest(out, cmd, started, params=params.to_dict(),
                               max_real=scan.max_real, stable=scan.stable)
        return EXIT_OK
    if cmd == "stability":
        started = time.perf_counter()
        report = check_circular_stability(params)
        io.write_json(out / "stability.json", {"params": params.to_dict(), **report.to_dict()})
        harness.write_manifest(out, cmd, started, params=params.to_dict())
        print("stable" if report.stable else "unstable")
        return EXIT_OK
    if cmd == "predict":
        try:
            pred = predict_transient(params)
        except ValueError as exc:
            print(exc, file=sys.stderr)
            return EXIT_INFEASIBLE
        started = time.perf_counter()
        w = signal_velocities(params)
        harness.write_manifest(out, cmd, started, params=params.to_dict())
        io.write_json(out / "prediction.json", {
            "params": params.to_dict(), "c_plus": w.c_plus, "c_minus": w.c_minus,
            "a1": pred.a1, "decay_ratio": pred.decay_ratio, "half_period": pred.half_period,
            "theta_estimate": predict_total_error(params) if params.beta_v > 0 else None,
        })
        return EXIT_OK
    if cmd == "verify":
        try:
            harness.run_verify(params, _n_list(args), out, dt=args.dt)
        except ValueError as exc:
            print(exc, file=sys.stderr)
            return EXIT_INFEASIBLE
        return EXIT_OK
    if cmd == "optimize":
        problem = OptimizationProblem(args.a, gain_upper=args.gmax, epsilon=args.eps)
        try:
            result = harness.run_optimize(problem, out, seed=args.seed)
        except InfeasibleProblem as exc:
            print(exc, file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"gx={result.gain_x:.6g} gv={result.gain_v:.6g} rho_v={result.asym_v:.6g}")
        return EXIT_OK
    if cmd == "scaling":
        rows = harness.run_scaling(_n_list(args), args.gx, args.gv, args.a, out, dt=args.dt,
                                   jobs=args.jobs)
        sim = [r for r in rows if r["series"] != "estimate"]
        return EXIT_INFEASIBLE if _all_diverged(sim) else EXIT_OK
    if cmd == "sweep-friction":
        res = harness.run_sweep_friction(params, _range(args), out, dt=args.dt, jobs=args.jobs)
        print(f"a*={res['a_critical']:.6g}")
        return EXIT_INFEASIBLE if _all_diverged(res["rows"]) else EXIT_OK
    if cmd == "sweep-asym":
        try:
            res = harness.run_sweep_asym(params, _range(args), out, dt=args.dt, jobs=args.jobs)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print(f"argmin rho_v={res['argmin']}")
        return EXIT_INFEASIBLE if _all_diverged(res["rows"]) else EXIT_OK
    if cmd == "compare-strategies":
        res = harness.run_compare_strategies(args.gx, args.gv, args.a, args.n, out, dt=args.dt,
                                             t_end=args.t_end)
        return EXIT_INFEASIBLE if all(v["summary"]["diverged"] for v in res.values()) else EXIT_OK
    if cmd == "classify":
        result = harness.run_classify(params, _n_list(args), out, dt=args.dt)
        print(result.verdict)
        return EXIT_OK
    raise UsageError(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"platoonwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid parameter values (asymmetry outside [0, 1], N < 1, ...)
        print(f"platoonwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
