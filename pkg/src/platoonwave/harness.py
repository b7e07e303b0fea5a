"""Experiment runners behind the command line.

Every ``run_*`` function returns its results in memory and, when given an
output directory, writes the CSV/JSON files plus a ``manifest.json``.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import io
from .dynamics import simulate_leader_step
from .optimize import OptimizationProblem, optimize
from .params import PlatoonParams
from .spectral import velocity_asymmetry_bound
from .transients import (MeasurementError, NonConvergentTail, classify_flock_stability,
                         measure_transient, predict_total_error, predict_transient,
                         predicted_half_period, relative_error, total_absolute_error)

DEFAULT_DT = 0.05
DEFAULT_HORIZON = 5.0


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def write_manifest(out_dir, command: str, started: float, **details) -> Path:
    manifest = {
        "command": command,
        "version": tool_version(),
        "wall_clock_s": time.perf_counter() - started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **details,
    }
    return io.write_json(Path(out_dir) / "manifest.json", manifest)


def parse_range(text: str) -> np.ndarray:
    """``LO:HI:STEP`` to an inclusive grid."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"range must look like LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"bad range {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


@dataclass(frozen=True)
class ThetaPoint:
    """Total absolute error of one leader-step run; censored when it diverged."""

    params: PlatoonParams
    theta: float
    diverged: bool
    tail_extrapolated: bool
    max_error: float

    def row(self, **extra) -> dict:
        return {**extra, "N": self.params.n_followers, "theta": self.theta,
                "max_error": self.max_error, "diverged": self.diverged,
                "tail_extrapolated": self.tail_extrapolated}


def theta_point(params: PlatoonParams, dt: float = DEFAULT_DT, horizon: float = DEFAULT_HORIZON,
                t_end: float | None = None, overflow_guard: float = 1e12) -> ThetaPoint:
    if t_end is None:
        t_end = horizon * predicted_half_period(params)
    trace = simulate_leader_step(params, t_end, dt, overflow_guard=overflow_guard)
    if trace.diverged:
        return ThetaPoint(params, math.inf, True, False, math.inf)
    max_error = float(np.abs(trace.errors).max())
    try:
        summary = total_absolute_error(trace, tail=True)
        extrapolated = True
    except (NonConvergentTail, MeasurementError):
        summary = total_absolute_error(trace, tail=False)
        extrapolated = False
    return ThetaPoint(params, summary.theta, False, extrapolated, max_error)


def _theta_job(args):
    return theta_point(*args)


def theta_batch(params_list, dt: float = DEFAULT_DT, horizon: float = DEFAULT_HORIZON,
                jobs: int = 1) -> list[ThetaPoint]:
    tasks = [(p, dt, horizon) for p in params_list]
    if jobs <= 1 or len(tasks) <= 1:
        return [_theta_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_theta_job, tasks))


def run_simulate(params: PlatoonParams, out_dir=None, *, dt: float = DEFAULT_DT,
                 t_end: float | None = None, topology: str = "path"):
    started = time.perf_counter()
    if t_end is None:
        t_end = DEFAULT_HORIZON * predicted_half_period(params)
    trace = simulate_leader_step(params, t_end, dt, topology=topology)
    if out_dir is not None:
        io.write_trace(trace, Path(out_dir) / "trace.csv")
        write_manifest(out_dir, "simulate", started, params=params.to_dict(), dt=dt,
                       t_end=t_end, topology=topology, diverged=trace.diverged)
    return trace


VERIFY_QUANTITIES = ("A1", "ratio21", "ratio32", "T")


def verify_rows(params: PlatoonParams, n: int, dt: float = DEFAULT_DT,
                horizon: float = DEFAULT_HORIZON) -> list[dict]:
    p = params.with_(n_followers=n)
    pred = predict_transient(p)
    trace = simulate_leader_step(p, horizon * pred.half_period, dt)
    meas = measure_transient(trace, min_windows=3)
    pairs = {
        "A1": (pred.a1, meas.a1),
        "ratio21": (pred.decay_ratio, meas.ratio(1)),
        "ratio32": (pred.decay_ratio, meas.ratio(2)),
        "T": (pred.half_period, meas.half_period),
    }
    return [{"N": n, "chi": chi, "pred": pv, "meas": mv, "theta": relative_error(pv, mv)}
            for chi, (pv, mv) in pairs.items()]


def run_verify(params: PlatoonParams, n_list, out_dir=None, *, dt: float = DEFAULT_DT,
               horizon: float = DEFAULT_HORIZON) -> list[dict]:
    """Predicted vs measured transient characteristics for each N."""
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list must not be empty")
    started = time.perf_counter()
    rows = [r for n in n_list for r in verify_rows(params, n, dt, horizon)]
    if out_dir is not None:
        io.write_rows(Path(out_dir) / "verify.csv", rows, ["N", "chi", "pred", "meas", "theta"])
        write_manifest(out_dir, "verify", started, params=params.to_dict(), n_list=n_list, dt=dt)
    return rows


STRATEGIES = {
    "symmetric": (0.5, 0.5),
    "identical-asymmetric": (0.4, 0.4),
    "velocity-only": (0.5, 0.4),
}


def strategy_summary(trace, settle_fraction: float = 0.05) -> dict:
    if trace.diverged:
        return {"max_overshoot": math.inf, "theta": math.inf, "settled": False, "diverged": True}
    peak = float(np.abs(trace.errors).max())
    final = float(np.abs(trace.errors[-1]).max())
    theta = total_absolute_error(trace, tail=False).theta
    return {"max_overshoot": peak, "theta": theta, "settled": final <= settle_fraction * peak,
            "final_error": final, "diverged": False}


def run_compare_strategies(gain_x: float = 6.2, gain_v: float = 10.0, friction: float = 2.0,
                           n: int = 100, out_dir=None, *, dt: float = DEFAULT_DT,
                           t_end: float | None = None) -> dict:
    """Leader step for symmetric, identical-asymmetric and velocity-only asymmetry.

    All three runs share one horizon (default five predicted half-periods of
    the velocity-only design) so their total errors are comparable.
    """
    started = time.perf_counter()
    base = PlatoonParams(n, friction, gain_x, gain_v, 0.5, 0.4)
    if t_end is None:
        t_end = DEFAULT_HORIZON * predicted_half_period(base)
    out = {}
    for name, (rx, rv) in STRATEGIES.items():
        p = base.with_(asym_x=rx, asym_v=rv)
        trace = simulate_leader_step(p, t_end, dt)
        out[name] = {"params": p, "trace": trace, "summary": strategy_summary(trace)}
        if out_dir is not None:
            io.write_trace(trace, Path(out_dir) / f"trace_{name}.csv")
    if out_dir is not None:
        io.write_json(Path(out_dir) / "summary.json",
                      {k: {"params": v["params"].to_dict(), **v["summary"]} for k, v in out.items()})
        write_manifest(out_dir, "compare-strategies", started, gx=gain_x, gv=gain_v, a=friction,
                       n=n, dt=dt, t_end=t_end)
    return out


def run_scaling(n_list, gain_x: float = 6.2, gain_v: float = 10.0, friction: float = 2.0,
                out_dir=None, *, dt: float = DEFAULT_DT, horizon: float = DEFAULT_HORIZON,
                jobs: int = 1, variants: dict | None = None) -> list[dict]:
    """Total error against N for each strategy plus the closed-form estimate."""
    started = time.perf_counter()
    variants = STRATEGIES if variants is None else variants
    n_list = [int(n) for n in n_list]
    params = [PlatoonParams(n, friction, gain_x, gain_v, rx, rv)
              for (rx, rv) in variants.values() for n in n_list]
    points = theta_batch(params, dt, horizon, jobs)
    rows = []
    for k, name in enumerate(variants):
        for j, n in enumerate(n_list):
            rows.append(points[k * len(n_list) + j].row(series=name))
    ref = PlatoonParams(1, friction, gain_x, gain_v, 0.5, 0.4)
    for n in n_list:
        rows.append({"series": "estimate", "N": n, "theta": predict_total_error(ref, n),
                     "max_error": math.nan, "diverged": False, "tail_extrapolated": False})
    if out_dir is not None:
        io.write_rows(Path(out_dir) / "scaling.csv", rows,
                      ["series", "N", "theta", "max_error", "diverged", "tail_extrapolated"])
        write_manifest(out_dir, "scaling", started, n_list=n_list, gx=gain_x, gv=gain_v,
                       a=friction, dt=dt, horizon=horizon)
    return rows


def critical_friction(gain_x: float, gain_v: float, beta_v: float) -> float:
    """Friction at which |beta_v| meets the stability bound (a gv - gx)/sqrt(2 gv^3)."""
    # the bound is affine in a, so its root is explicit
    return (abs(beta_v) * math.sqrt(2.0 * gain_v ** 3) + gain_x) / gain_v


def run_sweep_friction(base: PlatoonParams, a_values, out_dir=None, *, dt: float = DEFAULT_DT,
                       horizon: float = DEFAULT_HORIZON, jobs: int = 1) -> dict:
    """Total error against friction at fixed N, with the critical friction marked."""
    started = time.perf_counter()
    a_values = [float(a) for a in a_values]
    points = theta_batch([base.with_(friction=a) for a in a_values], dt, horizon, jobs)
    rows = []
    for a, pt in zip(a_values, points):
        margin = velocity_asymmetry_bound(a, base.gain_x, base.gain_v) - abs(base.beta_v)
        rows.append(pt.row(a=a, margin=margin))
    a_star = critical_friction(base.gain_x, base.gain_v, base.beta_v)
    if out_dir is not None:
        io.write_rows(Path(out_dir) / "sweep_friction.csv", rows,
                      ["a", "N", "theta", "margin", "max_error", "diverged", "tail_extrapolated"])
        write_manifest(out_dir, "sweep-friction", started, params=base.to_dict(),
                       a_values=a_values, a_critical=a_star, dt=dt, horizon=horizon)
    return {"rows": rows, "a_critical": a_star}


def run_sweep_asym(base: PlatoonParams, rho_values, out_dir=None, *, dt: float = DEFAULT_DT,
                   horizon: float = DEFAULT_HORIZON, jobs: int = 1) -> dict:
    """Total error against velocity asymmetry; runs past the stability bound are flagged."""
    started = time.perf_counter()
    rho_values = [float(r) for r in rho_values]
    if any(not 0.0 < r < 0.5 for r in rho_values):
        raise ValueError("rho_v values must lie in (0, 0.5)")
    points = theta_batch([base.with_(asym_v=r) for r in rho_values], dt, horizon, jobs)
    bound = velocity_asymmetry_bound(base.friction, base.gain_x, base.gain_v)
    rows = [pt.row(rho_v=r, beyond_bound=abs(1 - 2 * r) >= bound)
            for r, pt in zip(rho_values, points)]
    finite = [(row["theta"], row["rho_v"]) for row in rows if math.isfinite(row["theta"])]
    argmin = min(finite)[1] if finite else None
    if out_dir is not None:
        io.write_rows(Path(out_dir) / "sweep_asym.csv", rows,
                      ["rho_v", "N", "theta", "beyond_bound", "max_error", "diverged",
                       "tail_extrapolated"])
        write_manifest(out_dir, "sweep-asym", started, params=base.to_dict(),
                       rho_values=rho_values, argmin=argmin, dt=dt, horizon=horizon)
    return {"rows": rows, "argmin": argmin}


def run_optimize(problem: OptimizationProblem, out_dir=None, *, seed: int = 0):
    started = time.perf_counter()
    result = optimize(problem, seed=seed)
    if out_dir is not None:
        io.write_json(Path(out_dir) / "optimize.json", result.to_dict())
        write_manifest(out_dir, "optimize", started, seed=seed)
    return result


def run_classify(params: PlatoonParams, n_grid, out_dir=None, *, dt: float = DEFAULT_DT):
    started = time.perf_counter()
    result = classify_flock_stability(params, n_grid, dt=dt)
    if out_dir is not None:
        io.write_json(Path(out_dir) / "classification.json", {
            "params": params.to_dict(),
            "n_grid": result.n_grid,
            "max_errors": result.max_errors,
            "slopes": {"per_vehicle": result.slope_linear, "per_log_vehicle": result.slope_log},
            "rss": {"linear_in_n": result.rss_linear, "linear_in_log_n": result.rss_log},
            "verdict": result.verdict,
        })
        write_manifest(out_dir, "classify", started, dt=dt)
    return result
