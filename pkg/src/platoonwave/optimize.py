"""Gain and velocity-asymmetry selection from the wave-based error criterion.

The total absolute error of a flock-stable platoon factors as J_hat(gx, gv,
beta_v) times a function of N only, with

    J_hat = 2 a sqrt(1/gx^2 + 2a / (gv^2 beta_v^2 gx)).

The design problem minimises the radicand subject to the circular stability
conditions, with the beta_v interval shrunk by ``epsilon`` on both sides.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .spectral import velocity_asymmetry_bound

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class InfeasibleProblem(ValueError):
    pass


def criterion(gain_x: float, gain_v: float, beta_v: float, friction: float) -> float:
    if gain_x <= 0 or gain_v <= 0:
        raise ValueError("gains must be positive")
    if beta_v == 0:
        raise ValueError("beta_v = 0 makes the criterion singular (no amplitude decay)")
    return 1.0 / gain_x ** 2 + 2.0 * friction / (gain_v ** 2 * beta_v ** 2 * gain_x)


def j_hat(gain_x: float, gain_v: float, beta_v: float, friction: float) -> float:
    return 2.0 * friction * math.sqrt(criterion(gain_x, gain_v, beta_v, friction))


@dataclass(frozen=True)
class OptimizationProblem:
    friction: float
    gain_upper: float = 10.0
    epsilon: float = 0.1
    gain_lower: float = 1e-3

    def __post_init__(self) -> None:
        if not self.friction > 0:
            raise ValueError("friction must be positive")
        if not self.gain_upper > self.gain_lower > 0:
            raise ValueError("need gain_upper > gain_lower > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


def feasible(gain_x: float, gain_v: float, beta_v: float,
             problem: OptimizationProblem) -> tuple[bool, dict[str, float]]:
    """Feasibility with signed margins (positive means satisfied).

    Bounds on the gains are closed, the remaining constraints strict.
    """
    a, eps = problem.friction, problem.epsilon
    margins = {
        "gain_x_lower": gain_x - problem.gain_lower,
        "gain_x_upper": problem.gain_upper - gain_x,
        "gain_v_lower": gain_v - problem.gain_lower,
        "gain_v_upper": problem.gain_upper - gain_v,
        "friction_ratio": a - gain_x / gain_v if gain_v > 0 else -math.inf,
    }
    if gain_v > 0:
        half_width = velocity_asymmetry_bound(a, gain_x, gain_v) - eps
        margins["beta_v_upper"] = half_width - beta_v
        margins["beta_v_lower"] = beta_v + half_width
    else:
        margins["beta_v_upper"] = margins["beta_v_lower"] = -math.inf
    closed = ("gain_x_lower", "gain_x_upper", "gain_v_lower", "gain_v_upper")
    ok = all(margins[k] >= 0 for k in closed) and all(
        margins[k] > 0 for k in margins if k not in closed)
    return ok, margins


@dataclass(frozen=True)
class OptimizationResult:
    gain_x: float
    gain_v: float
    asym_v: float
    criterion: float
    j_hat: float
    active_constraints: list[str]
    problem: OptimizationProblem
    warnings: list[str] = field(default_factory=list)
    seed: int | None = None

    @property
    def beta_v(self) -> float:
        return 1.0 - 2.0 * self.asym_v

    def to_dict(self) -> dict:
        p = self.problem
        return {
            "a": p.friction,
            "eps": p.epsilon,
            "bounds": [p.gain_lower, p.gain_upper],
            "gx": self.gain_x,
            "gv": self.gain_v,
            "rho_v": self.asym_v,
            "beta_v": self.beta_v,
            "criterion": self.criterion,
            "j_hat": self.j_hat,
            "active_constraints": list(self.active_constraints),
            "warnings": list(self.warnings),
            "seed": self.seed,
        }


def golden_section(f, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Minimiser of a unimodal ``f`` on [lo, hi] to within ``tol``."""
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def _boundary_beta(gain_x: float, gain_v: float, problem: OptimizationProblem) -> float:
    return velocity_asymmetry_bound(problem.friction, gain_x, gain_v) - problem.epsilon


def _reduced_interval(problem: OptimizationProblem) -> tuple[float, float] | None:
    """Range of gx on which the shrunk beta_v interval is non-empty at gv = upper."""
    gv = problem.gain_upper
    a = problem.friction
    # beta bound > 0  <=>  gx < a gv - eps sqrt(2 gv^3); also gx < a gv for condition I
    hi = min(problem.gain_upper, a * gv - problem.epsilon * math.sqrt(2.0 * gv ** 3))
    lo = problem.gain_lower
    return (lo, hi) if hi > lo else None


def _penalised(x, problem: OptimizationProblem) -> float:
    gx, gv, bv = x
    ok, margins = feasible(gx, gv, bv, problem)
    if ok and bv > 0:
        return criterion(gx, gv, bv, problem.friction)
    violation = sum(max(0.0, -m) for m in margins.values() if np.isfinite(m))
    violation += max(0.0, -bv) + 1e3 * (not np.all(np.isfinite(list(margins.values()))))
    return 1e6 * (1.0 + violation)


def _polish(problem: OptimizationProblem, n_starts: int, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = problem.gain_lower, problem.gain_upper
    best = None
    for _ in range(n_starts):
        gv = rng.uniform(lo, hi)
        gx = rng.uniform(lo, min(hi, problem.friction * gv))
        width = _boundary_beta(gx, gv, problem)
        if width <= 0:
            continue
        x0 = np.array([gx, gv, rng.uniform(0.1, 0.9) * width])
        res = minimize(_penalised, x0, args=(problem,), method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or best.fun >= 1e6:
        return None
    return best.x


def _active(gx: float, gv: float, bv: float, problem: OptimizationProblem, tol: float = 1e-6) -> list[str]:
    _, margins = feasible(gx, gv, bv, problem)
    return [k for k, m in margins.items() if abs(m) <= tol * max(1.0, abs(problem.gain_upper))]


def optimize(problem: OptimizationProblem, *, polish: bool = True, n_starts: int = 24,
             seed: int = 0, tol: float = 1e-6) -> OptimizationResult:
    """Minimise the criterion over (gx, gv, beta_v > 0) subject to the constraints.

    The criterion falls with gv and with beta_v, so the search starts on
    gv = ``gain_upper`` with beta_v on the upper edge of the shrunk interval
    and a golden-section search in gx.  A multi-start Nelder-Mead run over the
    full box then checks that point; if it finds a lower value (which happens
    for large ``epsilon``, where a smaller gv widens the interval) the better
    point is returned together with a warning.
    """
    notes: list[str] = []
    candidates = []
    interval = _reduced_interval(problem)
    if interval is not None:
        gv = problem.gain_upper
        f = lambda gx: criterion(gx, gv, _boundary_beta(gx, gv, problem), problem.friction)
        lo, hi = interval
        # stay strictly inside so the open constraints hold at the returned point
        gx = golden_section(f, lo, hi - tol, tol=tol)
        bv = _boundary_beta(gx, gv, problem)
        candidates.append(("boundary", gx, gv, bv, f(gx)))

    if polish:
        x = _polish(problem, n_starts, seed)
        if x is not None:
            gx, gv, bv = (float(v) for v in x)
            candidates.append(("polish", gx, gv, bv, criterion(gx, gv, bv, problem.friction)))

    if not candidates:
        raise InfeasibleProblem(
            f"no (gx, gv, beta_v > 0) satisfies the constraints for a={problem.friction}, "
            f"eps={problem.epsilon}, gains in [{problem.gain_lower}, {problem.gain_upper}]")

    by_name = {c[0]: c for c in candidates}
    chosen = by_name.get("boundary") or by_name["polish"]
    if "boundary" not in by_name:
        notes.append("gv = gain_upper admits no feasible beta_v; result taken from the full-box search")
    elif "polish" in by_name:
        cb, cp = by_name["boundary"][4], by_name["polish"][4]
        if abs(cb - cp) > 1e-4 * max(1.0, abs(cb)):
            notes.append(f"boundary reduction ({cb:.6g}) and full-box search ({cp:.6g}) disagree")
            if cp < cb:
                chosen = by_name["polish"]
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    _, gx, gv, bv, crit = chosen
    return OptimizationResult(
        gain_x=gx,
        gain_v=gv,
        asym_v=(1.0 - bv) / 2.0,
        criterion=crit,
        j_hat=2.0 * problem.friction * math.sqrt(crit),
        active_constraints=_active(gx, gv, bv, problem),
        problem=problem,
        warnings=notes,
        seed=seed if polish else None,
    )
