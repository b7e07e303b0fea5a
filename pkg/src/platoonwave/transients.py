"""Traveling-wave description of the leader-step transient.

After the leader starts moving, a wave runs to the tail of the platoon at
speed c_+ and comes back at c_-.  The last vehicle's spacing error is then a
sequence of near-triangular oscillations: first peak N/|c_+|, half-period
N (1/|c_+| + 1/|c_-|) and peak ratio |c_-|/|c_+| between windows.  This
module predicts those quantities, measures them from simulations, and turns
them into the total absolute spacing error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SimulationTrace, simulate_leader_step
from .optimize import j_hat
from .params import PlatoonParams
from .spectral import check_circular_stability, signal_velocities

DEPARTURE_FRACTION = 1e-6
# a local minimum of |e| this close to zero counts as touching zero
TOUCH_FRACTION = 1e-3
LOG_FLOOR = 1e-300


class MeasurementError(ValueError):
    pass


class NonConvergentTail(ValueError):
    pass


@dataclass(frozen=True)
class TransientPrediction:
    a1: float
    decay_ratio: float
    half_period: float

    def amplitude(self, k: int) -> float:
        """Predicted peak of the k-th oscillation (k = 1, 2, ...)."""
        return self.a1 * self.decay_ratio ** (k - 1)


def predict_transient(params: PlatoonParams, n_followers: int | None = None) -> TransientPrediction:
    n = params.n_followers if n_followers is None else n_followers
    report = check_circular_stability(params)
    if not report.stable:
        raise ValueError(f"parameters violate the circular stability conditions: {report}")
    w = signal_velocities(params)
    cp, cm = abs(w.c_plus), abs(w.c_minus)
    return TransientPrediction(a1=n / cp, decay_ratio=cm / cp, half_period=n * (1.0 / cp + 1.0 / cm))


def predicted_half_period(params: PlatoonParams, n_followers: int | None = None) -> float:
    """Half-period from the signal velocities alone (no stability check)."""
    n = params.n_followers if n_followers is None else n_followers
    w = signal_velocities(params)
    return n * (1.0 / abs(w.c_plus) + 1.0 / abs(w.c_minus))


@dataclass(frozen=True)
class TransientMeasurement:
    half_period: float
    amplitudes: np.ndarray

    @property
    def n_oscillations(self) -> int:
        return int(self.amplitudes.size)

    @property
    def a1(self) -> float:
        return float(self.amplitudes[0])

    def ratio(self, k: int) -> float:
        """A_{k+1} / A_k."""
        return float(self.amplitudes[k] / self.amplitudes[k - 1])

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.amplitudes[1:] / self.amplitudes[:-1]


def first_return_to_zero(times: np.ndarray, signal: np.ndarray) -> float:
    """Time at which ``signal`` first comes back to zero after leaving it.

    A sign change is located by linear interpolation.  A signal that only
    touches zero (like |sin t|) is caught at the sample where |signal| has a
    local minimum below a small fraction of the peak reached so far.
    """
    mag = np.abs(signal)
    peak = mag.max()
    if peak == 0:
        raise MeasurementError("signal is identically zero")
    departed = np.flatnonzero(mag > DEPARTURE_FRACTION * peak)
    start = departed[0]
    sign0 = np.sign(signal[start])

    flips = np.flatnonzero(np.sign(signal[start:]) != sign0)
    t_flip = math.inf
    if flips.size:
        k = start + flips[0]
        e0, e1 = signal[k - 1], signal[k]
        t_flip = times[k - 1] + (times[k] - times[k - 1]) * e0 / (e0 - e1)

    running_peak = np.maximum.accumulate(mag[start:])
    inner = np.arange(start + 1, mag.size - 1)
    is_touch = ((mag[inner] <= mag[inner - 1]) & (mag[inner] < mag[inner + 1])
                & (mag[inner] <= TOUCH_FRACTION * running_peak[inner - start]))
    t_touch = times[inner[is_touch][0]] if is_touch.any() else math.inf

    t = min(t_flip, t_touch)
    if not math.isfinite(t):
        raise MeasurementError("no crossing found: the signal never returns to zero")
    return float(t)


def measure_signal(times: np.ndarray, signal: np.ndarray, min_windows: int = 2) -> TransientMeasurement:
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    T = first_return_to_zero(times, signal)
    n_windows = int(np.floor(times[-1] / T + 1e-9))
    if n_windows < min_windows:
        raise MeasurementError(f"trace too short: {n_windows} window(s) of length {T:.6g} fit")
    mag = np.abs(signal)
    amps = np.empty(n_windows)
    for i in range(n_windows):
        sel = (times >= i * T) & (times <= (i + 1) * T)
        amps[i] = mag[sel].max()
    return TransientMeasurement(T, amps)


def measure_transient(trace: SimulationTrace, min_windows: int = 2) -> TransientMeasurement:
    """Half-period and per-window peaks of the last vehicle's spacing error."""
    if trace.diverged:
        raise MeasurementError("cannot measure a diverged trace")
    return measure_signal(trace.times, trace.last, min_windows)


def relative_error(predicted: float, measured: float) -> float:
    """log10 |predicted / measured - 1|, floored at 1e-300."""
    if measured == 0:
        raise ValueError("measured value must be non-zero")
    return math.log10(max(abs(predicted / measured - 1.0), LOG_FLOOR))


@dataclass(frozen=True)
class ErrorSummary:
    theta: float
    per_vehicle: np.ndarray
    tail: float = 0.0
    tail_ratio: float | None = None


def total_absolute_error(trace: SimulationTrace, *, tail: bool = True) -> ErrorSummary:
    """Sum over vehicles of the integral of |e_i(t)|.

    The integral over the trace uses the trapezoid rule.  With ``tail`` the
    remainder beyond the last sample is extrapolated geometrically: every
    later half-period contributes the measured peak ratio r times the
    previous one, so the last half-period's integral is scaled by r/(1-r).
    """
    if trace.diverged:
        raise ValueError("trace diverged; the total error is unbounded")
    mag = np.abs(trace.errors)
    per_vehicle = np.trapezoid(mag, dx=trace.dt, axis=0)
    tail_total, ratio = 0.0, None
    if tail and mag.max() > 0:
        meas = measure_transient(trace)
        ratio = float(meas.ratios[-1])
        if not ratio < 1:
            raise NonConvergentTail(f"measured amplitude ratio {ratio:.4g} >= 1")
        n_last = max(2, int(round(meas.half_period / trace.dt)) + 1)
        last = np.trapezoid(mag[-n_last:], dx=trace.dt, axis=0)
        extra = last * ratio / (1.0 - ratio)
        per_vehicle = per_vehicle + extra
        tail_total = float(extra.sum())
    return ErrorSummary(float(per_vehicle.sum()), per_vehicle, tail_total, ratio)


def profile_sum(n: int) -> float:
    """sum_{i=1}^{N} (i/N)(1 - i/(2N)), the vehicle-profile factor of the error."""
    i = np.arange(1, n + 1, dtype=float)
    return float(np.sum(i / n * (1.0 - i / (2.0 * n))))


def profile_sum_closed(n: int) -> float:
    return n * (n + 1) * (4 * n - 1) / (12.0 * n * n)


def predict_total_error(params: PlatoonParams, n_followers: int | None = None) -> float:
    """Closed-form total absolute error J_hat N (N+1) (4N-1) / 12."""
    n = params.n_followers if n_followers is None else n_followers
    if params.beta_v <= 0:
        raise ValueError("predicted total error needs beta_v > 0 (rho_v < 0.5) for the oscillations to decay")
    jh = j_hat(params.gain_x, params.gain_v, params.beta_v, params.friction)
    return jh / 12.0 * n * (n + 1) * (4 * n - 1)


@dataclass(frozen=True)
class FlockClassification:
    verdict: str
    n_grid: list[int]
    max_errors: list[float]
    slope_linear: float | None = None
    slope_log: float | None = None
    rss_linear: float | None = None
    rss_log: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


FLOCK_STABLE = "flock-stable"
FLOCK_UNSTABLE = "flock-unstable"
ASYMPTOTICALLY_UNSTABLE = "asymptotically-unstable"
EXPONENTIAL_SLOPE = math.log(1.05)


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    rss = float(res[0]) if res.size else 0.0
    return float(coef[0]), rss


def classify_max_errors(n_grid, max_errors) -> FlockClassification:
    """Decide between linear-in-N (exponential) and log-N (polynomial) growth."""
    n = np.asarray(n_grid, dtype=float)
    y = np.log(np.asarray(max_errors, dtype=float))
    s_lin, rss_lin = _line_fit(n, y)
    s_log, rss_log = _line_fit(np.log(n), y)
    unstable = rss_lin < rss_log and s_lin > EXPONENTIAL_SLOPE
    return FlockClassification(FLOCK_UNSTABLE if unstable else FLOCK_STABLE, [int(v) for v in n_grid],
                               [float(v) for v in max_errors], s_lin, s_log, rss_lin, rss_log)


def classify_flock_stability(params: PlatoonParams, n_grid, *, dt: float = 0.05,
                             horizon: float = 3.0, overflow_guard: float = 1e100) -> FlockClassification:
    """Leader-step experiments over ``n_grid`` followed by a growth-law fit.

    Each run lasts ``horizon`` predicted half-periods.  A run that trips the
    overflow guard marks the system asymptotically unstable.  The guard is
    far above the simulator default because flock-unstable platoons reach
    errors of 1e11 and more at a few hundred vehicles without diverging in
    time.
    """
    n_grid = sorted(int(n) for n in n_grid)
    if len(n_grid) < 4 or n_grid[-1] < 4 * n_grid[0]:
        raise ValueError("n_grid needs at least 4 values spanning a factor of 4")
    max_errors = []
    for n in n_grid:
        p = params.with_(n_followers=n)
        t_end = horizon * predicted_half_period(p)
        trace = simulate_leader_step(p, t_end, dt, overflow_guard=overflow_guard)
        if trace.diverged:
            return FlockClassification(ASYMPTOTICALLY_UNSTABLE, n_grid, max_errors + [math.inf])
        max_errors.append(float(np.abs(trace.last).max()))
    return classify_max_errors(n_grid, max_errors)
