"""Spectral analysis of the circular platoon.

Circulant Laplacians share the Fourier eigenvectors, so the 3(N+1) closed-loop
eigenvalues split into N+1 cubics, one per wavenumber phi = 2 pi m / (N+1):

    nu^3 + a nu^2 + lambda_v(phi) nu + lambda_x(phi) = 0.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .params import PlatoonParams

RHO_X_TOL = 1e-12

_OMEGA = np.exp(2j * np.pi / 3)


def circulant_eigenvalue(gain, asym, phi):
    """Eigenvalue of ``gain * L`` on the Fourier mode with wavenumber ``phi``."""
    phi = np.asarray(phi, dtype=float)
    lam = gain * ((1.0 - np.cos(phi)) + 1j * (1.0 - 2.0 * asym) * np.sin(phi))
    return lam if lam.ndim else complex(lam)


def _sort_roots(roots: np.ndarray) -> np.ndarray:
    order = np.lexsort((roots.imag, roots.real), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def solve_mode_cubic(friction, lambda_v, lambda_x) -> np.ndarray:
    """Roots of nu^3 + a nu^2 + lambda_v nu + lambda_x = 0.

    Broadcasts over array inputs; the result has a trailing axis of length 3
    sorted by real part, then imaginary part.  Cardano's formula gives the
    starting values, each is then polished by a Newton step that is only
    accepted when it lowers the residual.
    """
    b = np.asarray(friction, dtype=complex)
    c = np.asarray(lambda_v, dtype=complex)
    d = np.asarray(lambda_x, dtype=complex)
    b, c, d = np.broadcast_arrays(b, c, d)

    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = np.sqrt(q * q / 4.0 + p ** 3 / 27.0)
    # take the larger of the two cube-root arguments to avoid cancellation
    u3 = np.where(np.abs(-q / 2.0 + disc) >= np.abs(-q / 2.0 - disc), -q / 2.0 + disc, -q / 2.0 - disc)
    u = u3 ** (1.0 / 3.0)
    zero = u == 0
    safe_u = np.where(zero, 1.0, u)
    v = np.where(zero, 0.0, -p / (3.0 * safe_u))
    ks = np.arange(3)
    t = u[..., None] * _OMEGA ** ks + v[..., None] * _OMEGA ** (-ks)
    roots = t - (b / 3.0)[..., None]

    bb, cc, dd = (x[..., None] for x in (b, c, d))
    for _ in range(2):
        f = ((roots + bb) * roots + cc) * roots + dd
        fp = (3.0 * roots + 2.0 * bb) * roots + cc
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = roots - f / fp
        fc = ((cand + bb) * cand + cc) * cand + dd
        better = np.isfinite(cand) & (np.abs(fc) < np.abs(f))
        roots = np.where(better, cand, roots)
    return _sort_roots(roots)


def cubic_residual(friction, lambda_v, lambda_x, roots) -> np.ndarray:
    """|nu^3 + a nu^2 + lambda_v nu + lambda_x| / (1 + |nu|^3) for each root."""
    a = np.asarray(friction, dtype=complex)[..., None]
    lv = np.asarray(lambda_v, dtype=complex)[..., None]
    lx = np.asarray(lambda_x, dtype=complex)[..., None]
    r = np.asarray(roots)
    return np.abs(((r + a) * r + lv) * r + lx) / (1.0 + np.abs(r) ** 3)


@dataclass(frozen=True)
class NecessaryConditions:
    friction_positive: bool
    gain_x_positive: bool
    gain_v_positive: bool
    friction_exceeds_ratio: bool
    position_symmetric: bool

    @property
    def gain_conditions(self) -> bool:
        return (self.friction_positive and self.gain_x_positive and self.gain_v_positive
                and self.friction_exceeds_ratio)

    @property
    def position_condition(self) -> bool:
        return self.position_symmetric

    @property
    def all(self) -> bool:
        return self.gain_conditions and self.position_condition


def check_necessary(params: PlatoonParams) -> NecessaryConditions:
    a, gx, gv = params.friction, params.gain_x, params.gain_v
    return NecessaryConditions(
        friction_positive=bool(a > 0),
        gain_x_positive=bool(gx > 0),
        gain_v_positive=bool(gv > 0),
        friction_exceeds_ratio=bool(gv > 0 and a > gx / gv),
        position_symmetric=bool(abs(params.asym_x - 0.5) <= RHO_X_TOL),
    )


def velocity_asymmetry_bound(friction: float, gain_x: float, gain_v: float) -> float:
    """Half-width (a gv - gx) / sqrt(2 gv^3) of the admissible beta_v interval."""
    return (friction * gain_v - gain_x) / math.sqrt(2.0 * gain_v ** 3)


@dataclass(frozen=True)
class StabilityReport:
    """Conditions for every non-trivial circular eigenvalue to be stable.

    ``beta_v_bound``, ``margin`` and ``cond_III`` are None when condition I
    fails, since the interval is only meaningful on top of it.
    """

    cond_I: bool
    friction_positive: bool
    gain_x_positive: bool
    gain_v_positive: bool
    friction_exceeds_ratio: bool
    cond_II: bool
    cond_III: bool | None
    beta_v_bound: float | None
    margin: float | None

    @property
    def stable(self) -> bool:
        return bool(self.cond_I and self.cond_II and self.cond_III)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["stable"] = self.stable
        return d


def check_circular_stability(params: PlatoonParams) -> StabilityReport:
    nec = check_necessary(params)
    bound = margin = cond3 = None
    if nec.gain_conditions:
        bound = velocity_asymmetry_bound(params.friction, params.gain_x, params.gain_v)
        margin = float(bound - abs(params.beta_v))
        bound = float(bound)
        cond3 = margin > 0
    return StabilityReport(
        cond_I=nec.gain_conditions,
        friction_positive=nec.friction_positive,
        gain_x_positive=nec.gain_x_positive,
        gain_v_positive=nec.gain_v_positive,
        friction_exceeds_ratio=nec.friction_exceeds_ratio,
        cond_II=nec.position_condition,
        cond_III=cond3,
        beta_v_bound=bound,
        margin=margin,
    )


@dataclass(frozen=True)
class ModeSpectrum:
    m: int
    phi: float
    lambda_x: complex
    lambda_v: complex
    roots: tuple[complex, complex, complex]


@dataclass(frozen=True)
class SpectralScan:
    """All modes of the circular system with the stability verdict.

    ``max_real`` ignores the two zero roots of the m = 0 mode; ``stable`` is
    ``max_real < 0``.
    """

    phi: np.ndarray
    lambda_x: np.ndarray
    lambda_v: np.ndarray
    roots: np.ndarray
    max_real: float

    @property
    def stable(self) -> bool:
        return self.max_real < 0

    @property
    def modes(self) -> list[ModeSpectrum]:
        return [ModeSpectrum(m, float(self.phi[m]), complex(self.lambda_x[m]),
                             complex(self.lambda_v[m]), tuple(complex(r) for r in self.roots[m]))
                for m in range(self.phi.size)]

    def eigenvalues(self) -> np.ndarray:
        return self.roots.ravel()

    def unstable_modes(self) -> np.ndarray:
        """Indices m of modes owning a root with positive real part (m = 0 excluded)."""
        return np.flatnonzero(self.roots[1:].real.max(axis=1) > 0) + 1


def spectral_scan(params: PlatoonParams, n_followers: int | None = None) -> SpectralScan:
    n = params.n_followers if n_followers is None else n_followers
    if n < 1:
        raise ValueError("n_followers must be >= 1")
    m = np.arange(n + 1)
    phi = 2.0 * np.pi * m / (n + 1)
    lx = circulant_eigenvalue(params.gain_x, params.asym_x, phi)
    lv = circulant_eigenvalue(params.gain_v, params.asym_v, phi)
    # exact zeros at m = 0 keep the trivial roots exactly where they belong
    lx[0] = lv[0] = 0.0
    roots = solve_mode_cubic(params.friction, lv, lx)
    # m = 0 gives {0, 0, -a}; only the -a root carries information
    trivial = roots[0][np.argsort(np.abs(roots[0]))[2:]]
    candidates = np.concatenate([roots[1:].real.ravel(), trivial.real])
    return SpectralScan(phi, lx, lv, roots, float(candidates.max()))


def _match_branches(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(3)):
        cost = np.abs(cur[list(perm)] - prev).sum()
        if cost < best_cost:
            best, best_cost = perm, cost
    return cur[list(best)]


@dataclass(frozen=True)
class PhaseVelocityCurves:
    """Phase velocity -Im(nu)/phi and damping Re(nu) per continuous branch."""

    phi: np.ndarray
    roots: np.ndarray
    velocity: np.ndarray
    damping: np.ndarray

    def least_damped(self, index: int = 0) -> dict:
        """Velocity of the least-damped positive and negative branch at ``phi[index]``."""
        v, d = self.velocity[index], self.damping[index]
        out = {}
        for name, mask in (("plus", v > 0), ("minus", v < 0)):
            if mask.any():
                k = np.flatnonzero(mask)[np.argmax(d[mask])]
                out[name] = float(v[k])
            else:
                out[name] = None
        return out


def phase_velocity_curves(params: PlatoonParams, phi_grid=None) -> PhaseVelocityCurves:
    if phi_grid is None:
        phi_grid = np.linspace(0.0, 2.0 * np.pi, 2002)[1:-1]
    phi = np.asarray(phi_grid, dtype=float)
    if phi.ndim != 1 or phi.size == 0:
        raise ValueError("phi_grid must be a non-empty 1-d array")
    if np.any(phi <= 0) or np.any(phi >= 2 * np.pi):
        raise ValueError("phase velocities need phi in the open interval (0, 2 pi)")
    lx = circulant_eigenvalue(params.gain_x, params.asym_x, phi)
    lv = circulant_eigenvalue(params.gain_v, params.asym_v, phi)
    raw = solve_mode_cubic(params.friction, lv, lx)
    order = np.argsort(phi)
    tracked = np.empty_like(raw)
    tracked[order[0]] = raw[order[0]]
    for prev, cur in zip(order[:-1], order[1:]):
        tracked[cur] = _match_branches(tracked[prev], raw[cur])
    velocity = -tracked.imag / phi[:, None]
    return PhaseVelocityCurves(phi, tracked, velocity, tracked.real)


@dataclass(frozen=True)
class WaveVelocities:
    c_plus: float
    c_minus: float

    @property
    def speed_sum(self) -> float:
        return abs(self.c_plus) + abs(self.c_minus)

    @property
    def speed_difference(self) -> float:
        """|c_+| - |c_-|."""
        return abs(self.c_plus) - abs(self.c_minus)

    @property
    def speed_product(self) -> float:
        return abs(self.c_plus) * abs(self.c_minus)


def signal_velocities(params: PlatoonParams) -> WaveVelocities:
    """Speeds (vehicles/s) of the forward and reflected waves."""
    a, gx, gv, bv = params.friction, params.gain_x, params.gain_v, params.beta_v
    if a <= 0 or gx <= 0:
        raise ValueError("signal velocities need friction > 0 and gain_x > 0")
    root = math.sqrt(gv * gv * bv * bv + 2.0 * a * gx)
    return WaveVelocities((gv * bv + root) / (2.0 * a), (gv * bv - root) / (2.0 * a))
