"""Laplacians, the block state matrix and fixed-step simulation of the platoon.

The closed loop of N+1 vehicles (leader included) in error coordinates is

    d/dt (z, z', z'') = [[0, I, 0], [0, 0, I], [-gx Lx, -gv Lv, -a I]] (z, z', z'')

Both topologies share this form; they differ only in the Laplacians.  The
integrator works on the three bottom blocks stored as CSR matrices, so a step
costs O(nnz) = O(N) for the nearest-neighbour graphs used here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp

from .params import PlatoonParams, Topology

OVERFLOW_GUARD = 1e12


def build_laplacian(n_followers: int, asym: float, topology: Topology | str = Topology.PATH,
                    *, sparse: bool = False):
    """Weighted nearest-neighbour Laplacian of order ``n_followers + 1``.

    Each row puts ``-(1 - asym)`` on the vehicle in front and ``-asym`` on
    the one behind.  On the path the leader row is empty and the last vehicle
    only looks forward; the circular graph closes the loop between vehicle N
    and the leader.
    """
    if int(n_followers) != n_followers or n_followers < 1:
        raise ValueError(f"n_followers must be a positive integer, got {n_followers}")
    if not 0.0 <= asym <= 1.0:
        raise ValueError(f"asym must lie in [0, 1], got {asym}")
    topology = Topology.coerce(topology)
    n = int(n_followers) + 1
    front, rear = -(1.0 - asym), -asym

    if topology is Topology.PATH:
        inner = np.arange(1, n - 1)
        rows = np.concatenate([inner, inner, inner, [n - 1, n - 1]])
        cols = np.concatenate([inner - 1, inner, inner + 1, [n - 2, n - 1]])
        vals = np.concatenate([np.full(inner.size, front), np.ones(inner.size),
                               np.full(inner.size, rear), [-1.0, 1.0]])
    else:
        idx = np.arange(n)
        rows = np.concatenate([idx, idx, idx])
        cols = np.concatenate([(idx - 1) % n, idx, (idx + 1) % n])
        vals = np.concatenate([np.full(n, front), np.ones(n), np.full(n, rear)])

    # coo -> csr sums duplicates, which is what N = 1 on the circle needs
    lap = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    lap.eliminate_zeros()
    return lap if sparse else lap.toarray()


@dataclass(frozen=True)
class StateVector:
    z: np.ndarray
    z_dot: np.ndarray
    z_ddot: np.ndarray

    def __post_init__(self) -> None:
        arrs = [np.array(v, dtype=float) for v in (self.z, self.z_dot, self.z_ddot)]
        if any(a.ndim != 1 for a in arrs) or len({a.size for a in arrs}) != 1:
            raise ValueError("z, z_dot and z_ddot must be 1-d vectors of equal length")
        for name, a in zip(("z", "z_dot", "z_ddot"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def size(self) -> int:
        return self.z.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.z, self.z_dot, self.z_ddot])

    @classmethod
    def from_flat(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.size % 3:
            raise ValueError("flat state length must be a multiple of 3")
        n = x.size // 3
        return cls(x[:n], x[n:2 * n], x[2 * n:])

    def __mul__(self, alpha: float) -> "StateVector":
        return StateVector(alpha * self.z, alpha * self.z_dot, alpha * self.z_ddot)

    __rmul__ = __mul__


def leader_step_initial_state(n_followers: int) -> StateVector:
    """Platoon at rest while the leader has just reached unit velocity."""
    if n_followers < 1:
        raise ValueError("n_followers must be >= 1")
    n = n_followers + 1
    z_dot = -np.ones(n)
    z_dot[0] = 0.0
    return StateVector(np.zeros(n), z_dot, np.zeros(n))


def displaced_agent_initial_state(n_followers: int, agent: int, displacement: float) -> StateVector:
    if n_followers < 1:
        raise ValueError("n_followers must be >= 1")
    if not 0 <= agent <= n_followers:
        raise IndexError(f"agent {agent} outside 0..{n_followers}")
    z = np.zeros(n_followers + 1)
    z[agent] = displacement
    return StateVector(z, np.zeros_like(z), np.zeros_like(z))


@dataclass(frozen=True)
class BlockSystem:
    """Third-order block system; only the bottom block row is stored.

    ``kx``, ``kv`` and ``ka`` are the negated bottom blocks, so that
    z''' = -(kx z + kv z' + ka z'').
    """

    kx: sp.csr_matrix
    kv: sp.csr_matrix
    ka: sp.csr_matrix
    params: PlatoonParams | None = None
    topology: Topology | None = None

    @property
    def n(self) -> int:
        return self.kx.shape[0]

    @property
    def order(self) -> int:
        return 3 * self.n

    def dense(self) -> np.ndarray:
        n = self.n
        a = np.zeros((3 * n, 3 * n))
        a[:n, n:2 * n] = np.eye(n)
        a[n:2 * n, 2 * n:] = np.eye(n)
        a[2 * n:, :n] = -self.kx.toarray()
        a[2 * n:, n:2 * n] = -self.kv.toarray()
        a[2 * n:, 2 * n:] = -self.ka.toarray()
        return a

    def __array__(self, dtype=None, copy=None):
        a = self.dense()
        return a if dtype is None else a.astype(dtype)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        z, zd, zdd = x[:n], x[n:2 * n], x[2 * n:]
        return np.concatenate([zd, zdd, -(self.kx @ z + self.kv @ zd + self.ka @ zdd)])

    @classmethod
    def from_matrix(cls, a) -> "BlockSystem":
        """Recover the block structure from a dense 3n x 3n matrix."""
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 3:
            raise ValueError("system matrix must be square of order 3n")
        n = a.shape[0] // 3
        expected_top = np.zeros((2 * n, 3 * n))
        expected_top[:n, n:2 * n] = np.eye(n)
        expected_top[n:, 2 * n:] = np.eye(n)
        if not np.array_equal(a[:2 * n], expected_top):
            raise ValueError("top block rows must be [0 I 0; 0 0 I]")
        blocks = [sp.csr_matrix(-a[2 * n:, k * n:(k + 1) * n]) for k in range(3)]
        return cls(*blocks)


def assemble_system(params: PlatoonParams, topology: Topology | str = Topology.PATH) -> BlockSystem:
    topology = Topology.coerce(topology)
    n = params.n_followers
    kx = params.gain_x * build_laplacian(n, params.asym_x, topology, sparse=True)
    kv = params.gain_v * build_laplacian(n, params.asym_v, topology, sparse=True)
    ka = params.friction * sp.identity(n + 1, format="csr")
    return BlockSystem(kx.tocsr(), kv.tocsr(), ka.tocsr(), params, topology)


@dataclass(frozen=True)
class SimulationTrace:
    """Spacing errors e_i = z_0 - z_i sampled every ``dt`` seconds."""

    params: PlatoonParams | None
    dt: float
    times: np.ndarray
    errors: np.ndarray
    diverged: bool = False
    topology: Topology | None = None
    t_end: float | None = None
    meta: dict = field(default_factory=dict)
    leader: np.ndarray | None = None

    @property
    def n_followers(self) -> int:
        return self.errors.shape[1] - 1

    @property
    def last(self) -> np.ndarray:
        """Error of the last vehicle, e_N(t)."""
        return self.errors[:, -1]

    def scaled(self, alpha: float) -> "SimulationTrace":
        leader = None if self.leader is None else alpha * self.leader
        return SimulationTrace(self.params, self.dt, self.times, alpha * self.errors,
                               self.diverged, self.topology, self.t_end, dict(self.meta), leader)


@numba.njit(cache=True)
def _matvec_add(indptr, indices, data, x, out):
    for i in range(out.size):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] += acc


@numba.njit(cache=True)
def _deriv(xp, xi, xd, vp, vi, vd, ap, ai, ad, z, zd, zdd, dz, dzd, dzdd):
    n = z.size
    for i in range(n):
        dz[i] = zd[i]
        dzd[i] = zdd[i]
        dzdd[i] = 0.0
    _matvec_add(xp, xi, xd, z, dzdd)
    _matvec_add(vp, vi, vd, zd, dzdd)
    _matvec_add(ap, ai, ad, zdd, dzdd)
    for i in range(n):
        dzdd[i] = -dzdd[i]


@numba.njit(cache=True)
def _integrate(xp, xi, xd, vp, vi, vd, ap, ai, ad, z, zd, zdd, h, substeps, n_samples, guard,
               out, leader):
    n = z.size
    k = np.zeros((4, 3, n))
    tz = np.empty(n)
    tzd = np.empty(n)
    tzdd = np.empty(n)
    leader[0] = z[0]
    for i in range(n):
        out[0, i] = z[0] - z[i]
    for s in range(1, n_samples):
        for _ in range(substeps):
            _deriv(xp, xi, xd, vp, vi, vd, ap, ai, ad, z, zd, zdd, k[0, 0], k[0, 1], k[0, 2])
            for stage in range(1, 4):
                c = 0.5 * h if stage < 3 else h
                for i in range(n):
                    tz[i] = z[i] + c * k[stage - 1, 0, i]
                    tzd[i] = zd[i] + c * k[stage - 1, 1, i]
                    tzdd[i] = zdd[i] + c * k[stage - 1, 2, i]
                _deriv(xp, xi, xd, vp, vi, vd, ap, ai, ad, tz, tzd, tzdd,
                       k[stage, 0], k[stage, 1], k[stage, 2])
            w = h / 6.0
            for i in range(n):
                z[i] += w * (k[0, 0, i] + 2.0 * k[1, 0, i] + 2.0 * k[2, 0, i] + k[3, 0, i])
                zd[i] += w * (k[0, 1, i] + 2.0 * k[1, 1, i] + 2.0 * k[2, 1, i] + k[3, 1, i])
                zdd[i] += w * (k[0, 2, i] + 2.0 * k[1, 2, i] + 2.0 * k[2, 2, i] + k[3, 2, i])
        for i in range(n):
            # also trips on nan, which never compares greater than the guard
            if not abs(z[i]) <= guard:
                return s
        leader[s] = z[0]
        for i in range(n):
            out[s, i] = z[0] - z[i]
    return n_samples


def _csr_arrays(m: sp.csr_matrix):
    m = sp.csr_matrix(m)
    return (m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(np.float64))


def simulate(system, initial: StateVector, dt: float = 0.01, t_end: float = 10.0, *,
             substeps: int = 1, overflow_guard: float = OVERFLOW_GUARD,
             params: PlatoonParams | None = None) -> SimulationTrace:
    """Integrate the block system with classical RK4.

    Samples are taken at t = 0, dt, 2 dt, ... up to the first sample at or
    beyond ``t_end``; each sample interval is covered by ``substeps`` RK4
    steps of size ``dt / substeps``.  When any |z_i| exceeds
    ``overflow_guard`` the trace is cut before that sample and marked
    ``diverged``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end > dt:
        raise ValueError(f"t_end must exceed dt, got t_end={t_end}, dt={dt}")
    if int(substeps) != substeps or substeps < 1:
        raise ValueError("substeps must be a positive integer")
    if not isinstance(system, BlockSystem):
        system = BlockSystem.from_matrix(system)
    if 3 * initial.size != system.order:
        raise ValueError(f"state of length {3 * initial.size} does not match system order {system.order}")

    n_samples = int(math.ceil(t_end / dt - 1e-9)) + 1
    out = np.empty((n_samples, system.n))
    leader = np.empty(n_samples)
    z, zd, zdd = (np.array(v, dtype=np.float64) for v in (initial.z, initial.z_dot, initial.z_ddot))
    if np.max(np.abs(z)) > overflow_guard:
        raise ValueError("initial state already exceeds the overflow guard")
    done = _integrate(*_csr_arrays(system.kx), *_csr_arrays(system.kv), *_csr_arrays(system.ka),
                      z, zd, zdd, dt / substeps, int(substeps), n_samples, float(overflow_guard), out,
                      leader)
    diverged = done < n_samples
    times = np.arange(done) * dt
    return SimulationTrace(params if params is not None else system.params, float(dt), times,
                           out[:done], bool(diverged), system.topology, float(t_end),
                           {"substeps": int(substeps)}, leader[:done])


def simulate_leader_step(params: PlatoonParams, t_end: float, dt: float = 0.01, *,
                         substeps: int = 1, topology: Topology | str = Topology.PATH,
                         overflow_guard: float = OVERFLOW_GUARD) -> SimulationTrace:
    system = assemble_system(params, topology)
    return simulate(system, leader_step_initial_state(params.n_followers), dt, t_end,
                    substeps=substeps, overflow_guard=overflow_guard)


def absolute_positions(trace: SimulationTrace) -> np.ndarray:
    """Positions x_i = z_i + t behind a leader at unit speed (zero desired gaps)."""
    if trace.leader is None:
        raise ValueError("trace carries no leader samples")
    return trace.leader[:, None] - trace.errors + trace.times[:, None]
