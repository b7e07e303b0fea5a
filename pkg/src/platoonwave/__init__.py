"""Asymmetric nearest-neighbour platoons with friction: simulation, spectra,
traveling-wave transients and controller tuning."""
from .dynamics import (BlockSystem, SimulationTrace, StateVector, assemble_system,
                       build_laplacian, displaced_agent_initial_state,
                       leader_step_initial_state, simulate, simulate_leader_step)
from .optimize import (InfeasibleProblem, OptimizationProblem, OptimizationResult, criterion,
                       feasible, j_hat, optimize)
from .params import REFERENCE, PlatoonParams, Topology
from .spectral import (StabilityReport, WaveVelocities, check_circular_stability,
                       check_necessary, circulant_eigenvalue, phase_velocity_curves,
                       signal_velocities, solve_mode_cubic, spectral_scan)
from .transients import (ErrorSummary, TransientMeasurement, TransientPrediction,
                         classify_flock_stability, measure_transient, predict_total_error,
                         predict_transient, relative_error, total_absolute_error)

__all__ = [
    "BlockSystem", "SimulationTrace", "StateVector", "assemble_system", "build_laplacian",
    "displaced_agent_initial_state", "leader_step_initial_state", "simulate",
    "simulate_leader_step", "InfeasibleProblem", "OptimizationProblem", "OptimizationResult",
    "criterion", "feasible", "j_hat", "optimize", "REFERENCE", "PlatoonParams", "Topology",
    "StabilityReport", "WaveVelocities", "check_circular_stability", "check_necessary",
    "circulant_eigenvalue", "phase_velocity_curves", "signal_velocities", "solve_mode_cubic",
    "spectral_scan", "ErrorSummary", "TransientMeasurement", "TransientPrediction",
    "classify_flock_stability", "measure_transient", "predict_total_error", "predict_transient",
    "relative_error", "total_absolute_error",
]
