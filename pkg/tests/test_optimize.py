import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoonwave.optimize import (InfeasibleProblem, OptimizationProblem, criterion, feasible,
                                  golden_section, j_hat, optimize)
from platoonwave.spectral import velocity_asymmetry_bound


# --- criterion -------------------------------------------------------------

def test_criterion_reference():
    value = criterion(6.2, 10, 0.2, 2)
    assert value == pytest.approx(1 / 38.44 + 4 / (100 * 0.04 * 6.2), rel=1e-14)
    assert value == pytest.approx(0.18730, abs=1e-5)


@settings(max_examples=200, deadline=None)
@given(gx=st.floats(0.01, 20), gv=st.floats(0.01, 20), bv=st.floats(0.01, 1), a=st.floats(0.1, 5))
def test_criterion_decreasing_in_gain_v(gx, gv, bv, a):
    assert criterion(gx, gv * 1.01, bv, a) < criterion(gx, gv, bv, a)
    assert j_hat(gx, gv, bv, a) ** 2 == pytest.approx(4 * a * a * criterion(gx, gv, bv, a), rel=1e-12)


@pytest.mark.parametrize("args", [(6.2, 10, 0.0, 2), (0.0, 10, 0.2, 2), (6.2, -1, 0.2, 2)])
def test_criterion_rejects(args):
    with pytest.raises(ValueError):
        criterion(*args)


# --- feasibility -----------------------------------------------------------

def test_feasible_reference():
    ok, margins = feasible(6.2, 10, 0.2, OptimizationProblem(2.0))
    assert ok
    assert margins["beta_v_upper"] == pytest.approx(13.8 / math.sqrt(2000) - 0.3, rel=1e-12)
    assert margins["beta_v_upper"] == pytest.approx(0.00857, abs=1e-5)


def test_infeasible_beta():
    ok, margins = feasible(6.2, 10, 0.3, OptimizationProblem(2.0))
    assert not ok and margins["beta_v_upper"] < 0


def test_infeasible_friction_ratio():
    ok, margins = feasible(25, 10, 0.1, OptimizationProblem(2.0, gain_upper=30))
    assert not ok and margins["friction_ratio"] < 0


def test_feasible_gain_bounds_are_closed():
    prob = OptimizationProblem(2.0, epsilon=0.0)
    assert feasible(1e-3, 10, 0.1, prob)[0]
    assert not feasible(6.2, 10.0 + 1e-9, 0.1, prob)[0]


@pytest.mark.parametrize("kwargs", [dict(friction=0), dict(friction=2, gain_upper=1e-4),
                                    dict(friction=2, epsilon=-0.1), dict(friction=2, gain_lower=0)])
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizationProblem(**kwargs)


# --- golden section --------------------------------------------------------

def test_golden_section_quadratic():
    assert golden_section(lambda x: (x - 1.234) ** 2, -3, 5, tol=1e-9) == pytest.approx(1.234, abs=1e-8)


# --- optimize --------------------------------------------------------------

def test_optimize_reference():
    res = optimize(OptimizationProblem(2.0))
    assert res.gain_v == pytest.approx(10, abs=1e-6)
    assert res.gain_x == pytest.approx(6.2, abs=0.2)
    assert res.asym_v == pytest.approx(0.396, abs=0.01)
    assert not res.warnings
    assert "gain_v_upper" in res.active_constraints and "beta_v_upper" in res.active_constraints
    assert res.j_hat == pytest.approx(4 * math.sqrt(res.criterion), rel=1e-14)


def test_optimize_without_margin():
    res = optimize(OptimizationProblem(2.0, epsilon=0.0))
    assert res.asym_v == pytest.approx(0.37, abs=0.01)
    assert res.gain_x == pytest.approx(8.3, abs=0.3)


def test_optimize_result_is_feasible():
    prob = OptimizationProblem(2.0)
    res = optimize(prob)
    _, margins = feasible(res.gain_x, res.gain_v, res.beta_v, prob)
    assert all(m >= -1e-9 for m in margins.values())
    assert 0 < res.asym_v < 0.5


def test_optimize_beats_random_feasible_points():
    prob = OptimizationProblem(2.0)
    res = optimize(prob)
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 200:
        gx, gv = rng.uniform(prob.gain_lower, prob.gain_upper, 2)
        width = velocity_asymmetry_bound(2.0, gx, gv) - prob.epsilon
        if gx >= 2.0 * gv or width <= 0:
            continue
        bv = rng.uniform(0, width)
        if bv == 0 or not feasible(gx, gv, bv, prob)[0]:
            continue
        checked += 1
        assert criterion(gx, gv, bv, 2.0) >= res.criterion * (1 - 1e-6)


def test_optimize_monotone_in_epsilon():
    values = []
    for eps in np.linspace(0, 0.4, 9):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            values.append(optimize(OptimizationProblem(2.0, epsilon=eps)).criterion)
    assert all(b >= a * (1 - 1e-9) for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("a", [1.5, 2.0, 2.5, 3.0])
def test_boundary_reduction_confirmed(a):
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        res = optimize(OptimizationProblem(a))
    assert res.gain_v == pytest.approx(10, abs=1e-6)


def test_large_margin_leaves_upper_gain():
    # with eps = 0.3 a smaller gv widens the admissible beta_v interval
    with pytest.warns(RuntimeWarning):
        res = optimize(OptimizationProblem(2.0, epsilon=0.3))
    assert res.gain_v < 10 and res.warnings


def test_margin_ceiling_at_upper_gain():
    # with gv pinned at 10 the largest half-width is a sqrt(gv / 2) ~ 0.447
    ceiling = velocity_asymmetry_bound(2.0, 1e-3, 10.0)
    assert ceiling == pytest.approx(0.447, abs=1e-3)
    with pytest.raises(InfeasibleProblem):
        optimize(OptimizationProblem(2.0, epsilon=0.45), polish=False)


def test_infeasible_everywhere():
    # the half-width is below a sqrt(gv / 2) <= 0.1 sqrt(5) for every gain in the box
    with pytest.raises(InfeasibleProblem):
        optimize(OptimizationProblem(0.1, epsilon=0.3))


def test_optimize_is_deterministic():
    with pytest.warns(RuntimeWarning):
        r1 = optimize(OptimizationProblem(2.0, epsilon=0.3), seed=5)
        r2 = optimize(OptimizationProblem(2.0, epsilon=0.3), seed=5)
    assert r1.to_dict() == r2.to_dict()


def test_result_json_keys():
    d = optimize(OptimizationProblem(2.0)).to_dict()
    for key in ("a", "eps", "bounds", "gx", "gv", "rho_v", "beta_v", "criterion", "j_hat",
                "active_constraints", "warnings"):
        assert key in d
