import json
import math
import subprocess
import sys

import numpy as np
import pytest

from platoonwave import cli, harness, io
from platoonwave.params import PlatoonParams
from platoonwave.spectral import spectral_scan
from platoonwave.transients import total_absolute_error


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


# --- parsing ---------------------------------------------------------------

def test_parse_range_inclusive():
    np.testing.assert_allclose(harness.parse_range("0.34:0.44:0.02"),
                               [0.34, 0.36, 0.38, 0.40, 0.42, 0.44])
    np.testing.assert_allclose(harness.parse_range("1:1:0.5"), [1.0])


@pytest.mark.parametrize("text", ["1:2", "a:b:c", "1:2:0", "2:1:0.1"])
def test_parse_range_rejects(text):
    with pytest.raises(ValueError):
        harness.parse_range(text)


def test_beta_flags_are_stored_as_rho():
    args = cli.build_parser().parse_args(["predict", "--beta-v", "0.2", "--beta-x", "0"])
    p = cli.params_from_args(args)
    assert p.asym_v == pytest.approx(0.4) and p.asym_x == 0.5


def test_rho_and_beta_are_exclusive(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("predict", "--rho-v", 0.4, "--beta-v", 0.2)
    assert exc.value.code == 1


# --- exit codes and files --------------------------------------------------

def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run_cli("plot")
    assert exc.value.code == 1


@pytest.mark.parametrize("argv", [["verify"], ["scaling"], ["sweep-friction"], ["sweep-asym"],
                                  ["classify"], ["verify", "--n-list", ","],
                                  ["sweep-asym", "--range", "0.3:0.6:0.1"],
                                  ["stability", "--rho-x", 1.5], ["simulate", "--n", 0]])
def test_usage_errors(argv, tmp_path):
    assert run_cli(*argv, "--out", tmp_path) == 1


def test_simulate_writes_trace(tmp_path):
    assert run_cli("simulate", "--n", 10, "--t-end", 20, "--out", tmp_path) == 0
    trace = io.read_trace(tmp_path / "trace.csv")
    assert trace.errors.shape == (401, 11)
    meta = io.read_json(tmp_path / "trace.json")
    assert meta["N"] == 10 and meta["rho_v"] == 0.4 and meta["diverged"] is False
    manifest = io.read_json(tmp_path / "manifest.json")
    assert manifest["command"] == "simulate" and manifest["params"]["gx"] == 6.2
    assert "version" in manifest and manifest["wall_clock_s"] >= 0


def test_simulate_diverged_exit_code(tmp_path):
    assert run_cli("simulate", "--n", 10, "--a", 0.5, "--t-end", 600, "--out", tmp_path) == 2
    assert io.read_json(tmp_path / "trace.json")["diverged"] is True


def test_spectrum_csv(tmp_path):
    assert run_cli("spectrum", "--n", 20, "--out", tmp_path) == 0
    rows = io.read_rows(tmp_path / "spectrum.csv")
    assert list(rows[0]) == io.SPECTRUM_HEADER
    assert len(rows) == 21 and rows[0]["c1"] == "nan"
    scan = spectral_scan(PlatoonParams(20, 2, 6.2, 10, 0.5, 0.4))
    assert float(rows[3]["re_nu2"]) == scan.roots[3, 1].real
    assert float(rows[3]["c2"]) == pytest.approx(-scan.roots[3, 1].imag / scan.phi[3], rel=1e-15)


def test_stability_json(tmp_path, capsys):
    assert run_cli("stability", "--a", 1.4, "--out", tmp_path) == 0
    assert capsys.readouterr().out.strip() == "unstable"
    report = io.read_json(tmp_path / "stability.json")
    assert report["cond_I"] and report["cond_II"] and not report["cond_III"]
    assert report["margin"] < 0 and report["stable"] is False


def test_predict(tmp_path):
    assert run_cli("predict", "--n", 250, "--out", tmp_path) == 0
    pred = io.read_json(tmp_path / "prediction.json")
    assert pred["a1"] == pytest.approx(135.75, abs=0.01)
    assert pred["c_plus"] == pytest.approx(1.84164, abs=1e-5)


def test_predict_unstable_exit_code(tmp_path):
    assert run_cli("predict", "--rho-x", 0.45, "--out", tmp_path) == 2


def test_optimize_cli(tmp_path, capsys):
    assert run_cli("optimize", "--out", tmp_path) == 0
    assert capsys.readouterr().out.startswith("gx=6.24")
    res = io.read_json(tmp_path / "optimize.json")
    assert res["gv"] == 10 and res["seed"] == 0 and res["warnings"] == []
    assert io.read_json(tmp_path / "manifest.json")["seed"] == 0


def test_optimize_infeasible_exit_code(tmp_path):
    assert run_cli("optimize", "--a", 0.1, "--eps", 0.3, "--out", tmp_path) == 2


def test_classify_cli(tmp_path, capsys):
    assert run_cli("classify", "--n-list", "10,20,30,40", "--out", tmp_path) == 0
    assert capsys.readouterr().out.strip() == "flock-stable"
    out = io.read_json(tmp_path / "classification.json")
    assert set(out) == {"params", "n_grid", "max_errors", "slopes", "rss", "verdict"}


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "platoonwave", "stability", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "stable"


# --- round trips and determinism ------------------------------------------

def test_trace_round_trip_preserves_theta(tmp_path, tuned):
    p = tuned(n=40)
    trace = harness.run_simulate(p, tmp_path)
    back = io.read_trace(tmp_path / "trace.csv")
    assert back.params == p and back.dt == trace.dt
    t1 = total_absolute_error(trace).theta
    t2 = total_absolute_error(back).theta
    assert t2 == pytest.approx(t1, rel=1e-9)


def test_rows_round_trip(tmp_path):
    rows = [{"N": 1, "theta": 1 / 3, "flag": True}, {"N": 2, "theta": math.inf, "flag": False}]
    io.write_rows(tmp_path / "r.csv", rows)
    back = io.read_rows(tmp_path / "r.csv")
    assert float(back[0]["theta"]) == 1 / 3 and float(back[1]["theta"]) == math.inf


def test_json_non_finite(tmp_path):
    io.write_json(tmp_path / "x.json", {"a": math.inf, "b": [math.nan, 1.0], "c": np.float64(2)})
    text = (tmp_path / "x.json").read_text()
    assert json.loads(text) == {"a": "inf", "b": ["nan", 1.0], "c": 2.0}


def test_commands_are_deterministic(tmp_path):
    for k in range(2):
        assert run_cli("verify", "--n-list", "20,40", "--out", tmp_path / str(k)) == 0
    a = (tmp_path / "0" / "verify.csv").read_text()
    b = (tmp_path / "1" / "verify.csv").read_text()
    assert a == b


# --- verify ----------------------------------------------------------------

def test_verify_rows(tmp_path, tuned):
    rows = harness.run_verify(tuned(), [40], tmp_path)
    assert [r["chi"] for r in rows] == ["A1", "ratio21", "ratio32", "T"]
    assert all(r["N"] == 40 for r in rows)
    back = io.read_rows(tmp_path / "verify.csv")
    assert list(back[0]) == ["N", "chi", "pred", "meas", "theta"]


def test_verify_empty(tuned):
    with pytest.raises(ValueError):
        harness.run_verify(tuned(), [])


def test_verify_trend(tuned):
    rows = harness.run_verify(tuned(), [40, 80, 160])
    for chi in harness.VERIFY_QUANTITIES:
        series = [r["theta"] for r in rows if r["chi"] == chi]
        assert series[-1] < series[0]


# --- strategies and scaling ------------------------------------------------

@pytest.fixture(scope="module")
def strategies():
    return {k: v["summary"] for k, v in harness.run_compare_strategies(n=100).items()}


def test_identical_asymmetry_has_largest_overshoot(strategies):
    over = {k: v["max_overshoot"] for k, v in strategies.items()}
    assert max(over, key=over.get) == "identical-asymmetric"


def test_velocity_only_is_smallest(strategies):
    vo = strategies["velocity-only"]
    for name in ("symmetric", "identical-asymmetric"):
        assert vo["max_overshoot"] < strategies[name]["max_overshoot"]
        assert vo["theta"] < strategies[name]["theta"]


@pytest.mark.xfail(strict=True, reason="at N=100 the identical-asymmetric overshoot "
                   "(~3e5) dominates the symmetric case's long transient")
def test_symmetric_has_largest_theta(strategies):
    theta = {k: v["theta"] for k, v in strategies.items()}
    assert max(theta, key=theta.get) == "symmetric"


def test_compare_files(tmp_path):
    assert run_cli("compare-strategies", "--n", 20, "--out", tmp_path) == 0
    for name in harness.STRATEGIES:
        assert (tmp_path / f"trace_{name}.csv").exists()
    summary = io.read_json(tmp_path / "summary.json")
    assert set(summary) == set(harness.STRATEGIES)


@pytest.fixture(scope="module")
def scaling():
    rows = harness.run_scaling([25, 50, 100, 200])
    series = {}
    for r in rows:
        series.setdefault(r["series"], []).append(r["theta"])
    return series


def test_scaling_velocity_only_matches_estimate(scaling):
    for sim, est in zip(scaling["velocity-only"][2:], scaling["estimate"][2:]):
        assert abs(sim / est - 1) < 0.20


def test_scaling_identical_asymmetry_is_exponential(scaling):
    n = np.array([25, 50, 100, 200], dtype=float)
    y = np.log(scaling["identical-asymmetric"])
    rss_lin = np.polyfit(n, y, 1, full=True)[1][0]
    rss_log = np.polyfit(np.log(n), y, 1, full=True)[1][0]
    assert rss_lin < rss_log


def test_scaling_symmetric_above_velocity_only(scaling):
    assert all(s > v for s, v in zip(scaling["symmetric"], scaling["velocity-only"]))


def test_scaling_cli(tmp_path):
    assert run_cli("scaling", "--n-list", "10,20", "--out", tmp_path) == 0
    rows = io.read_rows(tmp_path / "scaling.csv")
    assert len(rows) == 8 and {r["series"] for r in rows} == {*harness.STRATEGIES, "estimate"}


def test_theta_point_censors_divergence(tuned):
    pt = harness.theta_point(tuned(n=10, friction=0.5), t_end=600.0)
    assert pt.diverged and pt.theta == math.inf
    assert pt.row()["diverged"] is True


def test_theta_batch_parallel_matches_serial(tuned):
    params = [tuned(n=n) for n in (10, 15)]
    serial = harness.theta_batch(params, jobs=1)
    parallel = harness.theta_batch(params, jobs=2)
    assert [p.theta for p in serial] == [p.theta for p in parallel]


# --- sweeps ----------------------------------------------------------------

def test_critical_friction():
    a_star = harness.critical_friction(6.2, 10, 0.2)
    assert a_star == pytest.approx(1.514, abs=1e-3)
    assert a_star == pytest.approx((0.2 * math.sqrt(2000) + 6.2) / 10, rel=1e-14)


def test_sweep_friction_cli(tmp_path, capsys):
    assert run_cli("sweep-friction", "--n", 20, "--range", "1.8:2.2:0.2", "--out", tmp_path) == 0
    assert capsys.readouterr().out.strip() == "a*=1.51443"
    rows = io.read_rows(tmp_path / "sweep_friction.csv")
    assert [float(r["a"]) for r in rows] == [1.8, 2.0, 2.2]


def test_sweep_friction_marks_margin(tuned):
    res = harness.run_sweep_friction(tuned(n=10), [1.4, 2.0], horizon=2.0)
    assert res["rows"][0]["margin"] < 0 < res["rows"][1]["margin"]


@pytest.mark.slow
def test_sweep_friction_is_linear(tuned):
    res = harness.run_sweep_friction(tuned(n=300), np.arange(1.8, 2.81, 0.2))
    a = np.array([r["a"] for r in res["rows"]])
    theta = np.array([r["theta"] for r in res["rows"]])
    fit = np.polyval(np.polyfit(a, theta, 1), a)
    r2 = 1 - np.sum((theta - fit) ** 2) / np.sum((theta - theta.mean()) ** 2)
    assert r2 > 0.99


def test_sweep_asym_near_symmetric_is_large(tuned):
    res = harness.run_sweep_asym(tuned(n=50, gain_x=8.3), [0.37, 0.49])
    assert res["rows"][1]["theta"] > 3 * res["rows"][0]["theta"]
    assert res["argmin"] == 0.37


def test_sweep_asym_flags_bound(tuned):
    res = harness.run_sweep_asym(tuned(n=10, gain_x=8.3), [0.34, 0.40], horizon=2.0)
    assert [r["beyond_bound"] for r in res["rows"]] == [True, False]


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="at N=300 the total error keeps falling below "
                   "rho_v = 0.36; the dip near 0.37 needs far longer platoons")
def test_sweep_asym_argmin_near_optimum(tuned):
    res = harness.run_sweep_asym(tuned(n=300, gain_x=8.3), [0.34, 0.35, 0.36, 0.37, 0.38, 0.40])
    assert abs(res["argmin"] - 0.37) <= 0.02
