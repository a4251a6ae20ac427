"""Campaign runner, table/CSV emission, surfaces and the Doppler drift check."""

import math

import numpy as np
import pytest

import mimofit.harness.campaign as campaign_module
from mimofit.estimator import OptimizerConfig
from mimofit.harness import (
    CampaignError,
    CampaignSpec,
    ContourGrid,
    check_doppler_cit,
    emit_contour,
    emit_rmse_csv,
    load_scenario,
    make_contour,
    run_campaign,
    simulate_range_estimates,
)
from mimofit.harness.campaign import RmseRow, RmseTable
from mimofit.scene import MotionCoefficients, path_ranges, eval_position

FAST = OptimizerConfig(population_size=16, n_generations=10)
EX1_HALFWIDTHS = (50.0, 5.0, 1.0, 50.0, 5.0, 1.0)


def fast_spec(**overrides) -> CampaignSpec:
    fields = dict(snr_grid_db=(10.0,), n_trials=2, optimizer=FAST, base_seed=1)
    fields.update(overrides)
    return CampaignSpec(**fields)


# ---------------------------------------------------------------------------
# CampaignSpec validation
# ---------------------------------------------------------------------------

def test_spec_rejects_bad_grids():
    with pytest.raises(ValueError, match="non-empty"):
        CampaignSpec(snr_grid_db=(), n_trials=1)
    with pytest.raises(ValueError, match="finite"):
        CampaignSpec(snr_grid_db=(0.0, math.nan), n_trials=1)
    with pytest.raises(ValueError, match="finite"):
        CampaignSpec(snr_grid_db=(-math.inf,), n_trials=1)


def test_spec_rejects_bad_trials_and_policy():
    with pytest.raises(ValueError, match="n_trials"):
        fast_spec(n_trials=0)
    with pytest.raises(ValueError, match="box_policy"):
        fast_spec(box_policy="magic")
    with pytest.raises(ValueError, match="box_scale"):
        fast_spec(box_scale=0.0)
    with pytest.raises(ValueError, match="box_halfwidths"):
        fast_spec(box_policy="init")  # halfwidths required
    with pytest.raises(ValueError, match="box_halfwidths"):
        fast_spec(box_policy="init", box_halfwidths=(1.0, -1.0))
    with pytest.raises(ValueError, match="range_noise"):
        fast_spec(range_noise=-1.0)


def test_table_row_validation():
    with pytest.raises(ValueError, match=">= 0"):
        RmseRow(0.0, "x0", -1.0, 0.0, 1)
    with pytest.raises(ValueError, match="trials"):
        RmseRow(0.0, "x0", 1.0, 0.0, 0)
    row = RmseRow(0.0, "x0", 1.0, 0.5, 3)
    with pytest.raises(ValueError, match="duplicate"):
        RmseTable(rows=(row, row))


# ---------------------------------------------------------------------------
# range track simulation
# ---------------------------------------------------------------------------

def test_range_estimates_match_scene_oracle():
    s = load_scenario("example1")
    ranges = simulate_range_estimates(s.geometry, s.motion, s.radar)
    assert ranges.shape == (50, 5)
    for k in (0, 17, 49):
        pos = eval_position(s.motion, s.radar, k)
        for n in range(s.geometry.n_rx):
            _, d_n = path_ranges(s.geometry, pos, 0, n)
            assert ranges[k, n] == pytest.approx(d_n, abs=1e-9)


def test_range_estimates_noise_and_determinism():
    s = load_scenario("example1")
    clean = simulate_range_estimates(s.geometry, s.motion, s.radar)
    noisy1 = simulate_range_estimates(s.geometry, s.motion, s.radar,
                                      noise_std=5.0, seed=11)
    noisy2 = simulate_range_estimates(s.geometry, s.motion, s.radar,
                                      noise_std=5.0, seed=11)
    np.testing.assert_array_equal(noisy1, noisy2)
    residual = noisy1 - clean
    assert 2.0 < residual.std() < 8.0  # 250 draws of std-5 noise
    with pytest.raises(ValueError, match="noise_std"):
        simulate_range_estimates(s.geometry, s.motion, s.radar, noise_std=-1.0)


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------

def test_single_noiseless_trial_recovers_truth():
    # degenerate campaign: one trial, no noise, init-centered box
    s = load_scenario("example1")
    spec = CampaignSpec(snr_grid_db=(math.inf,), n_trials=1,
                        optimizer=OptimizerConfig(population_size=32,
                                                  n_generations=60),
                        box_policy="init", box_halfwidths=EX1_HALFWIDTHS,
                        base_seed=0)
    table = run_campaign(s, spec)
    for row in table.rows:
        assert row.rmse <= 1e-3
        assert row.crb_std == 0.0
        assert row.trials == 1
    assert table.excluded == ((math.inf, 0),)


def test_row_layout_and_location_aggregation():
    s = load_scenario("example1")
    table = run_campaign(s, fast_spec(n_trials=1))
    names = [r.parameter for r in table.rows]
    assert names == ["x0", "x1", "x2", "y0", "y1", "y2", "location"]
    # with one trial the location row is the Euclidean norm of the
    # per-axis order-0 rows
    by_name = {r.parameter: r for r in table.rows}
    want = math.hypot(by_name["x0"].rmse, by_name["y0"].rmse)
    assert by_name["location"].rmse == pytest.approx(want, rel=1e-12)


def test_crb_column_matches_direct_bound():
    from mimofit.crb import compute_crb
    from mimofit.signal import draw_reflection_vector, noise_variance_for_snr

    s = load_scenario("example1")
    table = run_campaign(s, fast_spec(snr_grid_db=(5.0,), n_trials=1))
    b = draw_reflection_vector(s.geometry.n_paths, s.reflection_seed)
    bound = compute_crb(s.geometry, s.motion, s.radar, b,
                        noise_variance_for_snr(s.radar, b, 5.0))
    for p, name in enumerate(s.motion.parameter_names()):
        assert table.row(5.0, name).crb_std == pytest.approx(bound.psi_std[p])
    want_loc = math.hypot(bound.psi_std[0], bound.psi_std[3])
    assert table.row(5.0, "location").crb_std == pytest.approx(want_loc)


def test_campaign_determinism():
    s = load_scenario("example1")
    t1 = run_campaign(s, fast_spec())
    t2 = run_campaign(s, fast_spec())
    assert t1 == t2


def test_campaign_seed_changes_results():
    s = load_scenario("example1")
    t1 = run_campaign(s, fast_spec(n_trials=1, base_seed=0))
    t2 = run_campaign(s, fast_spec(n_trials=1, base_seed=99))
    assert t1.rows[0].rmse != t2.rows[0].rmse


def test_parallel_trials_match_sequential():
    # pre-assigned seeds make aggregation order-independent
    s = load_scenario("example1")
    seq = run_campaign(s, fast_spec(n_trials=4, n_jobs=1))
    par = run_campaign(s, fast_spec(n_trials=4, n_jobs=2))
    assert seq == par


def test_noiseless_point_requires_init_policy():
    s = load_scenario("example1")
    with pytest.raises(CampaignError, match="init"):
        run_campaign(s, fast_spec(snr_grid_db=(math.inf,)))


def test_halfwidth_length_must_match():
    s = load_scenario("example1")
    spec = fast_spec(box_policy="init", box_halfwidths=(1.0, 1.0))
    with pytest.raises(ValueError, match="length 6"):
        run_campaign(s, spec)


def test_small_exclusion_rate_is_reported(monkeypatch):
    s = load_scenario("example1")
    real = campaign_module.estimate
    calls = {"n": 0}

    def flaky(ctx, box, cfg):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("synthetic optimizer failure")
        return real(ctx, box, cfg)

    monkeypatch.setattr(campaign_module, "estimate", flaky)
    spec = fast_spec(n_trials=40, optimizer=OptimizerConfig(population_size=8,
                                                            n_generations=2))
    table = run_campaign(s, spec)
    assert table.excluded == ((10.0, 1),)
    assert all(r.trials == 39 for r in table.rows)


def test_heavy_exclusions_fail_the_campaign(monkeypatch):
    s = load_scenario("example1")

    def broken(ctx, box, cfg):
        raise RuntimeError("synthetic optimizer failure")

    monkeypatch.setattr(campaign_module, "estimate", broken)
    with pytest.raises(CampaignError, match="excluded"):
        run_campaign(s, fast_spec(n_trials=4))


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def test_rmse_csv_bytes(tmp_path):
    rows = (RmseRow(0.0, "x0", 12.5, 10.0, 3),
            RmseRow(0.0, "location", 0.1 + 0.2, 0.25, 3))
    table = RmseTable(rows=rows)
    path = tmp_path / "table.csv"
    emit_rmse_csv(table, path)
    got = path.read_bytes()
    assert got == (b"snr_db,parameter,rmse,crb_std,trials\r\n"
                   b"0.0,x0,12.5,10.0,3\r\n"
                   b"0.0,location,0.30000000000000004,0.25,3\r\n")


def test_rmse_csv_golden_across_runs(tmp_path):
    s = load_scenario("example1")
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_rmse_csv(run_campaign(s, fast_spec()), p1)
    emit_rmse_csv(run_campaign(s, fast_spec()), p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# objective surfaces
# ---------------------------------------------------------------------------

def test_contour_grid_validation():
    with pytest.raises(ValueError, match="shape"):
        ContourGrid("a", [1.0, 2.0], "b", [1.0], np.zeros((2, 2)))
    with pytest.raises(ValueError, match="empty"):
        ContourGrid("a", [], "b", [], np.zeros((0, 0)))


def test_contour_peak_at_true_velocity_acceleration():
    # one noisy draw at 0 dB: the objective over (velocity, acceleration)
    # peaks in the cell holding the true (100, -20)
    s = load_scenario("example1")
    grid = make_contour(s, 0.0, "x1", np.linspace(96.0, 104.0, 9),
                        "x2", np.linspace(-24.0, -16.0, 9), seed=2)
    assert grid.peak() == (100.0, -20.0)


def test_contour_axis_resolution_errors():
    s = load_scenario("example1")
    values = np.linspace(-1.0, 1.0, 3)
    with pytest.raises(ValueError, match="unknown parameter"):
        make_contour(s, 0.0, "x9", values, "x1", values)
    with pytest.raises(ValueError, match="out of range"):
        make_contour(s, 0.0, 17, values, 1, values)


def test_emit_contour_format_and_stability(tmp_path):
    grid = ContourGrid("x1", [1.0, 2.0], "x2", [5.0, 6.0, 7.0],
                       np.arange(6.0).reshape(2, 3))
    p1, p2 = tmp_path / "g1.csv", tmp_path / "g2.csv"
    emit_contour(grid, p1)
    emit_contour(grid, p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "axis1,x1,1.0,2.0"
    assert lines[1] == "axis2,x2,5.0,6.0,7.0"
    assert lines[2] == "0.0,1.0,2.0"  # row-major: one line per axis-1 value
    assert lines[3] == "3.0,4.0,5.0"
    assert len(lines) == 4


# ---------------------------------------------------------------------------
# per-interval Doppler drift
# ---------------------------------------------------------------------------

def test_doppler_drift_zero_for_static_target():
    s = load_scenario("example1")
    static = campaign_module.Scenario(
        name="static", geometry=s.geometry,
        motion=MotionCoefficients(cx=[9800.0], cy=[0.0]),
        radar=s.radar, pulse_repetition_time=s.pulse_repetition_time,
        pulses_per_interval=s.pulses_per_interval)
    assert check_doppler_cit(static) == 0.0


def test_doppler_drift_zero_for_single_pulse():
    s = load_scenario("example1")
    single = campaign_module.Scenario(
        name="single", geometry=s.geometry, motion=s.motion, radar=s.radar,
        pulse_repetition_time=s.pulse_repetition_time, pulses_per_interval=1)
    assert check_doppler_cit(single) == 0.0


def test_doppler_drift_grows_with_velocity():
    s = load_scenario("example1")

    def drift(scale):
        cx = [9800.0, 100.0 * scale, -20.0 * scale]
        faster = campaign_module.Scenario(
            name="scaled", geometry=s.geometry,
            motion=MotionCoefficients(cx=cx, cy=[0.0, 0.0, 0.0]),
            radar=s.radar, pulse_repetition_time=s.pulse_repetition_time,
            pulses_per_interval=s.pulses_per_interval)
        return check_doppler_cit(faster)

    assert drift(2.0) > drift(1.0) > 0.0
