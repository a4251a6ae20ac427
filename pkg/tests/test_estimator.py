"""Search, refinement and coarse-initializer tests."""

import numpy as np
import pytest

from mimofit.estimator import (
    Estimate,
    MotionEstimator,
    OptimizerConfig,
    SearchBox,
    coarse_init,
    estimate,
    multilaterate,
    objective_grid,
)
from mimofit.likelihood import ConcentratedObjective
from mimofit.scene import AntennaGeometry, MotionCoefficients, RadarParams, eval_position
from mimofit.signal import draw_reflection_vector, synthesize

GEOM = AntennaGeometry(
    transmitters=[(0.0, -5000.0), (0.0, 5000.0), (5000.0, 5000.0)],
    receivers=[(0.0, -5000.0), (0.0, 0.0), (0.0, 5000.0),
               (2500.0, 5000.0), (5000.0, 5000.0)],
)
MOTION = MotionCoefficients(cx=[9800.0, 100.0, -20.0], cy=[0.0, 0.0, 0.0])
PARAMS = RadarParams(carrier_frequency=3e8, propagation_speed=3e8,
                     snapshot_interval=0.01, snapshot_count=50)
TRUTH = MOTION.to_vector()
B = draw_reflection_vector(GEOM.n_paths, seed=11)


def noiseless_ctx():
    snaps = synthesize(GEOM, MOTION, PARAMS, B, noise_variance=0.0, seed=0)
    return ConcentratedObjective(GEOM, PARAMS, MOTION.order, snaps, planar=True)


def truth_box(halfwidths=(60.0, 1.0, 1.0, 60.0, 1.0, 1.0)):
    return SearchBox.centered(TRUTH, np.asarray(halfwidths))


def true_receiver_ranges(geometry, motion, params):
    pos = eval_position(motion, params, np.arange(params.snapshot_count))
    return np.linalg.norm(pos[:, None, :] - geometry.receivers[None, :, :], axis=-1)


# ---------------------------------------------------------------------------
# search box and config
# ---------------------------------------------------------------------------

def test_search_box_basics():
    box = SearchBox(lower=[0.0, -1.0], upper=[2.0, 1.0])
    np.testing.assert_allclose(box.center, [1.0, 0.0])
    np.testing.assert_allclose(box.width, [2.0, 2.0])
    assert box.contains([1.5, 0.5]) and not box.contains([3.0, 0.0])
    np.testing.assert_allclose(box.clip([5.0, -7.0]), [2.0, -1.0])
    with pytest.raises(ValueError):
        SearchBox(lower=[0.0, 0.0], upper=[1.0, 0.0])
    with pytest.raises(ValueError):
        SearchBox(lower=[0.0], upper=[1.0, 2.0])


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(population_size=1)
    with pytest.raises(ValueError):
        OptimizerConfig(n_generations=0)
    with pytest.raises(ValueError):
        OptimizerConfig(refine_tol=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(n_elite=64, population_size=64)


# ---------------------------------------------------------------------------
# multilateration and coarse init
# ---------------------------------------------------------------------------

def test_multilaterate_exact_2d():
    anchors = np.array([(0.0, 0.0), (1000.0, 0.0), (0.0, 1000.0)])
    truth = np.array([400.0, 700.0, 0.0])
    ranges = np.linalg.norm(truth[None, :2] - anchors, axis=1)
    got = multilaterate(anchors, ranges, planar=True)
    np.testing.assert_allclose(got, truth, atol=1e-6)


def test_multilaterate_exact_3d():
    anchors = np.array([(0.0, 0.0, 0.0), (1000.0, 0.0, 0.0),
                        (0.0, 1000.0, 0.0), (0.0, 0.0, 1000.0)])
    truth = np.array([300.0, -200.0, 500.0])
    ranges = np.linalg.norm(truth[None, :] - anchors, axis=1)
    got = multilaterate(anchors, ranges, planar=False)
    np.testing.assert_allclose(got, truth, atol=1e-6)


def test_multilaterate_rejects_degenerate_geometry():
    collinear = np.array([(0.0, 0.0), (500.0, 0.0), (1000.0, 0.0)])
    target = np.array([200.0, 0.0])  # on the line: Jacobian rows all parallel
    ranges = np.abs(collinear[:, 0] - target[0])
    with pytest.raises(ValueError, match="rank-deficient|degenerate"):
        multilaterate(collinear, ranges, planar=True)
    with pytest.raises(ValueError, match="at least"):
        multilaterate(np.array([(0.0, 0.0), (1.0, 0.0)]), [1.0, 1.0], planar=True)


def test_coarse_init_recovers_truth_from_exact_ranges():
    ranges = true_receiver_ranges(GEOM, MOTION, PARAMS)
    got = coarse_init(GEOM, PARAMS, ranges, order=2, planar=True)
    np.testing.assert_allclose(got.cx, MOTION.cx, atol=1e-6)
    np.testing.assert_allclose(got.cy, MOTION.cy, atol=1e-6)
    assert got.planar


def test_coarse_init_static_point():
    motion = MotionCoefficients(cx=[7200.0], cy=[3100.0])
    params = RadarParams(3e8, 3e8, 0.01, 5)
    ranges = true_receiver_ranges(GEOM, motion, params)
    got = coarse_init(GEOM, params, ranges, order=0, planar=True)
    assert got.cx[0] == pytest.approx(7200.0, abs=1e-6)
    assert got.cy[0] == pytest.approx(3100.0, abs=1e-6)


def test_coarse_init_error_shrinks_with_more_snapshots():
    rng = np.random.default_rng(33)
    sigma_r = 5.0

    def rms_x0_error(k_count, n_draws=30):
        params = RadarParams(3e8, 3e8, 0.01, k_count)
        ranges = true_receiver_ranges(GEOM, MOTION, params)
        errs = []
        for _ in range(n_draws):
            noisy = ranges + rng.normal(scale=sigma_r, size=ranges.shape)
            got = coarse_init(GEOM, params, noisy, order=2, planar=True,
                              range_noise=sigma_r)
            errs.append(got.cx[0] - MOTION.cx[0])
        return float(np.sqrt(np.mean(np.square(errs))))

    assert rms_x0_error(80) < rms_x0_error(20) / 1.4


def test_coarse_init_validates_inputs():
    ranges = true_receiver_ranges(GEOM, MOTION, PARAMS)
    with pytest.raises(ValueError):
        coarse_init(GEOM, PARAMS, ranges[:, :-1], order=2, planar=True)
    short = RadarParams(3e8, 3e8, 0.01, 2)
    with pytest.raises(ValueError, match="snapshots"):
        coarse_init(GEOM, short, ranges[:2], order=2, planar=True)


# ---------------------------------------------------------------------------
# two-stage estimation
# ---------------------------------------------------------------------------

def test_estimate_recovers_truth_on_noiseless_data():
    ctx = noiseless_ctx()
    cfg = OptimizerConfig(population_size=48, n_generations=80, seed=5)
    result = estimate(ctx, truth_box(), cfg)
    np.testing.assert_allclose(result.motion.to_vector(), TRUTH, atol=1e-3)
    # gains come back too, through the closed form
    np.testing.assert_allclose(result.gains, B, rtol=1e-3)
    assert result.objective == pytest.approx(
        PARAMS.snapshot_count**2 * np.sum(np.abs(B) ** 2), rel=1e-6)


def test_estimate_degenerate_box_returns_center():
    ctx = noiseless_ctx()
    eps = 1e-9
    box = SearchBox.centered(TRUTH, np.full(6, eps))
    cfg = OptimizerConfig(population_size=8, n_generations=2, seed=0)
    result = estimate(ctx, box, cfg)
    np.testing.assert_allclose(result.motion.to_vector(), TRUTH, atol=2 * eps)


def test_estimate_is_deterministic():
    ctx = noiseless_ctx()
    cfg = OptimizerConfig(population_size=16, n_generations=10, seed=123)
    one = estimate(ctx, truth_box(), cfg)
    two = estimate(ctx, truth_box(), cfg)
    assert one.motion.to_vector().tobytes() == two.motion.to_vector().tobytes()
    assert one.objective == two.objective
    assert one.diagnostics == two.diagnostics


def test_estimate_refinement_never_worse_and_in_box():
    b = draw_reflection_vector(GEOM.n_paths, seed=9)
    snaps = synthesize(GEOM, MOTION, PARAMS, b, noise_variance=2.0, seed=4)
    ctx = ConcentratedObjective(GEOM, PARAMS, MOTION.order, snaps, planar=True)
    box = truth_box((30.0, 0.5, 0.5, 120.0, 2.0, 2.0))
    cfg = OptimizerConfig(population_size=24, n_generations=20, seed=7)
    result = estimate(ctx, box, cfg)
    assert result.diagnostics["refined_objective"] >= result.diagnostics["global_objective"]
    assert box.contains(result.motion.to_vector())
    assert result.objective == pytest.approx(
        ctx.positive_ll(result.motion.to_vector()), rel=1e-12)


def test_estimate_rejects_mismatched_box():
    ctx = noiseless_ctx()
    with pytest.raises(ValueError):
        estimate(ctx, SearchBox(lower=np.zeros(4), upper=np.ones(4)),
                 OptimizerConfig(population_size=8, n_generations=1))


# ---------------------------------------------------------------------------
# objective grid
# ---------------------------------------------------------------------------

def test_grid_peaks_at_truth_noiseless():
    ctx = noiseless_ctx()
    v1 = TRUTH[1] + np.linspace(-0.6, 0.6, 7)  # x velocity, truth on-grid
    v2 = TRUTH[2] + np.linspace(-0.9, 0.9, 7)  # x acceleration
    grid = objective_grid(ctx, TRUTH, 1, v1, 2, v2)
    assert grid.shape == (7, 7)
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    assert i == 3 and j == 3


def test_grid_constant_without_carrier():
    params = RadarParams(1e-30, 3e8, 0.01, 50)
    b = draw_reflection_vector(GEOM.n_paths, seed=2)
    snaps = synthesize(GEOM, MOTION, params, b, noise_variance=0.3, seed=6)
    ctx = ConcentratedObjective(GEOM, params, MOTION.order, snaps, planar=True)
    grid = objective_grid(ctx, TRUTH, 0, np.linspace(9000, 10000, 3),
                          3, np.linspace(-500, 500, 3))
    assert np.ptp(grid) <= 1e-9 * np.max(grid)


def test_grid_validates_axes():
    ctx = noiseless_ctx()
    with pytest.raises(ValueError):
        objective_grid(ctx, TRUTH, 1, [0.0, 1.0], 1, [0.0, 1.0])
    with pytest.raises(ValueError):
        objective_grid(ctx, TRUTH, 0, [0.0], 1, [0.0, 1.0])


# ---------------------------------------------------------------------------
# sklearn front end
# ---------------------------------------------------------------------------

def test_motion_estimator_sklearn_contract():
    est = MotionEstimator(geometry=GEOM, radar=PARAMS, order=2, planar=True)
    params = est.get_params()
    assert params["order"] == 2 and params["planar"] is True
    est.set_params(seed=99, population_size=32)
    assert est.seed == 99 and est.population_size == 32


def test_motion_estimator_fit_predict_score():
    snaps = synthesize(GEOM, MOTION, PARAMS, B, noise_variance=0.0, seed=0)
    box = truth_box()
    est = MotionEstimator(geometry=GEOM, radar=PARAMS, order=2, planar=True,
                          box_lower=box.lower, box_upper=box.upper,
                          population_size=48, n_generations=80, seed=5)
    est.fit(snaps.data)
    np.testing.assert_allclose(est.motion_.to_vector(), TRUTH, atol=1e-3)
    pos0 = est.predict(0)
    np.testing.assert_allclose(pos0[0, :2], [9800.0, 0.0], atol=1e-3)
    assert est.score(snaps.data) == pytest.approx(est.objective_, rel=1e-12)
    assert est.n_features_in_ == GEOM.n_paths


def test_motion_estimator_guards():
    est = MotionEstimator(geometry=GEOM, radar=PARAMS)
    with pytest.raises(ValueError, match="box"):
        est.fit(np.zeros((50, 15), dtype=complex))
    with pytest.raises(ValueError, match="not fitted"):
        MotionEstimator(geometry=GEOM, radar=PARAMS).predict(0)
    with pytest.raises(ValueError, match="required"):
        MotionEstimator(box_lower=np.zeros(6), box_upper=np.ones(6)).fit(
            np.zeros((5, 4), dtype=complex))
