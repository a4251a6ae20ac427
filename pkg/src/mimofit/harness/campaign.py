"""Monte-Carlo RMSE-vs-SNR campaigns, bound overlays and surface exports.

A campaign sweeps a scenario over an SNR grid, runs independent
synthesize/estimate trials at every point, and reports per-parameter RMSE
next to the corresponding lower-bound standard deviation.  Everything is
seeded: the per-trial streams are derived from (base seed, SNR index,
trial index), so a rerun with the same config produces byte-identical
output files.

An SNR of ``inf`` in the grid means noiseless data (the bound column is
then zero and the truth-centered bound-scaled box is undefined, so the
init-centered box policy is required).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from ..crb import compute_crb
from ..estimator import OptimizerConfig, SearchBox, coarse_init, estimate, objective_grid
from ..likelihood import ConcentratedObjective
from ..scene import eval_position, instantaneous_doppler
from ..signal import draw_reflection_vector, noise_variance_for_snr, synthesize
from .scenario import Scenario

__all__ = [
    "CampaignError",
    "CampaignSpec",
    "RmseRow",
    "RmseTable",
    "ContourGrid",
    "run_campaign",
    "emit_rmse_csv",
    "make_contour",
    "emit_contour",
    "check_doppler_cit",
    "simulate_range_estimates",
]

LOCATION_ROW = "location"

# tolerated fraction of failed trials per SNR point
_MAX_EXCLUDED_FRACTION = 0.05


class CampaignError(RuntimeError):
    """A campaign could not produce a trustworthy table."""


@dataclass(frozen=True)
class CampaignSpec:
    """What to sweep and how hard to try.

    Parameters
    ----------
    snr_grid_db : sequence of float
        SNR points in dB; ``inf`` entries mean noiseless trials.
    n_trials : int
        Independent trials per SNR point.
    optimizer : OptimizerConfig
        Search budget shared by all trials (per-trial seeds are injected).
    box_policy : {"crb", "init"}
        "crb": truth-centered box with halfwidths ``box_scale`` times the
        bound standard deviation, recomputed once per SNR point.  "init":
        per-trial box centered on a coarse range-based fix with explicit
        ``box_halfwidths``.
    box_scale : float
        Halfwidth in bound-standard-deviation units for the "crb" policy.
    box_halfwidths : sequence of float, optional
        Per-parameter halfwidths for the "init" policy.
    range_noise : float
        Std (m) of the simulated per-receiver range tracks feeding the
        coarse fix under the "init" policy.
    base_seed : int
        Root of every random stream in the campaign.
    n_jobs : int
        Parallel trial workers (joblib); 1 keeps everything in-process.
    """

    snr_grid_db: tuple = ()
    n_trials: int = 1
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    box_policy: str = "crb"
    box_scale: float = 10.0
    box_halfwidths: tuple = None
    range_noise: float = 0.0
    base_seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        grid = tuple(float(s) for s in np.atleast_1d(self.snr_grid_db))
        if not grid:
            raise ValueError("snr_grid_db must be non-empty")
        if any(math.isnan(s) or s == -math.inf for s in grid):
            raise ValueError("snr_grid_db entries must be finite or +inf")
        object.__setattr__(self, "snr_grid_db", grid)
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ValueError("n_trials must be a positive integer")
        object.__setattr__(self, "n_trials", int(self.n_trials))
        if self.box_policy not in ("crb", "init"):
            raise ValueError('box_policy must be "crb" or "init"')
        if not self.box_scale > 0:
            raise ValueError("box_scale must be > 0")
        if self.box_halfwidths is not None:
            hw = tuple(float(h) for h in np.atleast_1d(self.box_halfwidths))
            if any(not h >= 0 for h in hw):
                raise ValueError("box_halfwidths must be non-negative")
            object.__setattr__(self, "box_halfwidths", hw)
        elif self.box_policy == "init":
            raise ValueError('box_policy "init" requires box_halfwidths')
        if not self.range_noise >= 0:
            raise ValueError("range_noise must be >= 0")


@dataclass(frozen=True)
class RmseRow:
    snr_db: float
    parameter: str
    rmse: float
    crb_std: float
    trials: int

    def __post_init__(self):
        if not self.rmse >= 0 or not self.crb_std >= 0:
            raise ValueError("rmse and crb_std must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class RmseTable:
    """One row per (SNR point, parameter), plus per-point exclusion counts."""

    rows: tuple
    excluded: tuple = ()  # (snr_db, count) per SNR point

    def __post_init__(self):
        rows = tuple(self.rows)
        keys = [(r.snr_db, r.parameter) for r in rows]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (snr, parameter) row")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "excluded", tuple(self.excluded))

    def parameters(self) -> list:
        seen = dict.fromkeys(r.parameter for r in self.rows)
        return list(seen)

    def row(self, snr_db: float, parameter: str) -> RmseRow:
        for r in self.rows:
            if r.snr_db == snr_db and r.parameter == parameter:
                return r
        raise KeyError(f"no row for ({snr_db}, {parameter!r})")


def simulate_range_estimates(geometry, motion, params, noise_std: float = 0.0,
                             seed: int = 0) -> np.ndarray:
    """Per-snapshot target-to-receiver range tracks, optionally noisy.

    Returns
    -------
    ndarray, shape (K, N)
        True ranges plus i.i.d. Gaussian errors of std ``noise_std`` meters.
    """
    if not noise_std >= 0:
        raise ValueError("noise_std must be >= 0")
    pos = eval_position(motion, params, np.arange(params.snapshot_count))
    ranges = np.linalg.norm(pos[:, None, :] - geometry.receivers[None, :, :], axis=-1)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        ranges = ranges + rng.normal(0.0, noise_std, ranges.shape)
    return ranges


def _trial_seeds(base_seed: int, snr_index: int, trial_index: int) -> tuple:
    """Independent (noise, optimizer, range) seeds for one trial."""
    ss = np.random.SeedSequence([base_seed, snr_index, trial_index])
    state = ss.generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def _run_trial(scenario: Scenario, b, sigma2: float, box, spec: CampaignSpec,
               trial_index: int, seeds: tuple):
    """One synthesize/estimate trial; returns (index, error-vector or None, message)."""
    noise_seed, opt_seed, range_seed = seeds
    geometry, motion, radar = scenario.geometry, scenario.motion, scenario.radar
    try:
        snaps = synthesize(geometry, motion, radar, b, sigma2, noise_seed)
        ctx = ConcentratedObjective(geometry, radar, motion.order, snaps,
                                    planar=motion.planar)
        if box is None:  # init-centered policy: one box per trial
            ranges = simulate_range_estimates(geometry, motion, radar,
                                              noise_std=spec.range_noise,
                                              seed=range_seed)
            coarse = coarse_init(geometry, radar, ranges, motion.order,
                                 planar=motion.planar,
                                 range_noise=spec.range_noise)
            box = SearchBox.centered(coarse.to_vector(),
                                     np.asarray(spec.box_halfwidths, dtype=float))
        cfg = replace(spec.optimizer, seed=opt_seed)
        est = estimate(ctx, box, cfg)
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        return trial_index, None, f"{type(exc).__name__}: {exc}"
    return trial_index, est.motion.to_vector() - motion.to_vector(), None


def _location_indices(motion) -> np.ndarray:
    """Free-vector positions of the order-0 coefficient of each axis."""
    n_axes = 2 if motion.planar else 3
    return np.arange(n_axes) * (motion.order + 1)


def run_campaign(scenario: Scenario, spec: CampaignSpec) -> RmseTable:
    """Sweep the SNR grid and tabulate RMSE next to the bound.

    For every grid point the noise variance realizing that per-sample SNR
    is derived from the scenario's frozen path gains, ``spec.n_trials``
    independent trials run with pre-assigned seeds, and per-parameter RMSE
    is taken against the scenario truth.  A Euclidean location row
    aggregates the order-0 coefficients.  Trials whose optimizer fails are
    excluded and counted.

    Raises
    ------
    CampaignError
        If any SNR point loses more than 5% of its trials.
    """
    geometry, motion, radar = scenario.geometry, scenario.motion, scenario.radar
    b = draw_reflection_vector(geometry.n_paths, scenario.reflection_seed)
    truth = motion.to_vector()
    names = motion.parameter_names()
    loc = _location_indices(motion)
    if spec.box_halfwidths is not None and len(spec.box_halfwidths) != truth.size:
        raise ValueError(f"box_halfwidths must have length {truth.size}, "
                         f"got {len(spec.box_halfwidths)}")

    rows, excluded = [], []
    for i, snr in enumerate(spec.snr_grid_db):
        if math.isinf(snr):
            sigma2 = 0.0
            psi_std = np.zeros(truth.size)
            loc_std = 0.0
        else:
            sigma2 = noise_variance_for_snr(radar, b, snr)
            bound = compute_crb(geometry, motion, radar, b, sigma2)
            psi_std = bound.psi_std
            loc_std = float(np.sqrt(np.sum(np.diag(bound.psi_covariance)[loc])))

        if spec.box_policy == "crb":
            if sigma2 == 0.0:
                raise CampaignError(
                    "the bound-scaled box is undefined for noiseless points; "
                    'use box_policy="init"')
            box = SearchBox.centered(truth, spec.box_scale * psi_std)
        else:
            box = None  # built per trial around the coarse fix

        tasks = (delayed(_run_trial)(scenario, b, sigma2, box, spec, j,
                                     _trial_seeds(spec.base_seed, i, j))
                 for j in range(spec.n_trials))
        results = sorted(Parallel(n_jobs=spec.n_jobs)(tasks), key=lambda r: r[0])
        errors = np.array([e for _, e, _ in results if e is not None])
        n_lost = spec.n_trials - len(errors)
        excluded.append((snr, n_lost))
        if n_lost > _MAX_EXCLUDED_FRACTION * spec.n_trials:
            messages = [m for _, e, m in results if e is None][:3]
            raise CampaignError(
                f"{n_lost}/{spec.n_trials} trials excluded at {snr} dB "
                f"(>{_MAX_EXCLUDED_FRACTION:.0%}); first failures: {messages}")

        rmse = np.sqrt(np.mean(errors**2, axis=0))
        loc_rmse = float(np.sqrt(np.mean(np.sum(errors[:, loc] ** 2, axis=1))))
        n_ok = len(errors)
        rows.extend(RmseRow(snr, name, float(rmse[p]), float(psi_std[p]), n_ok)
                    for p, name in enumerate(names))
        rows.append(RmseRow(snr, LOCATION_ROW, loc_rmse, loc_std, n_ok))
    return RmseTable(rows=tuple(rows), excluded=tuple(excluded))


def emit_rmse_csv(table: RmseTable, path) -> None:
    """Write the table as CSV; identical tables give identical bytes."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "parameter", "rmse", "crb_std", "trials"])
        for r in table.rows:
            writer.writerow([repr(float(r.snr_db)), r.parameter,
                             repr(float(r.rmse)), repr(float(r.crb_std)),
                             r.trials])


# ---------------------------------------------------------------------------
# objective surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourGrid:
    """Objective surface over two motion parameters, first axis = rows."""

    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    values: np.ndarray  # shape (len(axis1_values), len(axis2_values))

    def __post_init__(self):
        a1 = np.asarray(self.axis1_values, dtype=float)
        a2 = np.asarray(self.axis2_values, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (a1.size, a2.size):
            raise ValueError(f"values shape {v.shape} does not match axes "
                             f"({a1.size}, {a2.size})")
        if v.size == 0:
            raise ValueError("empty grid")
        object.__setattr__(self, "axis1_values", a1)
        object.__setattr__(self, "axis2_values", a2)
        object.__setattr__(self, "values", v)

    def peak(self) -> tuple:
        """(axis1 value, axis2 value) of the largest objective."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.axis1_values[i]), float(self.axis2_values[j])


def _axis_index(names: list, axis) -> int:
    if isinstance(axis, str):
        if axis not in names:
            raise ValueError(f"unknown parameter {axis!r}; choose from {names}")
        return names.index(axis)
    axis = int(axis)
    if not 0 <= axis < len(names):
        raise ValueError(f"axis index {axis} out of range for {len(names)} parameters")
    return axis


def make_contour(scenario: Scenario, snr: float, axis1, axis1_values,
                 axis2, axis2_values, seed: int = 0) -> ContourGrid:
    """Concentrated-objective surface around the truth on one noisy draw.

    ``axis1``/``axis2`` are parameter names (e.g. "x1") or free-vector
    indices; all other coordinates stay pinned at the scenario truth.
    """
    geometry, motion, radar = scenario.geometry, scenario.motion, scenario.radar
    names = motion.parameter_names()
    i1, i2 = _axis_index(names, axis1), _axis_index(names, axis2)
    b = draw_reflection_vector(geometry.n_paths, scenario.reflection_seed)
    sigma2 = 0.0 if math.isinf(snr) else noise_variance_for_snr(radar, b, snr)
    snaps = synthesize(geometry, motion, radar, b, sigma2, seed)
    ctx = ConcentratedObjective(geometry, radar, motion.order, snaps,
                                planar=motion.planar)
    values = objective_grid(ctx, motion.to_vector(), i1, axis1_values, i2, axis2_values)
    return ContourGrid(axis1_name=names[i1], axis1_values=axis1_values,
                       axis2_name=names[i2], axis2_values=axis2_values,
                       values=values)


def emit_contour(grid: ContourGrid, path) -> None:
    """Write axis header lines followed by the row-major value grid.

    Line 1: ``axis1,<name>,<v1>,<v2>,...``; line 2 the same for axis 2;
    each following line is one axis-1 row of objective values.
    """
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis1", grid.axis1_name]
                        + [repr(float(v)) for v in grid.axis1_values])
        writer.writerow(["axis2", grid.axis2_name]
                        + [repr(float(v)) for v in grid.axis2_values])
        for row in grid.values:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# pulse-schedule sanity
# ---------------------------------------------------------------------------

def check_doppler_cit(scenario: Scenario) -> float:
    """Largest Doppler drift across any one integration interval, in Hz.

    For every path and every interval, compares the instantaneous Doppler
    shift at the first and at the last pulse of the interval and returns
    the maximum absolute difference.  Small values justify treating the
    Doppler as constant while the pulses of an interval are combined.
    """
    geometry, motion, radar = scenario.geometry, scenario.motion, scenario.radar
    if scenario.pulses_per_interval < 2:
        return 0.0
    # last-pulse offset within an interval, in snapshot-index units
    frac = ((scenario.pulses_per_interval - 1) * scenario.pulse_repetition_time
            / radar.snapshot_interval)
    worst = 0.0
    for k in range(radar.snapshot_count):
        for m in range(geometry.n_tx):
            for n in range(geometry.n_rx):
                first = instantaneous_doppler(geometry, motion, radar, m, n, k)
                last = instantaneous_doppler(geometry, motion, radar, m, n, k + frac)
                worst = max(worst, abs(last - first))
    return worst
