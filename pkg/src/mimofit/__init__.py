"""Desk-scale simulator and estimator for multistatic radar motion fitting.

The package models a widely separated MIMO radar observing one moving
target, synthesizes phase-only snapshot data with unknown per-path complex
gains, and recovers the target's polynomial motion coefficients by
concentrated maximum likelihood.  Exact Cramer-Rao bounds for the same
model come from the analytic Fisher information matrix.
"""

from .scene import (
    AntennaGeometry,
    MotionCoefficients,
    RadarParams,
    eval_position,
    instantaneous_doppler,
    path_delay,
    polynomial_basis,
)
from .signal import (
    SnapshotSet,
    SteeringMatrix,
    delay_matrix,
    draw_reflection_vector,
    load_snapshots,
    noise_variance_for_snr,
    save_snapshots,
    snr_db,
    steering_matrix,
    steering_phases,
    synthesize,
)
from .likelihood import ConcentratedObjective
from .crb import CrbResult, FimBlocks, compute_crb, crb_psi, fim, write_crb_csv, z_matrices
from .estimator import (
    Estimate,
    MotionEstimator,
    OptimizerConfig,
    SearchBox,
    coarse_init,
    estimate,
    multilaterate,
    objective_grid,
)
from .harness import (
    CampaignSpec,
    ContourGrid,
    RmseTable,
    Scenario,
    ScenarioError,
    check_doppler_cit,
    emit_contour,
    emit_rmse_csv,
    load_scenario,
    make_contour,
    run_campaign,
    save_scenario,
    simulate_range_estimates,
)

__version__ = "0.1.0"

__all__ = [
    "AntennaGeometry",
    "MotionCoefficients",
    "RadarParams",
    "eval_position",
    "instantaneous_doppler",
    "path_delay",
    "polynomial_basis",
    "SnapshotSet",
    "SteeringMatrix",
    "delay_matrix",
    "draw_reflection_vector",
    "load_snapshots",
    "noise_variance_for_snr",
    "save_snapshots",
    "snr_db",
    "steering_matrix",
    "steering_phases",
    "synthesize",
    "ConcentratedObjective",
    "CrbResult",
    "FimBlocks",
    "compute_crb",
    "crb_psi",
    "fim",
    "write_crb_csv",
    "z_matrices",
    "Estimate",
    "MotionEstimator",
    "OptimizerConfig",
    "SearchBox",
    "coarse_init",
    "estimate",
    "multilaterate",
    "objective_grid",
    "CampaignSpec",
    "ContourGrid",
    "RmseTable",
    "Scenario",
    "ScenarioError",
    "check_doppler_cit",
    "emit_contour",
    "emit_rmse_csv",
    "load_scenario",
    "make_contour",
    "run_campaign",
    "save_scenario",
    "simulate_range_estimates",
    "__version__",
]
