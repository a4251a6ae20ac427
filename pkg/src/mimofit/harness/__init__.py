"""Experiment harness: scenario files, Monte-Carlo campaigns and the CLI."""

from .scenario import (
    Scenario,
    ScenarioError,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    preset_names,
)
from .campaign import (
    CampaignError,
    CampaignSpec,
    ContourGrid,
    RmseRow,
    RmseTable,
    check_doppler_cit,
    emit_contour,
    emit_rmse_csv,
    make_contour,
    run_campaign,
    simulate_range_estimates,
)

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "preset_names",
    "CampaignError",
    "CampaignSpec",
    "ContourGrid",
    "RmseRow",
    "RmseTable",
    "check_doppler_cit",
    "emit_contour",
    "emit_rmse_csv",
    "make_contour",
    "run_campaign",
    "simulate_range_estimates",
]
