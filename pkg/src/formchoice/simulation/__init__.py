"""Synthetic-respondent laboratory: ground-truth preference models and
head-to-head benchmarks of questioning strategies."""

from .experiments import (
    HitRateReport,
    HoldoutSet,
    SimSettings,
    VARIANTS,
    lhs_design,
    make_holdouts,
    robustness_sweep,
    run_battery,
    run_experiment,
    summarize_battery,
)
from .truth import (
    LEVEL_PATTERN,
    Scenario,
    TrueRespondent,
    calibrate_delta_variance,
    calibrate_lambda,
    gen_population,
    gen_respondent,
    linear_sanity_scenario,
    make_scenario,
    scenario_grid,
    shape_curve,
    simulate_form_answer,
    simulate_purchase_answer,
    simulate_response,
)

__all__ = [
    "HitRateReport",
    "HoldoutSet",
    "LEVEL_PATTERN",
    "Scenario",
    "SimSettings",
    "TrueRespondent",
    "VARIANTS",
    "calibrate_delta_variance",
    "calibrate_lambda",
    "gen_population",
    "gen_respondent",
    "lhs_design",
    "linear_sanity_scenario",
    "make_holdouts",
    "make_scenario",
    "robustness_sweep",
    "run_battery",
    "run_experiment",
    "scenario_grid",
    "shape_curve",
    "simulate_form_answer",
    "simulate_purchase_answer",
    "simulate_response",
    "summarize_battery",
]
