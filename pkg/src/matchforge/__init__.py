"""Balancing-score matching for ATT estimation, with a Monte Carlo harness."""

from .core import Encoder, GroundTruth, MatchedPairs, Sample
from .encoders import (
    build_encoder,
    identity_encoder,
    mahalanobis_encoder,
    odm_encoder,
    pair_distance,
    propensity_encoder,
)
from .estimators import (
    bootstrap_interval,
    diff_means_estimate,
    enumerate_specifications,
    exact_match_estimate,
    model_dependence,
    plugin_estimate,
    regression_estimate,
    simple_regression_estimate,
)
from .matcher import apply_caliper, brute_force_match, exact_one_to_one_match, greedy_match, prune_worst
from .runner import run_confounding_experiment, run_pruning_sweep
from .scenarios import (
    ScenarioSpec,
    builtin_scenario,
    common_support_fraction,
    gen_confounding_binary,
    gen_hainmueller,
    gen_king_nielson,
    memo_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Encoder",
    "GroundTruth",
    "MatchedPairs",
    "Sample",
    "ScenarioSpec",
    "apply_caliper",
    "bootstrap_interval",
    "brute_force_match",
    "build_encoder",
    "builtin_scenario",
    "common_support_fraction",
    "diff_means_estimate",
    "enumerate_specifications",
    "exact_match_estimate",
    "exact_one_to_one_match",
    "gen_confounding_binary",
    "gen_hainmueller",
    "gen_king_nielson",
    "greedy_match",
    "identity_encoder",
    "mahalanobis_encoder",
    "memo_scenario",
    "model_dependence",
    "odm_encoder",
    "pair_distance",
    "plugin_estimate",
    "propensity_encoder",
    "prune_worst",
    "regression_estimate",
    "run_confounding_experiment",
    "run_pruning_sweep",
    "simple_regression_estimate",
]
