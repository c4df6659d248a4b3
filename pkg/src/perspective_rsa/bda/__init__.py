"""Bayesian analysis of production and rating data."""
from .bootstrap import BootstrapError, BootstrapResult, multistage_bootstrap
from .data import (
    CONDITIONS,
    DataError,
    RatingRecord,
    TrialRecord,
    read_ratings,
    read_trials,
    write_ratings,
    write_trials,
)
from .model import ModelSpec, Theta, build_tables, expected_features, log_likelihood, trial_likelihood
from .predictive import CellPrediction, posterior_predictive_features
from .sampling import (
    EvidenceResult,
    PosteriorSamples,
    find_start,
    hdi,
    marginal_likelihood_ais,
    posterior_hdis,
    run_mcmc,
)
from .synthetic import generate_ratings, generate_trials

__all__ = [
    "BootstrapError", "BootstrapResult", "multistage_bootstrap",
    "CONDITIONS", "DataError", "RatingRecord", "TrialRecord",
    "read_ratings", "read_trials", "write_ratings", "write_trials",
    "ModelSpec", "Theta", "build_tables", "expected_features", "log_likelihood", "trial_likelihood",
    "CellPrediction", "posterior_predictive_features",
    "EvidenceResult", "PosteriorSamples", "find_start", "hdi", "marginal_likelihood_ais",
    "posterior_hdis", "run_mcmc",
    "generate_ratings", "generate_trials",
]
