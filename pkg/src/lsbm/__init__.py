"""Instance-adaptive clustering for the labeled stochastic block model."""

from .divergence import (DivergenceResult, chernoff_profile, d_lplus, divergence, i_star, kl,
                         predicted_misclassified, recovery_condition)
from .gen import GenOptions, generate, sample_assignment, sample_graph
from .harness import ExperimentConfig, builtin_model, run_experiment
from .iac import IacOptions, estimate_label_probs, likelihood_scores, refine_once, run_iac
from .metrics import confusion, misclassified, summarize
from .model import LabeledGraph, LsbmParams, assumption_report, validate_params

__version__ = "0.1.0"

__all__ = [
    "DivergenceResult", "chernoff_profile", "d_lplus", "divergence", "i_star", "kl",
    "predicted_misclassified", "recovery_condition",
    "GenOptions", "generate", "sample_assignment", "sample_graph",
    "ExperimentConfig", "builtin_model", "run_experiment",
    "IacOptions", "estimate_label_probs", "likelihood_scores", "refine_once", "run_iac",
    "confusion", "misclassified", "summarize",
    "LabeledGraph", "LsbmParams", "assumption_report", "validate_params",
]
