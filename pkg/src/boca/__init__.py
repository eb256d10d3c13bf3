"""Bayesian optimisation with continuous-fidelity approximations."""

from .kernels import KernelSpec, information_gap, product_kernel, se_radial
from .gp import GPPosterior, TrainingSet, fit, learn_hyperparameters, log_marginal_likelihood, predict, predict_target
from .policy import BocaState, FidelityDecision, beta_t, candidate_fidelities, gamma_threshold, select_next, ucb, update
from .benchmarks import BenchmarkProblem, get_problem, PROBLEM_IDS
from .harness import ExperimentConfig, RegretCurve, RunRecord, regret_curve, run_experiment

__all__ = [
    "KernelSpec", "information_gap", "product_kernel", "se_radial",
    "GPPosterior", "TrainingSet", "fit", "learn_hyperparameters", "log_marginal_likelihood", "predict", "predict_target",
    "BocaState", "FidelityDecision", "beta_t", "candidate_fidelities", "gamma_threshold", "select_next", "ucb", "update",
    "BenchmarkProblem", "get_problem", "PROBLEM_IDS",
    "ExperimentConfig", "RegretCurve", "RunRecord", "regret_curve", "run_experiment",
]
