"""Simulator and variational optimizer for Bell-inequality violation in noisy
n-local quantum networks, with closed-form maxima for independent verification."""

from .ansatz import hardware_ansatz, make_ansatz
from .behavior import behavior_matrix, correlators, sample_shots, simulate_probs
from .bell import chain_score, chsh_score, cost, parse_inequality, star_score
from .channels import build_noise_model
from .network import build_chain, build_star
from .optimize import OptimizerConfig, gradient_descent, scan

__version__ = "0.1.0"

__all__ = [
    "OptimizerConfig",
    "behavior_matrix",
    "build_chain",
    "build_noise_model",
    "build_star",
    "chain_score",
    "chsh_score",
    "correlators",
    "cost",
    "gradient_descent",
    "hardware_ansatz",
    "make_ansatz",
    "parse_inequality",
    "sample_shots",
    "scan",
    "simulate_probs",
    "star_score",
    "__version__",
]
