"""Online Newton with Nesterov-accelerated sketch-and-project solves.

Library surface: a small dense linear-algebra kernel, sketching distributions
and their expected projections, acceleration-parameter estimation, the
accelerated solver with its exact transition operators, regression models,
the online Newton driver, the weighted online covariance estimator with
confidence intervals, ground-truth covariance oracles, and an experiment
harness with a CLI (``onsketch``).
"""

__version__ = "0.1.0"

from .accel_params import MuNu, SolverParams, mu_nu_exact_kaczmarz, mu_nu_mc, params_from_mu_nu
from .config import ExperimentConfig, make_config, parse_config
from .inference import ConfidenceInterval, RunningCovariance, confidence_interval, normal_quantile
from .models import DesignSpec, GroundTruth, Sample, default_ground_truth, grad_hess, make_design
from .nasketch import SolveResult, TransitionRecord, expected_K_kaczmarz, solve, transition_K
from .newton import NewtonConfig, StepSchedule, hessian_avg_update, newton_step, run_trajectory
from .oracle import LimitingCovariance, gamma_star, limiting_covariance, p_tau
from .rng import RngStream
from .sketching import SketchSpec, draw_sketch, expected_projection_kaczmarz, projection

__all__ = [
    "ConfidenceInterval",
    "DesignSpec",
    "ExperimentConfig",
    "GroundTruth",
    "LimitingCovariance",
    "MuNu",
    "NewtonConfig",
    "RngStream",
    "RunningCovariance",
    "Sample",
    "SketchSpec",
    "SolveResult",
    "SolverParams",
    "StepSchedule",
    "TransitionRecord",
    "__version__",
    "confidence_interval",
    "default_ground_truth",
    "draw_sketch",
    "expected_K_kaczmarz",
    "expected_projection_kaczmarz",
    "gamma_star",
    "grad_hess",
    "hessian_avg_update",
    "limiting_covariance",
    "make_config",
    "make_design",
    "mu_nu_exact_kaczmarz",
    "mu_nu_mc",
    "newton_step",
    "normal_quantile",
    "p_tau",
    "params_from_mu_nu",
    "parse_config",
    "projection",
    "run_trajectory",
    "solve",
    "transition_K",
]
