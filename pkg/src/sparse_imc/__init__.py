"""Sparsity-penalized maximum-likelihood inductive matrix completion."""

__version__ = "0.1.0"

from .bounds import BoundReport, beta_gaussian, bound_report, corollary1_rhs, lambda_min, theorem1_rhs
from .discretization import DiscretizationScheme, enumerate_class, kraft_sum, levels, penalty, quantize_factor
from .estimator import EstimatorConfig, FitResult, alt_min_solve, masked_gaussian_gradients, objective, oracle_solve
from .model import ImcModel, assemble, per_element_sq_error, validate_bounds
from .noise import GaussianNoise, NoiseModel, matrix_kl
from .sampling import ObservationSet, derive_seed, draw_mask, observe
