"""Closed-form error bounds for the sparsity-penalized estimator.

All logarithms are natural. Per-element bounds take the candidate's KL
divergence and sparsity as inputs; minimizing over candidates is the
caller's job.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .discretization import levels
from .noise import d_constant_gaussian


def beta_gaussian(m, n1, n2, r, r1, r2, a_max, b_max, q_max, x_max) -> float:
    """Exponent controlling the number of quantization levels under Gaussian noise."""
    arg = 6 * math.sqrt(m) * (r * r1 * r2) * a_max * b_max * q_max / x_max
    return max(1.0, 1.0 + math.log(arg) / math.log(max(n1, n2)))


def lambda_min(d_const, beta, r_dim, n1, n2) -> float:
    """Smallest admissible sparsity weight for a factor with inner size ``r_dim``."""
    return 2 * (1 + 2 * d_const / 3) * (4 * math.log(r_dim) + beta * math.log(max(n1, n2)))


def theorem1_rhs(d_const, lambda_p, lambda_q, beta, n1, n2, m, kl_at_candidate, p0, q0) -> float:
    """Per-element bound on ``E[-2 log A(p_Xhat, p_X*)] / (n1 n2)`` at one candidate."""
    n = max(n1, n2)
    complexity = (lambda_p + lambda_q) + 4 * d_const * (beta + 4) * math.log(n) / 3
    return 8 * d_const * math.log(m) / m + 3 * (kl_at_candidate / (n1 * n2) + complexity * (p0 + q0) / m)


def gaussian_mse_rhs(x_max, sigma2, lambda_p, lambda_q, beta, n1, n2, m, sq_err_at_candidate, p0, q0) -> float:
    """Intermediate Gaussian per-element MSE bound at one candidate.

    ``sq_err_at_candidate`` is ``||X* - X||_F^2`` (not normalized).
    """
    n = max(n1, n2)
    complexity = 2 * sigma2 * (lambda_p + lambda_q) + 16 * x_max**2 * (beta + 4) * math.log(n) / 3
    return 64 * x_max**2 * math.log(m) / m + 6 * (sq_err_at_candidate / (n1 * n2) + complexity * (p0 + q0) / m)


def corollary1_rhs(x_max, sigma2, beta, n1, n2, m, p0_star, q0_star) -> float:
    """Constant-explicit per-element squared-error bound for Gaussian noise."""
    n = max(n1, n2)
    return 70 * x_max**2 * math.log(m) / m + 48 * (sigma2 + 2 * x_max**2) * (beta + 4) * math.log(n) * (
        p0_star + q0_star
    ) / m


@dataclass
class BoundReport:
    beta: float
    L_lev: int
    d_const: float
    lambda_p_min: float
    lambda_q_min: float
    theorem1_rhs: float
    corollary1_rhs: float
    inputs: dict

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(n1, n2, r, r1, r2, m, sigma2, x_max, q_max, a_max, b_max, p0, q0) -> BoundReport:
    """Every theoretical quantity for a Gaussian instance.

    ``theorem1_rhs`` is evaluated at the quantized ground truth, using the
    worst-case quantization KL ``n1 n2 x_max^2 / (2 sigma2 m)``.
    """
    beta = beta_gaussian(m, n1, n2, r, r1, r2, a_max, b_max, q_max, x_max)
    d = d_constant_gaussian(x_max, sigma2)
    lp = lambda_min(d, beta, r1, n1, n2)
    lq = lambda_min(d, beta, r2, n1, n2)
    kl_q = n1 * n2 * x_max**2 / (2 * sigma2 * m)
    return BoundReport(
        beta=beta,
        L_lev=levels(n1, n2, beta),
        d_const=d,
        lambda_p_min=lp,
        lambda_q_min=lq,
        theorem1_rhs=theorem1_rhs(d, lp, lq, beta, n1, n2, m, kl_q, p0, q0),
        corollary1_rhs=corollary1_rhs(x_max, sigma2, beta, n1, n2, m, p0, q0),
        inputs=dict(
            n1=n1, n2=n2, r=r, r1=r1, r2=r2, m=m, sigma2=sigma2,
            x_max=x_max, q_max=q_max, a_max=a_max, b_max=b_max, p0=p0, q0=q0,
        ),
    )
