"""Per-entry likelihoods, KL divergence and Hellinger affinity.

Only the Gaussian model ships. Other families plug in by subclassing
:class:`NoiseModel` and supplying closed forms for the divergences together
with a constant that dominates the KL divergence over the candidate box.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .model import DimensionError


class NoiseModel(abc.ABC):
    """Scalar observation model ``p_x(y)`` parameterized by a matrix entry ``x``.

    All methods broadcast over numpy arrays.
    """

    kind: str = "abstract"

    @abc.abstractmethod
    def log_pdf(self, x, y):
        """Natural-log density of observing ``y`` given parameter ``x``."""

    @abc.abstractmethod
    def sample(self, x, rng: np.random.Generator):
        """Draw one observation per entry of ``x``."""

    @abc.abstractmethod
    def kl(self, x_true, x_cand):
        """``D(p_{x_true} || p_{x_cand})``."""

    @abc.abstractmethod
    def neg2_log_affinity(self, x_cand, x_true):
        """``-2 log A(p_{x_cand}, p_{x_true})``; symmetric in its arguments."""

    @abc.abstractmethod
    def d_constant(self, x_max: float) -> float:
        """Upper bound on the per-entry KL for parameters in ``[-x_max, x_max]``."""

    def to_dict(self) -> dict:
        raise NotImplementedError


def gaussian_log_pdf(x, y, sigma2):
    d = np.asarray(y, dtype=np.float64) - x
    return -0.5 * math.log(2 * math.pi * sigma2) - d * d / (2 * sigma2)


def gaussian_kl(x_true, x_cand, sigma2):
    d = np.asarray(x_true, dtype=np.float64) - x_cand
    return d * d / (2 * sigma2)


def gaussian_neg2_log_affinity(x_cand, x_true, sigma2):
    d = np.asarray(x_true, dtype=np.float64) - x_cand
    return d * d / (4 * sigma2)


def d_constant_gaussian(x_max: float, sigma2: float) -> float:
    # worst case over the box: (2 x_max)^2 / (2 sigma^2)
    return 2.0 * x_max**2 / sigma2


@dataclass(frozen=True)
class GaussianNoise(NoiseModel):
    """Additive Gaussian noise with known variance ``sigma2``."""

    sigma2: float
    kind = "gaussian"

    def __post_init__(self):
        s = float(self.sigma2)
        if not (np.isfinite(s) and s > 0):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        object.__setattr__(self, "sigma2", s)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def log_pdf(self, x, y):
        return gaussian_log_pdf(x, y, self.sigma2)

    def sample(self, x, rng):
        x = np.asarray(x, dtype=np.float64)
        return x + self.sigma * rng.standard_normal(x.shape)

    def kl(self, x_true, x_cand):
        return gaussian_kl(x_true, x_cand, self.sigma2)

    def neg2_log_affinity(self, x_cand, x_true):
        return gaussian_neg2_log_affinity(x_cand, x_true, self.sigma2)

    def d_constant(self, x_max):
        return d_constant_gaussian(x_max, self.sigma2)

    def to_dict(self):
        return {"kind": "gaussian", "sigma2": self.sigma2}


def matrix_kl(x_true, x_cand, noise: NoiseModel) -> float:
    """Sum of per-entry KL divergences over all entries."""
    x_true = np.asarray(x_true, dtype=np.float64)
    x_cand = np.asarray(x_cand, dtype=np.float64)
    if x_true.shape != x_cand.shape:
        raise DimensionError(f"shape mismatch: {x_true.shape} vs {x_cand.shape}")
    return float(np.sum(noise.kl(x_true, x_cand)))


def matrix_neg2_log_affinity(x_cand, x_true, noise: NoiseModel) -> float:
    """``-2 log`` of the product of per-entry affinities."""
    x_true = np.asarray(x_true, dtype=np.float64)
    x_cand = np.asarray(x_cand, dtype=np.float64)
    if x_true.shape != x_cand.shape:
        raise DimensionError(f"shape mismatch: {x_true.shape} vs {x_cand.shape}")
    return float(np.sum(noise.neg2_log_affinity(x_cand, x_true)))


def noise_from_dict(d: dict) -> NoiseModel:
    kind = d.get("kind")
    if kind == "gaussian":
        return GaussianNoise(d["sigma2"])
    raise ValueError(f"unsupported noise kind {kind!r}")
