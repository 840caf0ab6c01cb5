"""Reproducible draws of sufficient statistics.

Every replicate owns a generator derived from ``(master seed, stream id)``
through ``numpy.random.SeedSequence``, so a replicate's draws never depend
on which worker ran it or in what order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SeedSpec:
    master: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.master <= MAX_SEED:
            raise ValueError(f"master seed must be a 64-bit unsigned integer, got {self.master}")
        if self.stream < 0:
            raise ValueError(f"stream id must be nonnegative, got {self.stream}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.master, self.stream]))


def stream_rng(master: int, stream: int) -> np.random.Generator:
    return SeedSpec(master, stream).rng()


@dataclass(frozen=True)
class UniformMax:
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 1 or not self.x_max > 0:
            raise ValueError(f"invalid uniform maximum {self}")


@dataclass(frozen=True)
class GaussianMean:
    x_bar: float
    n: int
    sigma: float


@dataclass(frozen=True)
class GaussianMeanVar:
    x_bar: float
    s2: float
    n: int

    def __post_init__(self):
        if self.n < 2 or self.s2 < 0:
            raise ValueError(f"invalid mean/variance statistic {self}")


SufficientStat = Union[UniformMax, GaussianMean, GaussianMeanVar]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return seed.rng()


def _check_count(n, minimum=1):
    if int(n) != n or n < minimum:
        raise ValueError(f"sample size must be an integer >= {minimum}, got {n}")


def sample_uniform_max(n: int, theta: float, seed) -> UniformMax:
    """Maximum of ``n`` iid U(0, theta) draws via the Beta(n, 1) inverse CDF."""
    _check_count(n)
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    rng = _as_rng(seed)
    # 1 - random() lies in (0, 1], keeping the maximum strictly positive
    u = 1.0 - rng.random()
    return UniformMax(theta * u ** (1.0 / n), int(n))


def sample_gaussian_mean(n: int, theta: float, sigma: float, seed) -> GaussianMean:
    _check_count(n)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = _as_rng(seed)
    return GaussianMean(theta + sigma / math.sqrt(n) * rng.standard_normal(), int(n), sigma)


def sample_gaussian_mean_var(n: int, theta: float, sigma: float, seed) -> GaussianMeanVar:
    """Sample mean and unbiased sample variance of ``n`` iid N(theta, sigma^2)."""
    _check_count(n, minimum=2)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = _as_rng(seed)
    x_bar = theta + sigma / math.sqrt(n) * rng.standard_normal()
    # chi-squared(n-1) == 2 * Gamma((n-1)/2)
    chi2 = 2.0 * rng.standard_gamma(0.5 * (n - 1))
    return GaussianMeanVar(x_bar, sigma**2 * chi2 / (n - 1), int(n))
