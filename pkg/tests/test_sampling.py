import math

import numpy as np
import pytest
from scipy import stats

from fclab.sampling import (
    SeedSpec,
    sample_gaussian_mean,
    sample_gaussian_mean_var,
    sample_uniform_max,
    stream_rng,
)

MASTER = 987654321


def test_uniform_max_support():
    for i in range(200):
        x = sample_uniform_max(5, 2.0, SeedSpec(MASTER, i)).x_max
        assert 0.0 < x <= 2.0


def test_uniform_max_deterministic():
    a = sample_uniform_max(7, 3.0, SeedSpec(MASTER, 42))
    b = sample_uniform_max(7, 3.0, SeedSpec(MASTER, 42))
    assert a == b


def test_uniform_max_mean_is_beta_mean():
    k, n = 100_000, 3
    x = np.array([sample_uniform_max(n, 1.0, SeedSpec(MASTER, i)).x_max for i in range(k)])
    se = x.std(ddof=1) / math.sqrt(k)
    assert abs(x.mean() - n / (n + 1)) <= 3 * se


@pytest.mark.parametrize("n", [1, 5, 20])
def test_uniform_max_ks_against_beta(n):
    k = 10_000
    x = np.array([sample_uniform_max(n, 2.5, SeedSpec(5, i)).x_max for i in range(k)]) / 2.5
    d = stats.kstest(x, stats.beta(n, 1).cdf).statistic
    assert d < stats.kstwo.ppf(0.99, k)


@pytest.mark.parametrize("n,theta", [(0, 1.0), (3, 0.0), (2, -1.0), (1.5, 1.0)])
def test_uniform_max_domain(n, theta):
    with pytest.raises(ValueError):
        sample_uniform_max(n, theta, SeedSpec(1, 0))


def test_gaussian_mean_sampling_distribution():
    k, n, theta, sigma = 100_000, 100, 0.1, 1.0
    x = np.array([sample_gaussian_mean(n, theta, sigma, SeedSpec(MASTER, i)).x_bar
                  for i in range(k)])
    assert np.all(np.isfinite(x))
    assert abs(x.mean() - theta) <= 3 * sigma / math.sqrt(n * k)


def test_gaussian_mean_degenerate_sigma():
    x = sample_gaussian_mean(4, 2.0, 1e-8, SeedSpec(3, 1)).x_bar
    assert abs(x - 2.0) < 1e-6


def test_gaussian_mean_deterministic():
    assert sample_gaussian_mean(9, 0.0, 1.0, SeedSpec(8, 8)) == sample_gaussian_mean(
        9, 0.0, 1.0, SeedSpec(8, 8))


@pytest.mark.parametrize("n,sigma", [(0, 1.0), (3, 0.0)])
def test_gaussian_mean_domain(n, sigma):
    with pytest.raises(ValueError):
        sample_gaussian_mean(n, 0.0, sigma, SeedSpec(1, 0))


def test_mean_var_nonnegative_and_deterministic():
    a = sample_gaussian_mean_var(5, 1.0, 10.0, SeedSpec(2, 3))
    assert a.s2 >= 0
    assert a == sample_gaussian_mean_var(5, 1.0, 10.0, SeedSpec(2, 3))


def test_mean_var_unbiased_variance():
    k, n, sigma = 100_000, 5, 10.0
    s2 = np.array([sample_gaussian_mean_var(n, 1.0, sigma, SeedSpec(MASTER, i)).s2
                   for i in range(k)])
    se = sigma**2 * math.sqrt(2.0 / (n - 1)) / math.sqrt(k)
    assert abs(s2.mean() - sigma**2) <= 3 * se


def test_mean_var_requires_two_points():
    with pytest.raises(ValueError):
        sample_gaussian_mean_var(1, 0.0, 1.0, SeedSpec(1, 0))


def test_streams_uncorrelated():
    k = 100_000
    u = np.array([stream_rng(MASTER, i).random() for i in range(k + 1)])
    r = np.corrcoef(u[:-1], u[1:])[0, 1]
    assert abs(r) < 0.01


def test_reordering_invariance():
    ids = list(range(500))
    forward = {i: sample_uniform_max(4, 1.0, SeedSpec(17, i)).x_max for i in ids}
    backward = {i: sample_uniform_max(4, 1.0, SeedSpec(17, i)).x_max for i in reversed(ids)}
    assert forward == backward
    assert sum(forward[i] for i in ids) == sum(backward[i] for i in ids)


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1, 0)
    with pytest.raises(ValueError):
        SeedSpec(2**64, 0)
    with pytest.raises(ValueError):
        SeedSpec(0, -3)
    SeedSpec(2**64 - 1, 0).rng().random()
