"""Uniform-support models under the Jeffreys prior 1/theta.

One sample: theta | data ~ Pareto(n, x_max). Two samples: the product
psi = theta_x * theta_y of two independent Pareto posteriors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .numerics import bisect_increasing_array
from .sampling import UniformMax, sample_uniform_max


@dataclass(frozen=True)
class ParetoPosterior:
    n: float
    x_max: float

    def __post_init__(self):
        if not (self.n > 0 and self.x_max > 0):
            raise ValueError(f"invalid Pareto posterior {self}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x >= self.x_max, x, self.x_max)
        return np.where(x >= self.x_max, self.n * self.x_max**self.n / safe ** (self.n + 1), 0.0)


def pareto_cdf(post: ParetoPosterior, x):
    """(1 - (x_max/x)^n) for x >= x_max, else 0. Elementwise on arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        return 1.0 - (post.x_max / x) ** post.n if x >= post.x_max else 0.0
    x = np.asarray(x, dtype=float)
    safe = np.where(x >= post.x_max, x, post.x_max)
    return np.where(x >= post.x_max, 1.0 - (post.x_max / safe) ** post.n, 0.0)


def _ball(cdf, center, eps):
    return cdf(center + eps) - cdf(center - eps)


def support_ball_prob(post: ParetoPosterior, theta0: float, eps: float) -> float:
    """Posterior mass of [theta0 - eps, theta0 + eps]."""
    if not 0 <= eps < theta0:
        raise ValueError(f"need 0 <= eps < theta0, got eps={eps}, theta0={theta0}")
    return _ball(lambda x: pareto_cdf(post, x), theta0, eps)


def _max_cdf(x, theta0, n):
    """P(X_(n) <= x) for n iid U(0, theta0)."""
    return min(max(x / theta0, 0.0), 1.0) ** n


def _check_probe_args(theta0, eps, alpha, n):
    if not theta0 > 0:
        raise ValueError(f"theta0 must be positive, got {theta0}")
    if not 0 <= eps < theta0:
        raise ValueError(f"need 0 <= eps < theta0, got eps={eps}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")


def fct_prob_closed_form(theta0: float, eps: float, alpha: float, n: float) -> float:
    """Exact P(posterior mass of the eps-ball <= alpha) for the one-sample model.

    Below theta0 - eps the ball mass is x^n * [(theta0-eps)^-n - (theta0+eps)^-n],
    increasing in x, so the event is x <= t1. Above it the mass is
    1 - (x/(theta0+eps))^n, decreasing, so the event is x >= t2.
    """
    _check_probe_args(theta0, eps, alpha, n)
    lo, hi = theta0 - eps, theta0 + eps
    gap = lo**-n - hi**-n
    t1 = alpha ** (1.0 / n) * gap ** (-1.0 / n) if gap > 0 else math.inf
    t2 = (1.0 - alpha) ** (1.0 / n) * hi
    below = _max_cdf(min(t1, lo), theta0, n)
    above = 1.0 - _max_cdf(max(t2, lo), theta0, n)
    return below + above


def fct_prob_product_form(theta0: float, eps: float, alpha: float, n: float) -> float:
    """The product-of-marginals expression for the same probability.

    Multiplies conditional-looking factors by marginal probabilities of
    overlapping events, so it is not the sampling probability in general.
    Kept only to quantify its gap from :func:`fct_prob_closed_form`.
    """
    _check_probe_args(theta0, eps, alpha, n)
    r_lo = ((theta0 - eps) / theta0) ** n
    if eps > 0:
        first = min(1.0, alpha / ((theta0 / (theta0 - eps)) ** n - (theta0 / (theta0 + eps)) ** n))
    else:
        first = 1.0
    cond = eps <= theta0 * ((1.0 - alpha) ** (-1.0 / n) - 1.0)
    second = (1.0 - (1.0 - alpha) * ((theta0 + eps) / theta0) ** n) if cond else 0.0
    return first * r_lo + second * (1.0 - r_lo)


@dataclass(frozen=True)
class ProductPosterior:
    n: float
    m: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.n > 0 and self.m > 0 and self.x_max > 0 and self.y_max > 0):
            raise ValueError(f"invalid product posterior {self}")

    @property
    def support_min(self) -> float:
        return self.x_max * self.y_max

    def pdf(self, psi):
        psi = np.asarray(psi, dtype=float)
        s = self.support_min
        inside = psi > s
        safe = np.where(inside, psi, s)
        n, m = self.n, self.m
        if n == m:
            dens = n * n * np.log(safe / s) * s**n / safe ** (n + 1)
        else:
            dens = n * m / (n - m) * (s**m / safe ** (m + 1) - s**n / safe ** (n + 1))
        return np.where(inside, dens, 0.0)


def product_cdf(post: ProductPosterior, psi):
    """Posterior CDF of theta_x * theta_y; equal-shape and unequal-shape branches."""
    out = _product_cdf_vec(post.support_min, post.n, post.m, psi)
    return float(out) if np.ndim(psi) == 0 else out


def product_ball_prob(post: ProductPosterior, psi0: float, eps: float):
    """Posterior mass of [psi0 - eps, psi0 + eps] (cdf below support clamps to 0)."""
    return product_cdf(post, psi0 + eps) - product_cdf(post, psi0 - eps)


# -- models ---------------------------------------------------------------

class UniformSupportModel(engine.BeliefModel):
    """X_1..X_n iid U(0, theta0), Jeffreys prior, psi = theta."""

    tag = "uniform-support"

    def __init__(self, theta0: float, n: int):
        if not theta0 > 0 or int(n) != n or n < 1:
            raise ValueError(f"invalid uniform-support config theta0={theta0}, n={n}")
        self.theta0 = float(theta0)
        self.n = int(n)

    def true_functional(self):
        return self.theta0

    def draw_stat(self, rng):
        return sample_uniform_max(self.n, self.theta0, rng)

    def posterior(self, stat: UniformMax, rng=None):
        return ParetoPosterior(stat.n, stat.x_max)

    def ball_prob(self, post, psi0, eps):
        return support_ball_prob(post, psi0, eps)

    def radius_bracket(self, post):
        # the ball must stay inside (0, inf), so radii are strictly below theta0
        return float(np.nextafter(self.theta0, 0.0))

    def ball_profiles(self, posts, eps_grid):
        eps_grid = np.asarray(eps_grid, dtype=float)
        if np.any(eps_grid >= self.theta0):
            raise ValueError(f"radii must stay below theta0={self.theta0}")
        x = np.array([p.x_max for p in posts])[:, None]
        return (_pareto_cdf_vec(x, self.n, self.theta0 + eps_grid)
                - _pareto_cdf_vec(x, self.n, self.theta0 - eps_grid))

    def critical_radii(self, posts, alphas):
        x = np.array([p.x_max for p in posts])
        top = self.radius_bracket(None)
        radii, flags = [], []
        for a in alphas:
            def mass(e):
                return (_pareto_cdf_vec(x, self.n, self.theta0 + e)
                        - _pareto_cdf_vec(x, self.n, self.theta0 - e))
            r = bisect_increasing_array(mass, a, np.zeros_like(x), np.full_like(x, top),
                                        xtol=engine.RADIUS_XTOL * top)
            radii.append(r)
            flags.append(mass(np.full_like(x, top)) <= a)
        return np.column_stack(radii), np.column_stack(flags)

    def posterior_table(self, post, psi_grid):
        return "density", post.pdf(psi_grid)


def _pareto_cdf_vec(x_max, n, x):
    x = np.broadcast_to(np.asarray(x, dtype=float), np.broadcast(x_max, x).shape)
    x_max = np.broadcast_to(x_max, x.shape)
    inside = x >= x_max
    safe = np.where(inside, x, x_max)
    return np.where(inside, 1.0 - (x_max / safe) ** n, 0.0)


class UniformProductModel(engine.BeliefModel):
    """Two independent uniform samples; psi = theta_x * theta_y."""

    tag = "uniform-product"

    def __init__(self, thetax0: float, thetay0: float, n: int, m: int | None = None):
        m = n if m is None else m
        if not (thetax0 > 0 and thetay0 > 0):
            raise ValueError("true parameters must be positive")
        for c in (n, m):
            if int(c) != c or c < 1:
                raise ValueError(f"sample sizes must be positive integers, got {c}")
        self.thetax0 = float(thetax0)
        self.thetay0 = float(thetay0)
        self.n = int(n)
        self.m = int(m)

    def true_functional(self):
        return self.thetax0 * self.thetay0

    def draw_stat(self, rng):
        return (sample_uniform_max(self.n, self.thetax0, rng),
                sample_uniform_max(self.m, self.thetay0, rng))

    def posterior(self, stat, rng=None):
        x, y = stat
        return ProductPosterior(self.n, self.m, x.x_max, y.x_max)

    def ball_prob(self, post, psi0, eps):
        if not 0 <= eps < psi0:
            raise ValueError(f"need 0 <= eps < psi0={psi0}, got {eps}")
        return product_ball_prob(post, psi0, eps)

    def radius_bracket(self, post):
        return float(np.nextafter(self.true_functional(), 0.0))

    def ball_profiles(self, posts, eps_grid):
        psi0 = self.true_functional()
        eps_grid = np.asarray(eps_grid, dtype=float)
        if np.any(eps_grid >= psi0) or np.any(eps_grid < 0):
            raise ValueError(f"radii must lie in [0, {psi0})")
        s = np.array([p.support_min for p in posts])[:, None]
        return _product_cdf_vec(s, self.n, self.m, psi0 + eps_grid) - _product_cdf_vec(
            s, self.n, self.m, psi0 - eps_grid)

    def critical_radii(self, posts, alphas):
        psi0 = self.true_functional()
        top = self.radius_bracket(None)
        s = np.array([p.support_min for p in posts])
        radii, flags = [], []
        for a in alphas:
            def mass(e):
                return (_product_cdf_vec(s, self.n, self.m, psi0 + e)
                        - _product_cdf_vec(s, self.n, self.m, psi0 - e))
            radii.append(bisect_increasing_array(mass, a, np.zeros_like(s), np.full_like(s, top),
                                                 xtol=engine.RADIUS_XTOL * psi0))
            flags.append(mass(np.full_like(s, top)) <= a)
        return np.column_stack(radii), np.column_stack(flags)

    def posterior_table(self, post, psi_grid):
        return "density", post.pdf(psi_grid)


def _product_cdf_vec(s, n, m, psi):
    psi = np.broadcast_to(np.asarray(psi, dtype=float), np.broadcast(s, psi).shape)
    s = np.broadcast_to(s, psi.shape)
    inside = psi > s
    r = s / np.where(inside, psi, s)
    if n == m:
        val = 1.0 - (1.0 + n * np.log(1.0 / r)) * r**n
    else:
        val = 1.0 + (m * r**n - n * r**m) / (n - m)
    return np.where(inside, val, 0.0)


def product_fct_prob_mc(thetax0: float, thetay0: float, n: int, m: int, eps: float,
                        alpha: float, k: int, seed: int, workers=None) -> engine.ProbeResult:
    """Monte Carlo p-hat for the two-sample product model."""
    model = UniformProductModel(thetax0, thetay0, n, m)
    psi0 = model.true_functional()
    if not 0 <= eps < psi0:
        raise ValueError(f"need 0 <= eps < psi0={psi0}, got {eps}")
    return engine.probe(model, eps, alpha, k, seed, workers)


def fct_prob_mc(theta0: float, eps: float, alpha: float, n: int, k: int, seed: int,
                workers=None) -> engine.ProbeResult:
    """Monte Carlo counterpart of :func:`fct_prob_closed_form`."""
    _check_probe_args(theta0, eps, alpha, n)
    return engine.probe(UniformSupportModel(theta0, n), eps, alpha, k, seed, workers)
