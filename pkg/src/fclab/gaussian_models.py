"""Gaussian-data models: ratio of two means, conjugate mean, coefficient of variation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .numerics import (
    INV_SQRT_2PI,
    QuadratureSpec,
    bisect_increasing_array,
    folded_normal_mean,
    integrate,
    normal_cdf,
)
from .sampling import (
    GaussianMean,
    GaussianMeanVar,
    sample_gaussian_mean,
    sample_gaussian_mean_var,
)

HALF_PI = 0.5 * math.pi
# keeps tan() finite at the ends of the mapped interval
U_EDGE = HALF_PI - 1e-12
TAIL_TOL = 1e-6


# -- ratio of two Gaussian means ------------------------------------------

@dataclass(frozen=True)
class RatioPosterior:
    """Posterior of theta_x / theta_y under flat priors, sigma known."""

    x_bar: float
    y_bar: float
    n: int
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0 or self.n < 1:
            raise ValueError(f"invalid ratio posterior {self}")

    @property
    def mean_sd(self) -> float:
        return self.sigma / math.sqrt(self.n)

    def location_scale(self) -> tuple[float, float]:
        """Rough centre and spread used to place quadrature panels."""
        s2 = self.mean_sd**2
        c = self.x_bar * self.y_bar / (self.y_bar**2 + s2)
        w = math.sqrt(s2 * (1.0 + c * c) / (self.y_bar**2 + s2))
        return c, w


def ratio_density(post: RatioPosterior, psi):
    """Marginal posterior density of psi = theta_x / theta_y.

    Scalars use ``math``; arrays are handled elementwise.
    """
    if np.ndim(psi) == 0:
        return _ratio_density_scalar(post.x_bar, post.y_bar, post.n / post.sigma**2, float(psi))
    psi = np.asarray(psi, dtype=float)
    prec = post.n / post.sigma**2
    q = 1.0 + psi * psi
    lin = psi * post.x_bar + post.y_bar
    expo = 0.5 * prec * (lin * lin / q - post.x_bar**2 - post.y_bar**2)
    expo = np.minimum(expo, 0.0)
    g_mean = lin / q
    g_sd = 1.0 / np.sqrt(prec * q)
    return np.sqrt(prec / q) * INV_SQRT_2PI * np.exp(expo) * folded_normal_mean(g_mean, g_sd)


def _ratio_density_scalar(xb, yb, prec, psi):
    q = 1.0 + psi * psi
    lin = psi * xb + yb
    # nonpositive by Cauchy-Schwarz; min() absorbs rounding
    expo = min(0.5 * prec * (lin * lin / q - xb * xb - yb * yb), 0.0)
    sd = 1.0 / math.sqrt(prec * q)
    z = lin / q / sd
    e_abs = sd * (0.7978845608028654 * math.exp(-0.5 * z * z) + z * math.erf(z * 0.7071067811865476))
    return math.sqrt(prec / q) * INV_SQRT_2PI * math.exp(expo) * e_abs


def _mass(post: RatioPosterior, a: float, b: float, tol: float, panels: int = 8) -> float:
    """Integral of the ratio density over [a, b] (a may be -inf, b may be +inf).

    Integrates in u with psi = c + w*tan(u); the density decays like
    psi^-2, so the mapped integrand stays bounded and the full real line
    becomes a finite interval.
    """
    if b <= a:
        return 0.0
    c, w = post.location_scale()
    ua = -U_EDGE if a == -math.inf else max(math.atan((a - c) / w), -U_EDGE)
    ub = U_EDGE if b == math.inf else min(math.atan((b - c) / w), U_EDGE)
    if ub <= ua:
        return 0.0
    xb, yb, prec = post.x_bar, post.y_bar, post.n / post.sigma**2

    def g(u):
        t = math.tan(u)
        return _ratio_density_scalar(xb, yb, prec, c + w * t) * w * (1.0 + t * t)

    width = (ub - ua) / panels
    total = 0.0
    for i in range(panels):
        lo = ua + i * width
        hi = ub if i == panels - 1 else lo + width
        total += integrate(g, QuadratureSpec(lo, hi, tol=tol / panels))
    return total


def truncation_half_width(post: RatioPosterior, center: float, tail_tol: float = TAIL_TOL) -> float:
    """Half-width T with (f(center-T) + f(center+T)) * T <= tail_tol.

    The density decays like psi^-2, so boundary density times distance
    bounds the mass left outside [center - T, center + T].
    """
    _, w = post.location_scale()
    t = max(w, 1.0)
    for _ in range(200):
        edge = ratio_density(post, center - t) + ratio_density(post, center + t)
        if edge * t <= tail_tol:
            return t
        t *= 2.0
    return t


def ratio_total_mass(post: RatioPosterior, tol: float = 1e-8) -> float:
    """Density mass over the truncation interval around the posterior centre."""
    c, _ = post.location_scale()
    t = truncation_half_width(post, c)
    return _mass(post, c - t, c + t, tol)


def ratio_cdf(post: RatioPosterior, psi, tol: float = 1e-9):
    """Posterior CDF of psi; arrays are integrated cumulatively in sorted order."""
    if np.ndim(psi) == 0:
        return _mass(post, -math.inf, float(psi), tol)
    psi = np.asarray(psi, dtype=float)
    order = np.argsort(psi, kind="stable")
    out = np.empty(psi.shape)
    acc, prev = 0.0, -math.inf
    step_tol = tol / max(len(order), 1)
    for idx in order:
        q = psi.flat[idx]
        acc += _mass(post, prev, q, step_tol, panels=1 if prev > -math.inf else 8)
        prev = max(prev, q)
        out.flat[idx] = min(acc, 1.0)
    return out


def ratio_ball_prob(post: RatioPosterior, psi0: float, eps: float, tol: float = 1e-8) -> float:
    """Posterior mass of [psi0 - eps, psi0 + eps] by adaptive quadrature."""
    if not eps >= 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    if eps == 0:
        return 0.0
    return min(max(_mass(post, psi0 - eps, psi0 + eps, tol), 0.0), 1.0)


class GaussianRatioModel(engine.BeliefModel):
    """X, Y iid N(theta_x, sigma^2), N(theta_y, sigma^2); psi = theta_x / theta_y."""

    tag = "gaussian-ratio"

    def __init__(self, thetax0: float, thetay0: float, sigma: float, n: int,
                 quad_tol: float = 1e-6):
        if thetay0 == 0:
            raise ValueError("thetay0 must be nonzero")
        if not sigma > 0 or int(n) != n or n < 1:
            raise ValueError(f"invalid ratio config sigma={sigma}, n={n}")
        self.thetax0 = float(thetax0)
        self.thetay0 = float(thetay0)
        self.sigma = float(sigma)
        self.n = int(n)
        self.quad_tol = float(quad_tol)

    def true_functional(self):
        return self.thetax0 / self.thetay0

    def draw_stat(self, rng):
        return (sample_gaussian_mean(self.n, self.thetax0, self.sigma, rng),
                sample_gaussian_mean(self.n, self.thetay0, self.sigma, rng))

    def posterior(self, stat, rng=None):
        x, y = stat
        return RatioPosterior(x.x_bar, y.x_bar, self.n, self.sigma)

    def ball_prob(self, post, psi0, eps):
        return ratio_ball_prob(post, psi0, eps, self.quad_tol)

    def radius_bracket(self, post):
        c, w = post.location_scale()
        return abs(self.true_functional() - c) + 100.0 * w

    def ball_profile(self, post, eps_grid):
        # accumulate annuli so each profile costs one pass over the widest ball
        psi0 = self.true_functional()
        out = np.empty(len(eps_grid))
        acc, prev = 0.0, 0.0
        tol = self.quad_tol / max(len(eps_grid), 1)
        for j, e in enumerate(eps_grid):
            if e > prev:
                acc += _mass(post, psi0 + prev, psi0 + e, tol, panels=2)
                acc += _mass(post, psi0 - e, psi0 - prev, tol, panels=2)
                prev = e
            out[j] = min(acc, 1.0)
        return out

    def critical_radius(self, post, alpha):
        psi0 = self.true_functional()
        top = self.radius_bracket(post)
        tol = self.quad_tol

        def annulus(e0, e1):
            return (_mass(post, psi0 + e0, psi0 + e1, tol, panels=1)
                    + _mass(post, psi0 - e1, psi0 - e0, tol, panels=1))

        # walk outward in growing steps until the ball mass passes alpha
        _, w = post.location_scale()
        lo, m_lo = 0.0, 0.0
        step = min(w, top)
        while True:
            hi = min(lo + step, top)
            m_hi = m_lo + annulus(lo, hi)
            if m_hi > alpha:
                break
            if hi >= top:
                return top, True
            lo, m_lo = hi, m_hi
            step *= 2.0
        xtol = engine.RADIUS_XTOL * max(1.0, top)
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            m_mid = m_lo + annulus(lo, mid)
            if m_mid <= alpha:
                lo, m_lo = mid, m_mid
            else:
                hi = mid
        return 0.5 * (lo + hi), False

    def posterior_table(self, post, psi_grid):
        return "density", ratio_density(post, psi_grid)


def ratio_fct_prob_mc(thetax0: float, thetay0: float, sigma: float, n: int, eps: float,
                      alpha: float, k: int, seed: int, quad_tol: float = 1e-6,
                      workers=None) -> engine.ProbeResult:
    model = GaussianRatioModel(thetax0, thetay0, sigma, n, quad_tol)
    return engine.probe(model, eps, alpha, k, seed, workers)


# -- conjugate normal mean -------------------------------------------------

@dataclass(frozen=True)
class ConjugatePosterior:
    mu_n: float
    tau_n2: float

    def __post_init__(self):
        if not self.tau_n2 > 0 or not math.isfinite(self.mu_n):
            raise ValueError(f"invalid conjugate posterior {self}")

    @property
    def tau_n(self) -> float:
        return math.sqrt(self.tau_n2)


def conjugate_posterior(x_bar: float, n: int, sigma2: float, mu: float, tau2: float) -> ConjugatePosterior:
    """Normal prior N(mu, tau2), known variance sigma2, n observations with mean x_bar."""
    if not (sigma2 > 0 and tau2 > 0 and n >= 1):
        raise ValueError(f"invalid conjugate inputs n={n}, sigma2={sigma2}, tau2={tau2}")
    tau_n2 = 1.0 / (1.0 / tau2 + n / sigma2)
    if mu == x_bar:
        return ConjugatePosterior(float(x_bar), tau_n2)
    return ConjugatePosterior((mu / tau2 + n * x_bar / sigma2) * tau_n2, tau_n2)


def conjugate_ball_prob(post: ConjugatePosterior, theta0: float, eps: float):
    """Phi((d + eps)/tau) - Phi((d - eps)/tau), d = theta0 - mu_n.

    Evaluated on the lower tail (|d| reflected) so tiny masses far from the
    posterior mean keep their relative accuracy.
    """
    if np.ndim(eps) == 0 and not eps >= 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    d = abs(theta0 - post.mu_n)
    tau = post.tau_n
    return normal_cdf((eps - d) / tau) - normal_cdf((-eps - d) / tau)


class GaussianConjugateModel(engine.BeliefModel):
    tag = "gaussian-conjugate"

    def __init__(self, theta0: float, sigma2: float, mu: float, tau2: float, n: int):
        if not (sigma2 > 0 and tau2 > 0) or int(n) != n or n < 1:
            raise ValueError(f"invalid conjugate config sigma2={sigma2}, tau2={tau2}, n={n}")
        self.theta0 = float(theta0)
        self.sigma2 = float(sigma2)
        self.mu = float(mu)
        self.tau2 = float(tau2)
        self.n = int(n)

    def true_functional(self):
        return self.theta0

    def draw_stat(self, rng):
        return sample_gaussian_mean(self.n, self.theta0, math.sqrt(self.sigma2), rng)

    def posterior(self, stat: GaussianMean, rng=None):
        return conjugate_posterior(stat.x_bar, self.n, self.sigma2, self.mu, self.tau2)

    def ball_prob(self, post, psi0, eps):
        return float(conjugate_ball_prob(post, psi0, eps))

    def radius_bracket(self, post):
        return abs(self.theta0 - post.mu_n) + 100.0 * post.tau_n

    def _arrays(self, posts):
        d = np.abs(self.theta0 - np.array([p.mu_n for p in posts]))
        tau = np.array([p.tau_n for p in posts])
        return d, tau

    def ball_profiles(self, posts, eps_grid):
        d, tau = self._arrays(posts)
        e = np.asarray(eps_grid, dtype=float)[None, :]
        d, tau = d[:, None], tau[:, None]
        return normal_cdf((e - d) / tau) - normal_cdf((-e - d) / tau)

    def critical_radii(self, posts, alphas):
        d, tau = self._arrays(posts)
        top = d + 100.0 * tau

        def mass(e):
            return normal_cdf((e - d) / tau) - normal_cdf((-e - d) / tau)

        radii, flags = [], []
        for a in alphas:
            radii.append(bisect_increasing_array(mass, a, np.zeros_like(d), top,
                                                 xtol=engine.RADIUS_XTOL))
            flags.append(mass(top) <= a)
        return np.column_stack(radii), np.column_stack(flags)

    def posterior_table(self, post, psi_grid):
        z = (np.asarray(psi_grid, dtype=float) - post.mu_n) / post.tau_n
        return "density", INV_SQRT_2PI * np.exp(-0.5 * z * z) / post.tau_n


# -- coefficient of variation ----------------------------------------------

PRIORS = ("independence", "jeffreys")
THETA_FLOOR = 1e-300


@dataclass(frozen=True)
class CoefVarPosterior:
    """Posterior draws of psi = sigma / theta for one data replicate."""

    x_bar: float
    s2: float
    n: int
    psi: np.ndarray

    def ball_prob(self, psi0: float, eps: float) -> float:
        return np.count_nonzero(np.abs(self.psi - psi0) <= eps) / len(self.psi)


def coefvar_posterior(stat: GaussianMeanVar, m_post: int, rng: np.random.Generator,
                      prior: str = "independence") -> CoefVarPosterior:
    """Draw ``m_post`` samples of sigma/theta.

    ``independence`` is pi(theta, sigma^2) ∝ 1/sigma^2, giving
    sigma^2 | data ~ InvGamma((n-1)/2, (n-1)s^2/2). ``jeffreys`` is
    ∝ 1/sigma^3, giving shape n/2. In both, theta | sigma^2 ~ N(x_bar, sigma^2/n).
    """
    if prior not in PRIORS:
        raise ValueError(f"unknown prior {prior!r}; choose from {PRIORS}")
    if m_post < 1:
        raise ValueError("m_post must be >= 1")
    n = stat.n
    shape = 0.5 * (n - 1) if prior == "independence" else 0.5 * n
    ss = (n - 1) * stat.s2
    sigma2 = 0.5 * ss / rng.standard_gamma(shape, size=m_post)
    sd = np.sqrt(sigma2)
    theta = stat.x_bar + sd / math.sqrt(n) * rng.standard_normal(m_post)
    bad = np.abs(theta) < THETA_FLOOR
    while bad.any():
        theta[bad] = stat.x_bar + sd[bad] / math.sqrt(n) * rng.standard_normal(int(bad.sum()))
        bad = np.abs(theta) < THETA_FLOOR
    return CoefVarPosterior(stat.x_bar, stat.s2, n, sd / theta)


class CoefVarModel(engine.BeliefModel):
    """X_1..X_n iid N(mu0, sigma0^2), both unknown; psi = sigma / theta."""

    tag = "coef-variation"

    def __init__(self, mu0: float, sigma0: float, n: int, m_post: int = 2000,
                 prior: str = "independence"):
        if mu0 == 0 or not sigma0 > 0:
            raise ValueError("need mu0 != 0 and sigma0 > 0")
        if int(n) != n or n < 2:
            raise ValueError(f"n must be an integer >= 2, got {n}")
        if m_post < 1:
            raise ValueError("m_post must be >= 1")
        if prior not in PRIORS:
            raise ValueError(f"unknown prior {prior!r}; choose from {PRIORS}")
        self.mu0 = float(mu0)
        self.sigma0 = float(sigma0)
        self.n = int(n)
        self.m_post = int(m_post)
        self.prior = prior

    def true_functional(self):
        return self.sigma0 / self.mu0

    def draw_stat(self, rng):
        return sample_gaussian_mean_var(self.n, self.mu0, self.sigma0, rng)

    def posterior(self, stat, rng):
        return coefvar_posterior(stat, self.m_post, rng, self.prior)

    def ball_prob(self, post, psi0, eps):
        if not eps >= 0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        return post.ball_prob(psi0, eps)

    def radius_bracket(self, post):
        return float(np.max(np.abs(post.psi - self.true_functional())))

    def ball_profiles(self, posts, eps_grid):
        psi0 = self.true_functional()
        e = np.asarray(eps_grid, dtype=float)
        out = np.empty((len(posts), len(e)))
        for i, post in enumerate(posts):
            dist = np.sort(np.abs(post.psi - psi0))
            out[i] = np.searchsorted(dist, e, side="right") / len(dist)
        return out

    def critical_radii(self, posts, alphas):
        # the ball mass is a step function of eps; its supremum below alpha is
        # the first distance at which the in-ball count exceeds the allowance
        psi0 = self.true_functional()
        radii = np.empty((len(posts), len(alphas)))
        flags = np.zeros_like(radii, dtype=bool)
        m = self.m_post
        allow = [_max_count(a, m) for a in alphas]
        for i, post in enumerate(posts):
            dist = np.sort(np.abs(post.psi - psi0))
            for j, c in enumerate(allow):
                if c >= m:
                    radii[i, j], flags[i, j] = dist[-1], True
                else:
                    radii[i, j] = dist[c]
        return radii, flags

    def posterior_table(self, post, psi_grid):
        ordered = np.sort(post.psi)
        return "cdf", np.searchsorted(ordered, np.asarray(psi_grid, dtype=float),
                                      side="right") / len(ordered)


def _max_count(alpha: float, m: int) -> int:
    """Largest c in [0, m] with c/m <= alpha in floating point."""
    c = min(int(math.floor(alpha * m)), m)
    while c + 1 <= m and (c + 1) / m <= alpha:
        c += 1
    while c > 0 and c / m > alpha:
        c -= 1
    return c


def coefvar_fct_probe(mu0: float, sigma0: float, n: int, eps: float, alpha: float, k: int,
                      m_post: int, seed: int, prior: str = "independence",
                      workers=None) -> engine.ProbeResult:
    model = CoefVarModel(mu0, sigma0, n, m_post, prior)
    return engine.probe(model, eps, alpha, k, seed, workers)
