"""False-confidence lab.

Measures, for several Bayesian models, how often a posterior assigns belief
of at least 1 - alpha to a set that excludes the true parameter.
"""
from .engine import (
    BeliefModel,
    EpsilonBall,
    EpsilonSolution,
    ProbeResult,
    contour_grid,
    curve,
    posterior_snapshots,
    probe,
    solve_epsilon,
)
from .gaussian_models import (
    CoefVarModel,
    GaussianConjugateModel,
    GaussianRatioModel,
    coefvar_fct_probe,
    conjugate_ball_prob,
    conjugate_posterior,
    ratio_ball_prob,
    ratio_density,
    ratio_fct_prob_mc,
)
from .numerics import bisect_monotone, folded_normal_mean, integrate, normal_cdf
from .sampling import SeedSpec, sample_gaussian_mean, sample_gaussian_mean_var, sample_uniform_max
from .uniform_models import (
    UniformProductModel,
    UniformSupportModel,
    fct_prob_closed_form,
    fct_prob_mc,
    pareto_cdf,
    product_cdf,
    product_fct_prob_mc,
    support_ball_prob,
)

__version__ = "0.1.0"
