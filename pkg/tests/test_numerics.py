import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fclab.numerics import (
    AccuracyError,
    Bracket,
    BracketError,
    QuadratureSpec,
    bisect_increasing_array,
    bisect_monotone,
    folded_normal_mean,
    integrate,
    normal_cdf,
    normal_pdf,
    riemann,
)


def erf_series(x, terms=30):
    # Maclaurin series of erf; independent of math.erf / scipy
    total = 0.0
    for k in range(terms):
        total += (-1) ** k * x ** (2 * k + 1) / (math.factorial(k) * (2 * k + 1))
    return 2.0 / math.sqrt(math.pi) * total


def test_normal_cdf_at_zero():
    assert normal_cdf(0.0) == 0.5


def test_normal_cdf_symmetry():
    assert abs(normal_cdf(-1.5) + normal_cdf(1.5) - 1.0) <= 1e-14


def test_normal_cdf_matches_series_oracle():
    oracle = 0.5 * (1.0 + erf_series(1.0 / math.sqrt(2.0)))
    assert oracle == pytest.approx(0.841344746, abs=1e-9)
    assert abs(normal_cdf(1.0) - oracle) <= 1e-12


@pytest.mark.parametrize("x", [-3.0, -0.7, 0.2, 1.1, 2.5])
def test_normal_cdf_array_and_scalar_agree(x):
    assert normal_cdf(np.array([x]))[0] == pytest.approx(normal_cdf(x), abs=1e-15)


def test_normal_cdf_monotone_random_pairs():
    rng = np.random.default_rng(11)
    a = rng.normal(scale=4.0, size=10_000)
    b = rng.normal(scale=4.0, size=10_000)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert np.all(normal_cdf(lo) <= normal_cdf(hi))
    assert all(normal_cdf(float(x)) <= normal_cdf(float(y)) for x, y in zip(lo[:500], hi[:500]))


def _folded_by_quadrature(m, s):
    def f(g):
        return abs(g) * normal_pdf((g - m) / s) / s

    lo, hi = m - 12 * s, m + 12 * s
    # split at the kink of |g|
    if lo < 0 < hi:
        return (integrate(f, QuadratureSpec(lo, 0.0, tol=1e-12))
                + integrate(f, QuadratureSpec(0.0, hi, tol=1e-12)))
    return integrate(f, QuadratureSpec(lo, hi, tol=1e-12))


def test_folded_normal_standard():
    oracle = _folded_by_quadrature(0.0, 1.0)
    assert oracle == pytest.approx(0.7978845608, abs=1e-10)
    assert folded_normal_mean(0.0, 1.0) == pytest.approx(oracle, abs=1e-10)


def test_folded_normal_far_mean():
    assert folded_normal_mean(10.0, 1.0) == pytest.approx(10.0, abs=1e-12)


def test_folded_normal_sign_symmetry():
    assert folded_normal_mean(-3.0, 2.0) == folded_normal_mean(3.0, 2.0)


def test_folded_normal_rejects_bad_scale():
    with pytest.raises(ValueError):
        folded_normal_mean(0.0, 0.0)
    with pytest.raises(ValueError):
        folded_normal_mean(np.zeros(2), np.array([1.0, -1.0]))


@pytest.mark.parametrize("m", np.linspace(-10, 10, 5))
@pytest.mark.parametrize("s", [0.01, 0.1, 1.0, 10.0])
def test_folded_normal_against_quadrature_grid(m, s):
    assert abs(folded_normal_mean(m, s) - _folded_by_quadrature(m, s)) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(1e-3, 50))
def test_folded_normal_lower_bounds(m, s):
    val = folded_normal_mean(m, s)
    half_normal_part = s * math.sqrt(2 / math.pi) * math.exp(-m * m / (2 * s * s))
    assert val >= max(abs(m), half_normal_part) - 1e-12 * max(1.0, abs(m))


def test_folded_normal_vectorised():
    m = np.array([-2.0, 0.0, 3.0])
    s = np.array([1.0, 2.0, 0.5])
    assert np.allclose(folded_normal_mean(m, s), [folded_normal_mean(a, b) for a, b in zip(m, s)],
                       rtol=0, atol=1e-15)


def test_integrate_polynomial():
    assert integrate(lambda x: x * x, QuadratureSpec(0.0, 1.0)) == pytest.approx(1 / 3, abs=1e-10)


def test_integrate_normal_mass():
    assert integrate(normal_pdf, QuadratureSpec(-8.0, 8.0)) == pytest.approx(1.0, abs=1e-8)


def test_integrate_sine():
    assert integrate(math.sin, QuadratureSpec(0.0, math.pi)) == pytest.approx(2.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_integrate_exact_on_cubics(c):
    def f(x):
        return c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3

    exact = 2 * c[0] + 2 * c[2] / 3
    assert abs(integrate(f, QuadratureSpec(-1.0, 1.0)) - exact) <= 1e-12


def test_integrate_empty_interval():
    assert integrate(math.exp, QuadratureSpec(1.0, 1.0)) == 0.0


def test_integrate_reports_best_estimate_on_failure():
    spec = QuadratureSpec(0.0, 1.0, tol=1e-14, max_subdivisions=5)
    with pytest.raises(AccuracyError) as info:
        integrate(lambda x: math.sin(200 * x) ** 2, spec)
    assert math.isfinite(info.value.estimate)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(1.0, 0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(0.0, 1.0, tol=0.0)


def test_gaussian_window_truncation():
    spec = QuadratureSpec.gaussian_window(2.0, 0.5)
    assert (spec.lo, spec.hi) == (-3.0, 7.0)


def test_riemann_oracle_mode():
    assert riemann(lambda x: x * x, 0.0, 1.0, points=2000) == pytest.approx(1 / 3, abs=1e-7)


def test_bisect_sqrt_two():
    f = lambda x: x * x - 2.0  # noqa: E731
    root = bisect_monotone(f, 0.0, Bracket.of(f, 0.0, 2.0), xtol=1e-9)
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-8)


def test_bisect_identity():
    f = lambda x: x  # noqa: E731
    assert abs(bisect_monotone(f, 0.65, Bracket.of(f, 0.0, 1.0), xtol=1e-10) - 0.65) <= 1e-10


def test_bisect_decreasing():
    f = lambda x: -x  # noqa: E731
    assert bisect_monotone(f, -0.3, Bracket.of(f, 0.0, 1.0), xtol=1e-10) == pytest.approx(0.3, abs=1e-10)


def test_bisect_two_step_function():
    jumps = (0.25, 0.7)

    def f(x):
        return float(x >= jumps[0]) + float(x >= jumps[1])

    # target 1.5 is straddled by the second jump only
    x = bisect_monotone(f, 1.5, Bracket.of(f, 0.0, 1.0), xtol=1e-9)
    assert abs(x - jumps[1]) <= 1e-9


def test_bisect_rejects_target_outside():
    f = lambda x: x  # noqa: E731
    with pytest.raises(BracketError):
        bisect_monotone(f, 2.0, Bracket.of(f, 0.0, 1.0))
    with pytest.raises(BracketError):
        Bracket.of(f, 1.0, 1.0)


def test_bisect_is_deterministic():
    f = lambda x: math.tanh(x) - 0.1  # noqa: E731
    br = Bracket.of(f, -3.0, 3.0)
    assert bisect_monotone(f, 0.2, br) == bisect_monotone(f, 0.2, br)


def test_bisect_array_matches_scalar():
    targets = np.array([0.1, 0.5, 0.9])
    got = bisect_increasing_array(lambda x: x**2, targets, np.zeros(3), np.ones(3), xtol=1e-12)
    assert np.allclose(got, np.sqrt(targets), atol=1e-11)
    # saturated problem returns the bracket top
    top = bisect_increasing_array(lambda x: 0.0 * x, 0.5, np.zeros(1), np.full(1, 4.0))
    assert top[0] == 4.0
