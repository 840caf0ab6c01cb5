"""Special functions, 1-D quadrature and monotone root finding."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Gaussian tails past this many standard deviations are below 1e-22.
TRUNCATION_SIGMAS = 10.0


class AccuracyError(ArithmeticError):
    """Quadrature gave up before reaching the requested tolerance."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class BracketError(ValueError):
    """Target value does not lie between the bracket's endpoint values."""


def normal_cdf(x):
    """Standard normal distribution function.

    Scalars go through ``math.erfc``; arrays through ``scipy.special.ndtr``.
    Both are accurate to about 1e-16 absolute.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT2)
    return special.ndtr(np.asarray(x, dtype=float))


def normal_pdf(x):
    if np.ndim(x) == 0:
        return INV_SQRT_2PI * math.exp(-0.5 * float(x) ** 2)
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def folded_normal_mean(m, s):
    """E|g| for g ~ N(m, s^2).

    Closed form s*sqrt(2/pi)*exp(-m^2/(2 s^2)) + m*(1 - 2*Phi(-m/s)).
    Works elementwise on arrays.
    """
    if np.ndim(m) == 0 and np.ndim(s) == 0:
        m = float(m)
        s = float(s)
        if not s > 0:
            raise ValueError(f"standard deviation must be positive, got {s}")
        z = m / s
        return s * SQRT_2_OVER_PI * math.exp(-0.5 * z * z) + m * math.erf(z / SQRT2)
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("standard deviation must be positive")
    z = m / s
    # m*(1 - 2*Phi(-z)) == m*erf(z/sqrt2); erf keeps the sign symmetry exact
    return s * SQRT_2_OVER_PI * np.exp(-0.5 * z * z) + m * special.erf(z / SQRT2)


@dataclass(frozen=True)
class QuadratureSpec:
    lo: float
    hi: float
    tol: float = 1e-10
    max_subdivisions: int = 100_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if not self.lo <= self.hi:
            raise ValueError(f"bounds out of order: [{self.lo}, {self.hi}]")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")

    @classmethod
    def gaussian_window(cls, mean: float, sd: float, **kw) -> "QuadratureSpec":
        """Bounds for a half-infinite or infinite integral dominated by N(mean, sd^2)."""
        return cls(mean - TRUNCATION_SIGMAS * sd, mean + TRUNCATION_SIGMAS * sd, **kw)


def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def integrate(f: Callable[[float], float], spec: QuadratureSpec) -> float:
    """Adaptive Simpson quadrature with interval halving.

    Each panel is accepted once the two-halves estimate differs from the
    whole-panel one by at most 15 times its share of the tolerance; the
    Richardson-corrected value is used. Exact for cubics.
    """
    a, b = float(spec.lo), float(spec.hi)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)

    total = 0.0
    # panels: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, spec.tol, 0)]
    used = 0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        used += 1
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(fa, flm, fm, m - a)
        right = _simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        # depth floor stops splitting once the panel width underflows
        if abs(delta) <= 15.0 * tol or depth >= 60:
            total += left + right + delta / 15.0
            continue
        if used + len(stack) >= spec.max_subdivisions:
            est = total + left + right + delta / 15.0
            est += sum(p[5] for p in stack)
            raise AccuracyError(
                f"no convergence after {spec.max_subdivisions} subdivisions", est
            )
        half = 0.5 * tol
        stack.append((m, b, fm, frm, fb, right, half, depth + 1))
        stack.append((a, m, fa, flm, fm, left, half, depth + 1))
    return total


def riemann(f: Callable, lo: float, hi: float, points: int = 10_000) -> float:
    """Midpoint Riemann sum on a uniform grid; ``f`` must accept arrays."""
    if points < 1:
        raise ValueError("need at least one grid point")
    h = (hi - lo) / points
    x = lo + h * (np.arange(points) + 0.5)
    return float(h * np.sum(f(x)))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @classmethod
    def of(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        if not lo < hi:
            raise BracketError(f"empty bracket [{lo}, {hi}]")
        return cls(lo, hi, f(lo), f(hi))

    @property
    def increasing(self) -> bool:
        return self.f_hi >= self.f_lo


def bisect_monotone(f: Callable[[float], float], target: float, bracket: Bracket,
                    xtol: float = 1e-12) -> float:
    """Locate where a monotone ``f`` crosses ``target`` inside ``bracket``.

    Returns the crossing point to within ``xtol``. For functions with jumps
    the result is within ``xtol`` of the jump that straddles the target.
    """
    if not xtol > 0:
        raise ValueError("xtol must be positive")
    lo_v, hi_v = sorted((bracket.f_lo, bracket.f_hi))
    if not lo_v <= target <= hi_v:
        raise BracketError(
            f"target {target} outside [{lo_v}, {hi_v}] on [{bracket.lo}, {bracket.hi}]"
        )
    sign = 1.0 if bracket.increasing else -1.0
    lo, hi = bracket.lo, bracket.hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sign * (f(mid) - target) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_increasing_array(f: Callable[[np.ndarray], np.ndarray], target,
                            lo, hi, xtol: float = 1e-12, max_iter: int = 200):
    """Vectorised bisection for many increasing functions at once.

    ``f`` maps an array of abscissae (one per problem) to function values.
    Returns the supremum of ``{x in [lo, hi] : f(x) <= target}`` per problem,
    to within ``xtol``. Problems whose ``f(hi) <= target`` return ``hi``.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    target = np.broadcast_to(np.asarray(target, dtype=float), lo.shape)
    saturated = f(hi) <= target
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        below = f(mid) <= target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    return np.where(saturated, hi, out)
