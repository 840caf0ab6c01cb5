"""Model-agnostic false-confidence probes.

A probe draws ``k`` independent data replicates from the sampling law at the
true parameter, forms each posterior, and records how often the posterior
puts at most ``alpha`` on the closed ball ``[psi0 - eps, psi0 + eps]``.
Equivalently, how often the complement of the ball, a set that excludes the
truth, receives belief at least ``1 - alpha``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .numerics import Bracket, bisect_monotone
from .sampling import SeedSpec, stream_rng

CHUNK = 2048
RADIUS_XTOL = 1e-10


class ReplicateError(RuntimeError):
    """A model failed on one replicate; carries the replicate index."""

    def __init__(self, model: str, replicate: int, cause: BaseException):
        super().__init__(f"{model}: replicate {replicate} failed: {cause!r}")
        self.model = model
        self.replicate = replicate
        self.cause = cause


@dataclass(frozen=True)
class EpsilonBall:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError(f"ball radius must be nonnegative, got {self.radius}")

    @property
    def lo(self) -> float:
        return self.center - self.radius

    @property
    def hi(self) -> float:
        return self.center + self.radius

    def contains(self, x) -> Any:
        return np.abs(np.asarray(x) - self.center) <= self.radius


@dataclass(frozen=True)
class ProbeResult:
    epsilon: float
    alpha: float
    p_hat: float
    mc_se: float
    k: int
    seed: int
    model: str
    hits: int = field(default=0, compare=False)

    @classmethod
    def from_hits(cls, hits: int, k: int, *, epsilon, alpha, seed, model) -> "ProbeResult":
        p_hat = hits / k
        return cls(epsilon, alpha, p_hat, math.sqrt(p_hat * (1.0 - p_hat) / k), k,
                   seed, model, hits)


class BeliefModel:
    """Base class for the shipped models.

    Subclasses set ``tag`` and implement ``true_functional``, ``draw_stat``,
    ``posterior`` and ``ball_prob``. The remaining hooks have generic
    defaults and are overridden where a model has something faster.
    """

    tag = "abstract"

    def true_functional(self) -> float:
        raise NotImplementedError

    def draw_stat(self, rng: np.random.Generator):
        raise NotImplementedError

    def posterior(self, stat, rng: np.random.Generator):
        raise NotImplementedError

    def ball_prob(self, post, psi0: float, eps: float) -> float:
        raise NotImplementedError

    def radius_bracket(self, post) -> float:
        """Upper end of the search interval for the critical radius."""
        raise NotImplementedError

    def ball_profile(self, post, eps_grid: np.ndarray) -> np.ndarray:
        psi0 = self.true_functional()
        return np.array([self.ball_prob(post, psi0, e) for e in eps_grid])

    def critical_radius(self, post, alpha: float) -> tuple[float, bool]:
        """Largest radius whose ball still has posterior mass <= alpha.

        Returns ``(radius, flagged)``; ``flagged`` marks replicates whose
        ball mass never exceeded alpha inside the search bracket.
        """
        psi0 = self.true_functional()
        top = self.radius_bracket(post)

        def mass(e):
            return self.ball_prob(post, psi0, e)

        if mass(top) <= alpha:
            return top, True
        br = Bracket(0.0, top, mass(0.0), mass(top))
        return bisect_monotone(mass, alpha, br, xtol=RADIUS_XTOL * max(1.0, top)), False

    def ball_profiles(self, posts: list, eps_grid: np.ndarray) -> np.ndarray:
        return np.array([self.ball_profile(p, eps_grid) for p in posts]).reshape(
            len(posts), len(eps_grid))

    def critical_radii(self, posts: list, alphas: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        radii = np.empty((len(posts), len(alphas)))
        flags = np.zeros((len(posts), len(alphas)), dtype=bool)
        for i, post in enumerate(posts):
            for j, a in enumerate(alphas):
                radii[i, j], flags[i, j] = self.critical_radius(post, a)
        return radii, flags

    def posterior_table(self, post, psi_grid: np.ndarray) -> tuple[str, np.ndarray]:
        """Posterior density (or CDF when only that is available) on a grid."""
        raise NotImplementedError


def complement_belief(ball_mass: float) -> float:
    """Belief in the set excluding the ball, by additivity."""
    return 1.0 - ball_mass


# -- replicate execution ---------------------------------------------------

def _draw_posts(model: BeliefModel, seed: int, start: int, stop: int) -> list:
    posts = []
    for i in range(start, stop):
        rng = stream_rng(seed, i)
        try:
            stat = model.draw_stat(rng)
            posts.append(model.posterior(stat, rng))
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise ReplicateError(model.tag, i, exc) from exc
    return posts


def _guarded(model, start, fn, posts, *args):
    try:
        return fn(posts, *args)
    except ReplicateError:
        raise
    except Exception as exc:  # noqa: BLE001
        # locate the offending replicate by re-running one at a time
        for off, post in enumerate(posts):
            try:
                fn([post], *args)
            except Exception as inner:  # noqa: BLE001
                raise ReplicateError(model.tag, start + off, inner) from inner
        raise ReplicateError(model.tag, start, exc) from exc


def _profile_chunk(model, seed, start, stop, eps_grid):
    posts = _draw_posts(model, seed, start, stop)
    return _guarded(model, start, model.ball_profiles, posts, eps_grid)


def _radius_chunk(model, seed, start, stop, alphas):
    posts = _draw_posts(model, seed, start, stop)
    return _guarded(model, start, model.critical_radii, posts, list(alphas))


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("FCL_WORKERS", "1"))
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def _run_chunks(fn, model, seed, k, workers, *args):
    """Evaluate ``fn`` over replicate chunks; results come back in stream order."""
    if k < 1:
        raise ValueError(f"replicate count must be >= 1, got {k}")
    SeedSpec(seed)  # validates the master seed
    workers = resolve_workers(workers)
    bounds = [(s, min(s + CHUNK, k)) for s in range(0, k, CHUNK)]
    if workers == 1 or len(bounds) == 1:
        return [fn(model, seed, a, b, *args) for a, b in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, model, seed, a, b, *args) for a, b in bounds]
        return [f.result() for f in futures]


def ball_matrix(model: BeliefModel, eps_grid, k: int, seed: int, workers=None) -> np.ndarray:
    """Posterior ball mass for every replicate (rows) and radius (columns)."""
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    if np.any(eps_grid < 0):
        raise ValueError("radii must be nonnegative")
    parts = _run_chunks(_profile_chunk, model, seed, k, workers, eps_grid)
    return np.vstack(parts)


def radius_matrix(model: BeliefModel, alphas, k: int, seed: int,
                  workers=None) -> tuple[np.ndarray, np.ndarray]:
    """Critical radius per replicate (rows) and alpha (columns), plus flags."""
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    for a in alphas:
        _check_prob(a, "alpha")
    parts = _run_chunks(_radius_chunk, model, seed, k, workers, alphas)
    return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def _check_prob(x, name):
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


# -- public operations -----------------------------------------------------

def probe(model: BeliefModel, eps: float, alpha: float, k: int, seed: int,
          workers=None) -> ProbeResult:
    """Estimate P(posterior mass of the eps-ball <= alpha) from k replicates."""
    _check_prob(alpha, "alpha")
    masses = ball_matrix(model, [eps], k, seed, workers)[:, 0]
    hits = int(np.count_nonzero(masses <= alpha))
    return ProbeResult.from_hits(hits, k, epsilon=float(eps), alpha=float(alpha),
                                 seed=seed, model=model.tag)


def curve(model: BeliefModel, eps_grid, alpha: float, k: int, seed: int,
          workers=None) -> list[ProbeResult]:
    """p-hat over a radius grid, all points sharing one replicate set."""
    _check_prob(alpha, "alpha")
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.ndim != 1 or len(eps_grid) == 0:
        raise ValueError("radius grid must be a nonempty 1-D sequence")
    if np.any(np.diff(eps_grid) <= 0):
        raise ValueError("radius grid must be strictly increasing")
    masses = ball_matrix(model, eps_grid, k, seed, workers)
    hits = np.count_nonzero(masses <= alpha, axis=0)
    return [ProbeResult.from_hits(int(h), k, epsilon=float(e), alpha=float(alpha),
                                  seed=seed, model=model.tag)
            for e, h in zip(eps_grid, hits)]


def upper_quantile(radii: np.ndarray, p: float) -> float:
    """Largest eps with #{radius_i >= eps} / k >= p."""
    _check_prob(p, "p")
    ordered = np.sort(np.asarray(radii, dtype=float))
    k = len(ordered)
    # round() guards p*k against representation error, e.g. 0.95*100000
    need = math.ceil(round(p * k, 9))
    return float(ordered[k - need])


@dataclass(frozen=True)
class EpsilonSolution:
    epsilon: float
    alpha: float
    p: float
    k: int
    seed: int
    model: str
    flagged: int


def solve_epsilon(model: BeliefModel, alpha: float, p: float, k: int, seed: int,
                  workers=None) -> EpsilonSolution:
    """Largest eps such that the ball mass is <= alpha with frequency >= p."""
    _check_prob(p, "p")
    radii, flags = radius_matrix(model, [alpha], k, seed, workers)
    return EpsilonSolution(upper_quantile(radii[:, 0], p), float(alpha), float(p), k,
                           seed, model.tag, int(flags.sum()))


def contour_grid(model: BeliefModel, alphas, ps, k: int, seed: int,
                 workers=None) -> np.ndarray:
    """eps(alpha, p) matrix, rows indexed by alpha and columns by p."""
    alphas = np.asarray(alphas, dtype=float)
    ps = np.asarray(ps, dtype=float)
    for grid, name in ((alphas, "alpha"), (ps, "p")):
        if grid.ndim != 1 or len(grid) == 0:
            raise ValueError(f"{name} grid must be nonempty")
        if np.any(np.diff(grid) <= 0):
            raise ValueError(f"{name} grid must be strictly increasing")
    radii, _ = radius_matrix(model, alphas, k, seed, workers)
    return np.array([[upper_quantile(radii[:, i], p) for p in ps]
                     for i in range(len(alphas))])


@dataclass(frozen=True)
class Snapshot:
    replicate: int
    kind: str
    values: np.ndarray


def posterior_snapshots(model: BeliefModel, count: int, seed: int, psi_grid) -> list[Snapshot]:
    """Posterior density (or CDF) tables for ``count`` random data replicates."""
    if count < 1:
        raise ValueError("snapshot count must be >= 1")
    psi_grid = np.asarray(psi_grid, dtype=float)
    posts = _draw_posts(model, seed, 0, count)
    out = []
    for i, post in enumerate(posts):
        kind, values = model.posterior_table(post, psi_grid)
        out.append(Snapshot(i, kind, np.asarray(values, dtype=float)))
    return out
