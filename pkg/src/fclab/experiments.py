"""Experiment plans, figure presets and CSV result tables."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import engine
from .gaussian_models import CoefVarModel, GaussianConjugateModel, GaussianRatioModel
from .uniform_models import UniformProductModel, UniformSupportModel

log = logging.getLogger(__name__)

ModelTag = Literal["uniform-support", "uniform-product", "gaussian-ratio",
                   "gaussian-conjugate", "coef-variation"]

CURVE_COLUMNS = ["model", "n", "sigma", "alpha", "epsilon", "p_hat", "mc_se", "k", "seed"]
SOLVE_COLUMNS = ["model", "n", "alpha", "p", "epsilon_solved", "k", "seed"]
SNAPSHOT_COLUMNS = ["model", "n", "sigma", "replicate", "kind", "psi", "value", "psi0",
                    "radius", "seed"]

REQUIRED_PARAMS = {
    "uniform-support": ("theta0",),
    "uniform-product": ("thetax0", "thetay0"),
    "gaussian-ratio": ("thetax0", "thetay0"),
    "gaussian-conjugate": ("theta0", "sigma2"),
    "coef-variation": ("mu0", "sigma0"),
}


class ConfigError(ValueError):
    """Plan failed to parse or validate."""


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelTag
    kind: Literal["curve", "solve", "contour", "snapshots"] = "curve"
    true_params: dict[str, float]
    prior: dict[str, Any] = Field(default_factory=dict)
    n: list[int]
    sigma: list[float] = Field(default_factory=lambda: [1.0])
    epsilon: list[float] = Field(default_factory=list)
    alpha: list[float] = Field(default_factory=lambda: [0.5])
    p: list[float] = Field(default_factory=list)
    k: int = 100_000
    m_post: int = 2000
    quad_tol: float = 1e-6
    seed: int = 0
    snapshots: int = 0
    snapshot_radius: Optional[float] = None
    psi_grid: Optional[list[float]] = None
    output_dir: str = "results"
    figure: Optional[int] = None

    @field_validator("n", "sigma", "alpha")
    @classmethod
    def _nonempty(cls, v, info):
        if not v:
            raise ValueError(f"{info.field_name} grid must be nonempty")
        return v

    @field_validator("alpha", "p")
    @classmethod
    def _probabilities(cls, v):
        for x in v:
            if not 0 < x < 1:
                raise ValueError(f"values must lie in (0, 1), got {x}")
        return v

    @field_validator("epsilon")
    @classmethod
    def _radii(cls, v):
        if any(e < 0 for e in v):
            raise ValueError("radii must be nonnegative")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("radii must be strictly increasing")
        return v

    @field_validator("k", "m_post")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if not 0 <= v < 2**64:
            raise ValueError("must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        missing = [p for p in REQUIRED_PARAMS[self.model] if p not in self.true_params]
        if missing:
            raise ValueError(f"true_params missing {missing} for model {self.model}")
        if self.kind == "curve" and not self.epsilon:
            raise ValueError("epsilon grid must be nonempty for a curve plan")
        if self.kind in ("solve", "contour") and not self.p:
            raise ValueError(f"p grid must be nonempty for a {self.kind} plan")
        if self.kind == "contour" and (sorted(set(self.alpha)) != self.alpha
                                       or sorted(set(self.p)) != self.p):
            raise ValueError("alpha and p grids must be strictly increasing for a contour plan")
        if self.kind == "snapshots" and self.snapshots < 1:
            raise ValueError("snapshots must be >= 1 for a snapshots plan")
        if self.model == "coef-variation" and min(self.n) < 2:
            raise ValueError("coef-variation needs n >= 2")
        return self

    def content_hash(self) -> str:
        """SHA-256 of the plan, ignoring where results are written."""
        payload = self.model_dump(exclude={"output_dir"})
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def load_plan(path: str | Path) -> ExperimentPlan:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_plan(data, source=str(path))


def parse_plan(data: dict, source: str = "<config>") -> ExperimentPlan:
    from pydantic import ValidationError

    try:
        return ExperimentPlan.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<plan>"
            lines.append(f"{source}: field '{loc}': {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


def build_model(plan: ExperimentPlan, n: int, sigma: float) -> engine.BeliefModel:
    tp, pr = plan.true_params, plan.prior
    if plan.model == "uniform-support":
        return UniformSupportModel(tp["theta0"], n)
    if plan.model == "uniform-product":
        return UniformProductModel(tp["thetax0"], tp["thetay0"], n, n)
    if plan.model == "gaussian-ratio":
        return GaussianRatioModel(tp["thetax0"], tp["thetay0"], sigma, n, plan.quad_tol)
    if plan.model == "gaussian-conjugate":
        return GaussianConjugateModel(tp["theta0"], tp["sigma2"], pr.get("mu", 0.0),
                                      pr.get("tau2", 100.0), n)
    return CoefVarModel(tp["mu0"], tp["sigma0"], n, plan.m_post,
                        pr.get("kind", "independence"))


def _noise_levels(plan: ExperimentPlan) -> list:
    # only the ratio model sweeps sigma; the others take noise from true_params
    return plan.sigma if plan.model == "gaussian-ratio" else [None]


def _sigma_label(plan: ExperimentPlan, sigma):
    if sigma is not None:
        return sigma
    tp = plan.true_params
    if "sigma2" in tp:
        return tp["sigma2"] ** 0.5
    return tp.get("sigma0", "")


def default_psi_grid(plan: ExperimentPlan) -> list[float]:
    tp = plan.true_params
    if plan.model == "uniform-support":
        psi0 = tp["theta0"]
        return np.linspace(0.0, 3.0 * psi0, 301).tolist()
    if plan.model == "uniform-product":
        psi0 = tp["thetax0"] * tp["thetay0"]
        return np.linspace(0.0, 4.0 * psi0, 401).tolist()
    if plan.model == "gaussian-ratio":
        psi0 = tp["thetax0"] / tp["thetay0"]
        return np.linspace(-3.0 * abs(psi0), 3.0 * abs(psi0), 601).tolist()
    if plan.model == "gaussian-conjugate":
        return np.linspace(tp["theta0"] - 4.0, tp["theta0"] + 4.0, 401).tolist()
    psi0 = tp["sigma0"] / tp["mu0"]
    return np.linspace(-3.0 * abs(psi0), 3.0 * abs(psi0), 601).tolist()


class ResultTable:
    """Rows of one fixed column schema, serialised as CSV."""

    def __init__(self, columns: list[str], rows: list[dict] | None = None):
        self.columns = columns
        self.rows = rows or []

    def append(self, **row):
        self.rows.append(row)

    def to_csv(self, header_comment: str = "") -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_cell(row[c]) for c in self.columns])
        return buf.getvalue()

    def write(self, path: Path, header_comment: str = ""):
        path.write_text(self.to_csv(header_comment))


def format_cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not np.isfinite(v):
            raise ValueError(f"non-finite value {v} in result table")
        return f"{float(v):.17g}"
    return str(v)


def read_csv(path: str | Path) -> tuple[list[str], list[dict], dict]:
    """Read a results CSV; returns (columns, rows, header metadata)."""
    meta = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for part in line[1:].split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key] = val
        else:
            body.append(line)
    reader = csv.DictReader(body)
    rows = list(reader)
    return list(reader.fieldnames or []), rows, meta


def run_plan(plan: ExperimentPlan, workers=None) -> tuple[dict[str, ResultTable], int]:
    """Execute a plan.

    Returns the tables keyed by output file name and the number of
    replicates whose critical radius hit the top of its search bracket.
    """
    tables: dict[str, ResultTable] = {}
    flagged = 0
    if plan.kind == "curve":
        table = ResultTable(CURVE_COLUMNS)
        for n in plan.n:
            for sigma in _noise_levels(plan):
                model = build_model(plan, n, sigma)
                for alpha in plan.alpha:
                    for r in engine.curve(model, plan.epsilon, alpha, plan.k, plan.seed, workers):
                        table.append(model=plan.model, n=n, sigma=_sigma_label(plan, sigma),
                                     alpha=alpha, epsilon=r.epsilon, p_hat=r.p_hat,
                                     mc_se=r.mc_se, k=r.k, seed=plan.seed)
        tables["results.csv"] = table
    elif plan.kind in ("solve", "contour"):
        table = ResultTable(SOLVE_COLUMNS)
        for n in plan.n:
            for sigma in _noise_levels(plan):
                model = build_model(plan, n, sigma)
                radii, flags = engine.radius_matrix(model, plan.alpha, plan.k, plan.seed, workers)
                flagged += int(flags.sum())
                for i, alpha in enumerate(plan.alpha):
                    for p in plan.p:
                        eps = engine.upper_quantile(radii[:, i], p)
                        table.append(model=plan.model, n=n, alpha=alpha, p=p,
                                     epsilon_solved=eps, k=plan.k, seed=plan.seed)
        tables["results.csv"] = table
    if plan.snapshots > 0:
        name = "results.csv" if plan.kind == "snapshots" else "snapshots.csv"
        tables[name] = snapshot_table(plan)
    return tables, flagged


def snapshot_table(plan: ExperimentPlan) -> ResultTable:
    grid = plan.psi_grid or default_psi_grid(plan)
    table = ResultTable(SNAPSHOT_COLUMNS)
    for n in plan.n:
        for sigma in _noise_levels(plan):
            model = build_model(plan, n, sigma)
            psi0 = model.true_functional()
            radius = plan.snapshot_radius if plan.snapshot_radius is not None else (
                plan.epsilon[0] if plan.epsilon else 0.0)
            for snap in engine.posterior_snapshots(model, plan.snapshots, plan.seed, grid):
                for psi, val in zip(grid, snap.values):
                    table.append(model=plan.model, n=n, sigma=_sigma_label(plan, sigma),
                                 replicate=snap.replicate, kind=snap.kind, psi=psi,
                                 value=val, psi0=psi0, radius=radius, seed=plan.seed)
    return table


def write_results(plan: ExperimentPlan, tables: dict[str, ResultTable], out_dir: Path,
                  flagged: int = 0) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = plan.content_hash()
    comment = f"fclab seed={plan.seed} config_sha256={digest}"
    written = []
    for name, table in tables.items():
        path = out_dir / name
        table.write(path, comment)
        written.append(path)
    meta = {
        "seed": plan.seed,
        "config_sha256": digest,
        "config": plan.model_dump(),
        "flagged_replicates": flagged,
        "files": [p.name for p in written],
    }
    meta_path = out_dir / "results_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written.append(meta_path)
    return written


# -- figure presets --------------------------------------------------------

FIGURES = range(2, 10)


def preset(figure: int) -> ExperimentPlan:
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure}; choose from 2..9")
    text = resources.files("fclab.presets").joinpath(f"figure{figure}.json").read_text()
    return parse_plan(json.loads(text), source=f"figure{figure} preset")


def smoke_plan() -> ExperimentPlan:
    text = resources.files("fclab.presets").joinpath("smoke.json").read_text()
    return parse_plan(json.loads(text), source="smoke preset")
