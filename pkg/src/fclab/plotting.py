"""SVG plots rendered purely from result CSV files."""
from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed salt makes SVG element ids, and hence whole files, reproducible
matplotlib.rcParams["svg.hashsalt"] = "fclab"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import CURVE_COLUMNS, SNAPSHOT_COLUMNS, SOLVE_COLUMNS, read_csv  # noqa: E402

log = logging.getLogger(__name__)

KINDS = ("curve", "contour", "snapshots")


class SchemaError(ValueError):
    pass


def _require(columns, expected, kind):
    missing = [c for c in expected if c not in columns]
    if missing:
        raise SchemaError(f"{kind} plot needs columns {expected}; missing {missing}")


def contour_monotone(grid: np.ndarray) -> bool:
    """Rows (alpha) nonincreasing in p, columns (p) nondecreasing in alpha."""
    return bool(np.all(np.diff(grid, axis=1) <= 0) and np.all(np.diff(grid, axis=0) >= 0))


def _save(fig, out: Path, meta: dict):
    desc = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
    fig.savefig(out, format="svg", metadata={"Date": None, "Description": desc})
    plt.close(fig)


def plot_curve(columns, rows, meta, out: Path):
    if "epsilon_solved" in columns:
        _require(columns, SOLVE_COLUMNS, "curve")
        series = defaultdict(list)
        for r in rows:
            series[(r["alpha"], r["p"])].append((int(r["n"]), float(r["epsilon_solved"])))
        fig, ax = plt.subplots(figsize=(5, 4))
        for (a, p), pts in sorted(series.items()):
            pts.sort()
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                    label=f"alpha={a}, p={p}")
        if any(len(v) > 1 for v in series.values()):
            ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("epsilon")
    else:
        _require(columns, CURVE_COLUMNS, "curve")
        series = defaultdict(list)
        for r in rows:
            series[(r["n"], r["sigma"], r["alpha"])].append(
                (float(r["epsilon"]), float(r["p_hat"])))
        fig, ax = plt.subplots(figsize=(5, 4))
        for (n, sigma, a), pts in series.items():
            pts.sort()
            label = f"n={n}" + (f", sigma={sigma}" if sigma else "") + f", alpha={a}"
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker=".", label=label)
        ax.set_xlabel("epsilon")
        ax.set_ylabel("p")
        ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=7)
    _save(fig, out, meta)


def contour_grids(columns, rows) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    _require(columns, SOLVE_COLUMNS, "contour")
    by_n = defaultdict(dict)
    for r in rows:
        by_n[int(r["n"])][(float(r["alpha"]), float(r["p"]))] = float(r["epsilon_solved"])
    grids = {}
    for n, cells in sorted(by_n.items()):
        alphas = np.array(sorted({a for a, _ in cells}))
        ps = np.array(sorted({p for _, p in cells}))
        grid = np.array([[cells.get((a, p), np.nan) for p in ps] for a in alphas])
        grids[n] = (alphas, ps, grid)
    return grids


def plot_contour(columns, rows, meta, out: Path):
    grids = contour_grids(columns, rows)
    fig, axes = plt.subplots(1, len(grids), figsize=(4.2 * len(grids), 4), squeeze=False)
    for ax, (n, (alphas, ps, grid)) in zip(axes[0], grids.items()):
        if not contour_monotone(grid):
            log.warning("epsilon grid for n=%s is not monotone in alpha and p", n)
        if len(alphas) > 1 and len(ps) > 1:
            cs = ax.contour(alphas, ps, grid.T, levels=10)
            ax.clabel(cs, fontsize=6)
        else:
            ax.scatter(np.repeat(alphas, len(ps)), np.tile(ps, len(alphas)), c=grid.ravel())
        if 0.5 in alphas and 0.95 in ps:
            i, j = list(alphas).index(0.5), list(ps).index(0.95)
            ax.plot([0.5], [0.95], marker="x", color="k", markersize=9)
            ax.annotate(f"{grid[i, j]:.3f}", (0.5, 0.95), textcoords="offset points",
                        xytext=(6, -12), fontsize=7)
        ax.set_title(f"n = {n}")
        ax.set_xlabel("alpha")
        ax.set_ylabel("p")
    _save(fig, out, meta)


def plot_snapshots(columns, rows, meta, out: Path):
    _require(columns, SNAPSHOT_COLUMNS, "snapshots")
    panels = defaultdict(lambda: defaultdict(list))
    ball = {}
    for r in rows:
        key = (r["n"], r["sigma"])
        panels[key][r["replicate"]].append((float(r["psi"]), float(r["value"])))
        ball[key] = (float(r["psi0"]), float(r["radius"]), r["kind"])
    fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.6), squeeze=False)
    for ax, (key, reps) in zip(axes[0], panels.items()):
        psi0, radius, kind = ball[key]
        ax.axvspan(psi0 - radius, psi0 + radius, color="tab:green", alpha=0.25)
        for pts in reps.values():
            pts.sort()
            ax.plot([x for x, _ in pts], [y for _, y in pts], lw=1)
        ax.axvline(psi0, color="k", lw=0.6, ls="--")
        ax.set_title(f"n = {key[0]}" + (f", sigma = {key[1]}" if key[1] else ""))
        ax.set_xlabel("psi")
        ax.set_ylabel("posterior " + kind)
    _save(fig, out, meta)


def plot(csv_path: str | Path, kind: str, out: str | Path | None = None) -> Path:
    """Render ``csv_path`` as an SVG; never re-runs any simulation."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    csv_path = Path(csv_path)
    columns, rows, meta = read_csv(csv_path)
    if not rows:
        raise SchemaError(f"{csv_path} has no data rows")
    out = Path(out) if out else csv_path.with_suffix(f".{kind}.svg")
    {"curve": plot_curve, "contour": plot_contour, "snapshots": plot_snapshots}[kind](
        columns, rows, meta, out)
    return out
