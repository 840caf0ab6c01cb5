import json
import subprocess
import sys
import time

import numpy as np
import pytest

from fclab.cli import main
from fclab.experiments import (
    ConfigError,
    ExperimentPlan,
    ResultTable,
    format_cell,
    load_plan,
    preset,
    read_csv,
    smoke_plan,
)
from fclab.plotting import SchemaError, contour_grids, contour_monotone, plot


def write_config(tmp_path, **overrides):
    plan = smoke_plan().model_dump()
    plan.update(output_dir=str(tmp_path / "out"), **overrides)
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    return path


def rows_of(path):
    return read_csv(path)[1]


def test_empty_epsilon_grid_is_config_error(tmp_path, capsys):
    code = main(["--config", str(write_config(tmp_path, epsilon=[])), "--no-plot"])
    assert code == 2
    assert "epsilon" in capsys.readouterr().err


def test_unknown_field_is_rejected(tmp_path, capsys):
    assert main(["--config", str(write_config(tmp_path, colour="red")), "--no-plot"]) == 2
    assert "colour" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "model": "uniform-support",\n  "n": [1,\n}\n')
    assert main(["--config", str(path)]) == 2
    assert "line 4" in capsys.readouterr().err


def test_unknown_model_tag(tmp_path):
    with pytest.raises(ConfigError, match="model"):
        load_plan(write_config(tmp_path, model="cauchy"))


def test_missing_true_params(tmp_path):
    with pytest.raises(ConfigError, match="thetay0"):
        load_plan(write_config(tmp_path, true_params={"thetax0": 10.0}))


def test_unknown_figure_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["--figure", "11"])
    assert info.value.code == 2


def test_figure2_row_at_case_analysis_point(tmp_path):
    out = tmp_path / "fig2"
    assert main(["--figure", "2", "--k", "2000", "--out", str(out), "--no-plot"]) == 0
    rows = rows_of(out / "results.csv")
    [row] = [r for r in rows if r["n"] == "1" and float(r["epsilon"]) == 0.3]
    assert float(row["p_hat"]) == 1.0
    assert (out / "snapshots.csv").exists()


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "a")]) == 0
    assert main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()


def test_seed_override_changes_results(tmp_path):
    cfg = write_config(tmp_path, epsilon=[1.0, 3.0], n=[20])
    main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "a")])
    main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "b"), "--seed", "7"])
    a, b = rows_of(tmp_path / "a/results.csv"), rows_of(tmp_path / "b/results.csv")
    assert b[0]["seed"] == "7"
    assert [r["p_hat"] for r in a] != [r["p_hat"] for r in b]


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, model="gaussian-ratio",
                       true_params={"thetax0": 0.1, "thetay0": 0.01},
                       n=[5], epsilon=[0.0, 4.0], k=5, quad_tol=1e-300)
    assert main(["--config", str(cfg), "--no-plot"]) == 3
    err = capsys.readouterr().err
    assert "gaussian-ratio" in err and "replicate 0" in err


def test_outputs_carry_seed_and_hash(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    plan = load_plan(cfg)
    meta = json.loads((tmp_path / "o/results_meta.json").read_text())
    assert meta["seed"] == plan.seed
    assert meta["config_sha256"] == plan.content_hash()
    assert meta["config"]["k"] == plan.k
    header = (tmp_path / "o/results.csv").read_text().splitlines()[0]
    assert header == f"# fclab seed={plan.seed} config_sha256={plan.content_hash()}"
    svg = (tmp_path / "o/results.svg").read_text()
    assert plan.content_hash() in svg and f"seed={plan.seed}" in svg


def test_hash_ignores_output_dir():
    plan = smoke_plan()
    moved = ExperimentPlan.model_validate({**plan.model_dump(), "output_dir": "elsewhere"})
    assert moved.content_hash() == plan.content_hash()


def test_csv_number_format_round_trips():
    x = 0.1 + 0.2
    assert float(format_cell(x)) == x
    assert format_cell(3) == "3"
    assert format_cell(1e-20) == "9.9999999999999995e-21"
    with pytest.raises(ValueError):
        format_cell(float("nan"))


def test_workers_env_fallback(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "a"), "--workers", "1"])
    monkeypatch.setenv("FCL_WORKERS", "2")
    main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()
    monkeypatch.setenv("FCL_WORKERS", "0")
    assert main(["--config", str(cfg), "--no-plot", "--out", str(tmp_path / "c")]) == 2


def test_smoke_run_is_fast(tmp_path):
    cfg = write_config(tmp_path)
    t0 = time.perf_counter()
    assert main(["--config", str(cfg), "--workers", "1"]) == 0
    assert time.perf_counter() - t0 < 60


def test_console_script_entry_point(tmp_path):
    cfg = write_config(tmp_path, k=200)
    proc = subprocess.run([sys.executable, "-m", "fclab.cli", "--config", str(cfg), "--no-plot"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "results.csv" in proc.stdout


# -- plotting ---------------------------------------------------------------

def test_plot_single_row(tmp_path):
    table = ResultTable(["model", "n", "sigma", "alpha", "epsilon", "p_hat", "mc_se", "k", "seed"])
    table.append(model="uniform-support", n=1, sigma="", alpha=0.5, epsilon=0.3, p_hat=1.0,
                 mc_se=0.0, k=10, seed=1)
    table.write(tmp_path / "one.csv", "fclab seed=1 config_sha256=abc")
    out = plot(tmp_path / "one.csv", "curve", tmp_path / "one.svg")
    text = out.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_plot_schema_mismatch_lists_columns(tmp_path):
    cfg = write_config(tmp_path)
    main(["--config", str(cfg), "--no-plot"])
    csv_path = tmp_path / "out/results.csv"
    with pytest.raises(SchemaError, match="epsilon_solved"):
        plot(csv_path, "contour")
    assert main(["plot", str(csv_path), "--kind", "snapshots"]) == 2


def test_plot_is_pure_function_of_csv(tmp_path):
    cfg = write_config(tmp_path)
    main(["--config", str(cfg), "--no-plot"])
    csv_path = tmp_path / "out/results.csv"
    a = plot(csv_path, "curve", tmp_path / "a.svg").read_bytes()
    b = plot(csv_path, "curve", tmp_path / "b.svg").read_bytes()
    assert a == b


def test_figure2_curves_monotone(tmp_path):
    out = tmp_path / "fig2"
    assert main(["--figure", "2", "--k", "1000", "--out", str(out)]) == 0
    assert (out / "figure2.svg").exists() and (out / "figure2_snapshots.svg").exists()
    rows = rows_of(out / "results.csv")
    for n in {r["n"] for r in rows}:
        p = [float(r["p_hat"]) for r in rows if r["n"] == n]
        assert all(b <= a for a, b in zip(p, p[1:]))


def test_figure7_contours_monotone(tmp_path):
    out = tmp_path / "fig7"
    assert main(["--figure", "7", "--k", "1000", "--out", str(out)]) == 0
    columns, rows, _ = read_csv(out / "results.csv")
    grids = contour_grids(columns, rows)
    assert sorted(grids) == [3, 20, 100]
    for alphas, ps, grid in grids.values():
        assert contour_monotone(grid)
        assert 0.5 in alphas and 0.95 in ps
    assert "figure7.svg" in str(list(out.iterdir()))


def test_contour_monotone_detects_violation():
    assert contour_monotone(np.array([[2.0, 1.0], [3.0, 2.0]]))
    assert not contour_monotone(np.array([[1.0, 2.0], [3.0, 2.0]]))


def test_presets_cover_figures():
    tags = {f: preset(f).model for f in range(2, 10)}
    assert tags[2] == "uniform-support" and tags[3] == "uniform-product"
    assert {tags[4], tags[5], tags[6]} == {"gaussian-ratio"}
    assert tags[7] == tags[8] == "gaussian-conjugate" and tags[9] == "coef-variation"
    assert preset(7).kind == "contour" and preset(6).kind == "snapshots"
    with pytest.raises(ConfigError):
        preset(10)
