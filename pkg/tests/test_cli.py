import csv
import filecmp
import shutil

import numpy as np
import pytest

from serofoi.cli import main

TOY = """
output = "unused"
[sampler]
iterations = 300
burn_in = 50
M = 20
seed = 3
"""

GRID = """
[model]
kind = "varicella"
[design]
kind = "grid"
years = [2000, 2002]
ages = [1, 4]
[synthetic]
theta = [1.2566, 1.0, 0.5, 0.08, 0.11, 0.06, 0.03]
n_per_box = 5
[sampler]
iterations = 60
burn_in = 10
M = 5
sigma = 0.05
seed = 4
"""


@pytest.fixture
def toy_cfg(tmp_path):
    path = tmp_path / "toy.toml"
    path.write_text(TOY)
    return path


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    return not (cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files) and \
        all(filecmp.cmp(a / f, b / f, shallow=False) for f in cmp.common_files)


def test_simulate_then_fit(tmp_path, toy_cfg, capsys):
    assert main(["simulate", "--config", str(toy_cfg), "--out", str(tmp_path / "sim")]) == 0
    rows = read(tmp_path / "sim" / "data.csv")
    assert len(rows) == 6 and all(int(r["n_tested"]) == 10 for r in rows)
    assert len(read(tmp_path / "sim" / "individuals.csv")) == 60

    out = tmp_path / "fit"
    assert main(["fit", "--config", str(toy_cfg), "--data", str(tmp_path / "sim" / "data.csv"),
                 "--out", str(out)]) == 0
    chain = read(out / "chain_0.csv")
    assert len(chain) == 300
    assert list(chain[0]) == ["iteration", "gamma", "log_lik", "accepted", "scale"]
    summary = read(out / "summary.csv")
    assert summary[0]["parameter"] == "gamma"
    assert {"mean", "sd", "q2.5", "q5", "q50", "q95", "q97.5"} <= set(summary[0])
    assert (out / "acf.csv").exists() and (out / "diagnostics.csv").exists()
    assert "iterations" in capsys.readouterr().out


def test_fit_is_bit_reproducible(tmp_path, toy_cfg):
    main(["simulate", "--config", str(toy_cfg), "--out", str(tmp_path / "sim")])
    data = str(tmp_path / "sim" / "data.csv")
    # same output directory both times, since the effective config records it
    main(["fit", "--config", str(toy_cfg), "--data", data, "--out", str(tmp_path / "a"),
          "--seed", "11"])
    shutil.copytree(tmp_path / "a", tmp_path / "b")
    shutil.rmtree(tmp_path / "a")
    main(["fit", "--config", str(toy_cfg), "--data", data, "--out", str(tmp_path / "a"),
          "--seed", "11"])
    assert same_tree(tmp_path / "a", tmp_path / "b")
    main(["fit", "--config", str(toy_cfg), "--data", data, "--out", str(tmp_path / "c"),
          "--seed", "12"])
    assert not filecmp.cmp(tmp_path / "a" / "chain_0.csv", tmp_path / "c" / "chain_0.csv",
                           shallow=False)


def test_fit_without_data_samples_prior(tmp_path):
    cfg = tmp_path / "prior.toml"
    cfg.write_text("[sampler]\niterations = 40000\nburn_in = 1000\nsigma = 2.0\nseed = 5\n")
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    s = read(tmp_path / "o" / "summary.csv")[0]
    # uniform(0, 5) prior: mean 2.5, sd 5 / sqrt(12)
    assert float(s["mean"]) == pytest.approx(2.5, abs=0.1)
    assert float(s["sd"]) == pytest.approx(5 / np.sqrt(12), abs=0.05)


def test_apt_fit_writes_every_level(tmp_path):
    cfg = tmp_path / "apt.toml"
    cfg.write_text(TOY + "algorithm = 'apt'\nlevels = 3\n")
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    for lvl in range(3):
        assert len(read(tmp_path / "o" / f"chain_{lvl}.csv")) == 300
    diag = read(tmp_path / "o" / "diagnostics.csv")
    assert {"beta_0", "beta_2", "swap_level", "swap_accepted"} <= set(diag[0])
    assert all(float(r["beta_0"]) == 1.0 for r in diag)


def test_predict_holdout(tmp_path):
    cfg = tmp_path / "grid.toml"
    cfg.write_text(GRID)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")])
    code = main(["predict", "--config", str(cfg), "--data", str(tmp_path / "sim" / "data.csv"),
                 "--holdout-year", "2002", "--out", str(tmp_path / "pred")])
    assert code == 0
    rows = read(tmp_path / "pred" / "prediction.csv")
    assert [int(r["age"]) for r in rows] == [1, 2, 3, 4]
    for r in rows:
        assert float(r["q05"]) <= float(r["median"]) <= float(r["q95"])


def test_predict_missing_year(tmp_path, capsys):
    cfg = tmp_path / "grid.toml"
    cfg.write_text(GRID)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")])
    code = main(["predict", "--config", str(cfg), "--data", str(tmp_path / "sim" / "data.csv"),
                 "--holdout-year", "1990", "--out", str(tmp_path / "pred")])
    assert code == 1 and "1990" in capsys.readouterr().err


def test_validate_config(tmp_path, toy_cfg, capsys):
    assert main(["validate-config", "--config", str(toy_cfg)]) == 0
    assert "[sampler]" in capsys.readouterr().out
    bad = tmp_path / "bad.toml"
    bad.write_text("[sampler]\nwhatever = 1\n")
    assert main(["validate-config", "--config", str(bad)]) == 1
    assert "whatever" in capsys.readouterr().err


def test_bad_data_file(tmp_path, toy_cfg, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("year,age,n_tested,n_seropositive\n0,0,3,x\n")
    assert main(["fit", "--config", str(toy_cfg), "--data", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_negative_seed(toy_cfg):
    assert main(["fit", "--config", str(toy_cfg), "--seed", "-1"]) == 2


def test_toy_convergence_single_rung(tmp_path):
    cfg = tmp_path / "conv.toml"
    cfg.write_text(TOY + "[convergence]\nmax_power = 0\nruns = 2\n")
    assert main(["toy-convergence", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    rows = read(tmp_path / "c" / "convergence.csv")
    assert len(rows) == 1 and rows[0]["order"] == "nan"
    assert len(read(tmp_path / "c" / "convergence_runs.csv")) == 2
