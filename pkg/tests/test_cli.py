from __future__ import annotations

import json

import numpy as np
import pytest

from constrained_coreset.cli import main
from constrained_coreset.datasets import read_coreset_csv, read_points_csv, write_matrix_csv
from constrained_coreset.metric import MetricSpace


@pytest.fixture
def data(tmp_path):
    path = tmp_path / "p.csv"
    assert main(["gen", "--kind", "planted_outliers", "--n", "300", "--k", "3", "--m", "6", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_gen_output(data):
    pts, w = read_points_csv(data)
    assert pts.shape == (306, 2) and np.all(w == 1)


def test_approx_build_eval_chain(tmp_path, data):
    a = tmp_path / "a.json"
    assert main(["approx", "--in", str(data), "--k", "3", "--m", "6", "--beta", "1", "--out", str(a)]) == 0
    approx = json.loads(a.read_text())
    assert len(approx["center_ids"]) == 3 and len(approx["outlier_ids"]) == 6

    s, r = tmp_path / "s.csv", tmp_path / "b.json"
    assert main(["build", "--in", str(data), "--k", "3", "--m", "6", "--gamma", "40", "--centers", str(a), "--out", str(s), "--report", str(r)]) == 0
    size = json.loads(r.read_text())["size"]
    assert size["outlier"] == 6 and size["reconciled"]
    coreset, tags = read_coreset_csv(s)
    assert len(tags) == size["total"]

    e = tmp_path / "e.json"
    args = ["eval", "--in", str(data), "--coreset", str(s), "--k", "3", "--m", "6", "--trials", "9", "--report", str(e)]
    assert main(args + ["--assert-eps", "0.5"]) == 0
    rep = json.loads(e.read_text())
    assert rep["trials"] == 9 and rep["max_rel_err"] == max(t["rel_err"] for t in rep["per_trial"])
    assert main(args + ["--assert-eps", "1e-12"]) == 4


def test_eval_with_matroid_constraint(tmp_path, data):
    s = tmp_path / "s.csv"
    assert main(["build", "--in", str(data), "--k", "3", "--gamma", "4000", "--out", str(s)]) == 0
    spec = '{"type": "uniform_matroid", "r": 2}'
    assert main(["eval", "--in", str(data), "--coreset", str(s), "--k", "3", "--trials", "3", "--constraint", spec, "--report", str(tmp_path / "e.json")]) == 0


def test_oat_and_decomp(tmp_path, data):
    o = tmp_path / "o.json"
    assert main(["oat", "--constraint", '{"type": "uniform_matroid", "k": 4, "r": 2}', "--k", "4", "--trials", "20", "--U", "10", "--report", str(o)]) == 0
    rep = json.loads(o.read_text())
    assert rep["sandwich"]["within_bound"] and rep["knapsack"][0]["ratio"] > 10
    d = tmp_path / "d.json"
    assert main(["decomp", "--in", str(data), "--k", "3", "--m", "6", "--report", str(d)]) == 0
    assert all(all(c["checks"].values()) for c in json.loads(d.read_text())["clusters"])


def test_explicit_matrix_input(tmp_path):
    x = np.random.default_rng(0).normal(size=(40, 2))
    write_matrix_csv(tmp_path / "m.csv", np.linalg.norm(x[:, None] - x[None], axis=2))
    s = tmp_path / "s.csv"
    assert main(["build", "--matrix", str(tmp_path / "m.csv"), "--k", "2", "--gamma", "10", "--out", str(s)]) == 0
    space = MetricSpace.explicit(np.loadtxt(tmp_path / "m.csv", delimiter=","))
    S, _ = read_coreset_csv(s, space)
    assert S.total_weight == pytest.approx(40)
    assert main(["eval", "--matrix", str(tmp_path / "m.csv"), "--coreset", str(s), "--k", "2", "--trials", "3", "--report", str(tmp_path / "e.json")]) == 0


def test_run_config(tmp_path):
    cfg = {"dataset": {"kind": "uniform_cube", "n": 120, "d": 2, "k": 2, "seed": 0}, "k": 2, "gamma": 50, "trials": 4, "seed": 1}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["run", "--config", str(tmp_path / "c.json"), "--report", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["trials"] == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["build", "--in", "missing.csv", "--k", "2", "--gamma", "5", "--out", "x.csv"],
        ["oat", "--constraint", '{"type": "nope"}'],
    ],
)
def test_invalid_configuration_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_gamma_below_one(tmp_path, data):
    assert main(["build", "--in", str(data), "--k", "3", "--gamma", "0.5", "--out", str(tmp_path / "x.csv")]) == 2


def test_solver_failure_exit_code(tmp_path, data):
    s = tmp_path / "s.csv"
    assert main(["build", "--in", str(data), "--k", "2", "--gamma", "10", "--out", str(s)]) == 0
    spec = '{"type": "knapsack", "A": [[5.0, 5.0]]}'
    assert main(["eval", "--in", str(data), "--coreset", str(s), "--k", "2", "--trials", "2", "--constraint", spec, "--report", str(tmp_path / "e.json")]) == 3
