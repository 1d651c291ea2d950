import json

import numpy as np
import pytest

from mixopt import PotentialParams, build_potentials
from mixopt.cli import main
from mixopt.io import read_similarity
from synthetic import make_records, to_jsonl

THREE = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]]


def write_matrix(path, tasks, m, metric="EXTERNAL"):
    path.write_text(json.dumps({"tasks": tasks, "metric": metric, "matrix": m}))
    return str(path)


@pytest.fixture
def preds(tmp_path):
    _, recs = make_records(n_tasks=3, n_examples=4, seed=7)
    path = tmp_path / "preds.jsonl"
    path.write_text(to_jsonl(recs))
    return str(path)


def run(*args):
    return main([str(a) for a in args])


def load(path):
    return json.loads(open(path).read())


# similarity
def test_similarity_two_task_pmi(tmp_path):
    _, recs = make_records(n_tasks=2, n_examples=2, seed=1)
    src = tmp_path / "p.jsonl"
    src.write_text(to_jsonl(recs))
    out = tmp_path / "s.json"
    assert run("similarity", "--in", src, "--out", out) == 0
    doc = load(out)
    m = np.array(doc["matrix"])
    assert doc["metric"] == "PMI" and m.shape == (2, 2)
    assert m[0, 0] == m[1, 1] == 0.0 and m[0, 1] == m[1, 0]


def test_similarity_rerun_byte_identical(preds, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("similarity", "--in", preds, "--out", a, "--metric", "jsd", "--threads", 1) == 0
    assert run("similarity", "--in", preds, "--out", b, "--metric", "jsd", "--threads", 4) == 0
    assert a.read_bytes() == b.read_bytes()


def test_similarity_csv_output_round_trips(preds, tmp_path):
    js, cs = tmp_path / "s.json", tmp_path / "s.csv"
    run("similarity", "--in", preds, "--out", js)
    run("similarity", "--in", preds, "--out", cs)
    solve_a, solve_b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("solve", "--in", js, "--out", solve_a) == 0
    assert run("solve", "--in", cs, "--out", solve_b) == 0
    assert load(solve_a)["p"] == load(solve_b)["p"]


def test_similarity_jsd_length_mismatch(tmp_path, capsys):
    recs = [
        {"model_task": m, "eval_task": e, "example_id": "q1", "dist": [0.5, 0.5]}
        for m in "ab" for e in "ab"
    ]
    recs[1]["dist"] = [0.2, 0.3, 0.5]
    src = tmp_path / "p.jsonl"
    src.write_text(to_jsonl(recs))
    assert run("similarity", "--in", src, "--metric", "jsd") == 2
    assert "q1" in capsys.readouterr().err


def test_similarity_malformed_line(tmp_path, capsys):
    src = tmp_path / "p.jsonl"
    src.write_text('{"model_task": "a", "eval_task": "a", "example_id": "x", "logprob": -1}\nnot json\n')
    assert run("similarity", "--in", src) == 2
    assert "line 2" in capsys.readouterr().err


def test_similarity_incomplete_pair(tmp_path, capsys):
    _, recs = make_records(n_tasks=3, n_examples=2, seed=0)
    recs = [r for r in recs if not (r["model_task"] == "task2" and r["eval_task"] == "task0")]
    src = tmp_path / "p.jsonl"
    src.write_text(to_jsonl(recs))
    assert run("similarity", "--in", src) == 3
    assert "task0" in capsys.readouterr().err


def test_similarity_coverage_warning(tmp_path, capsys):
    _, recs = make_records(n_tasks=2, n_examples=3, seed=0)
    recs = [r for r in recs if not (r["model_task"] == "task1" and r["example_id"] == "ex002")]
    src = tmp_path / "p.jsonl"
    src.write_text(to_jsonl(recs))
    assert run("similarity", "--in", src) == 0
    assert "warning" in capsys.readouterr().err


# spectrum
def test_spectrum_identity_and_exchange(tmp_path):
    out = tmp_path / "spec.json"
    assert run("spectrum", "--in", write_matrix(tmp_path / "i.json", ["a", "b", "c"], np.eye(3).tolist()), "--out", out) == 0
    assert load(out)["eigenvalues"] == [1.0, 1.0, 1.0]
    assert (tmp_path / "spec.csv").read_text().splitlines()[0] == "index,eigenvalue"
    assert run("spectrum", "--in", write_matrix(tmp_path / "x.json", ["a", "b"], [[0, 1], [1, 0]], "PMI"), "--out", out) == 0
    assert load(out)["eigenvalues"] == [1.0, -1.0]


def test_spectrum_invalid_matrix(tmp_path):
    bad = write_matrix(tmp_path / "bad.json", ["a", "b"], [[0, 1], [0.5, 0]])
    assert run("spectrum", "--in", bad) == 2


# solve
def test_solve_symmetric_uniform(tmp_path):
    out = tmp_path / "sol.json"
    assert run("solve", "--in", write_matrix(tmp_path / "s.json", ["a", "b"], [[1, 0], [0, 1]]), "--out", out) == 0
    doc = load(out)
    assert doc["p"] == [0.5, 0.5] and doc["kkt_residual"] <= 1e-10
    assert doc["beta"] == 20.0 and doc["lambda"] == 10.0 and "shift" in doc


def test_solve_three_task(tmp_path):
    out = tmp_path / "sol.json"
    src = write_matrix(tmp_path / "s.json", ["a", "b", "c"], THREE)
    assert run("solve", "--in", src, "--out", out, "--beta", 10, "--lambda", 10) == 0
    assert np.allclose(load(out)["p"], [3 / 7, 3 / 7, 1 / 7], atol=1e-9, rtol=0)
    assert load(out)["solver_path"] == "INTERIOR"


def test_solve_shift_off_indefinite(tmp_path, capsys):
    src = write_matrix(tmp_path / "x.json", ["a", "b"], [[0, 1], [1, 0]], "PMI")
    assert run("solve", "--in", src, "--shift", "off") == 2
    assert "NotPsd" in capsys.readouterr().err
    assert run("solve", "--in", src) == 0


def test_solve_csv_input(tmp_path, capsys):
    src = tmp_path / "s.csv"
    src.write_text("a,b\n1,0\n0,1\n")
    assert run("solve", "--in", src) == 0
    assert json.loads(capsys.readouterr().out)["p"] == [0.5, 0.5]


def test_missing_input(capsys):
    assert run("solve") == 2
    assert run("solve", "--in", "/nonexistent/file.json") == 2


# config precedence
def test_config_precedence(tmp_path, capsys):
    src = write_matrix(tmp_path / "s.json", ["a", "b", "c"], THREE)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta": 10, "solve": {"lambda": 10}}))
    assert run("solve", "--in", src, "--config", cfg) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["beta"], doc["lambda"]) == (10, 10)
    assert run("solve", "--in", src, "--config", cfg, "--beta", 30) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["beta"], doc["lambda"]) == (30, 10)


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"betta": 1}))
    assert run("gamma", "--config", cfg) == 2


def test_threads_env(tmp_path, monkeypatch, preds):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("MIXOPT_THREADS", "3")
    assert run("similarity", "--in", preds, "--out", a) == 0
    monkeypatch.setenv("MIXOPT_THREADS", "three")
    assert run("similarity", "--in", preds, "--out", b) == 2
    assert run("similarity", "--in", preds, "--out", b, "--threads", 1) == 0
    assert a.read_bytes() == b.read_bytes()


# discover
def test_discover_k1(tmp_path):
    s = np.random.default_rng(0).uniform(size=(5, 5))
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 0)
    src = write_matrix(tmp_path / "s.json", list("abcde"), s.tolist())
    out = tmp_path / "t.json"
    assert run("discover", "--in", src, "--k", 1, "--out", out) == 0
    doc = load(out)
    pot = build_potentials(read_similarity(src), PotentialParams())
    single = pot.unary - 0.5 * np.diag(pot.pairwise)
    assert doc["selected_indices"] == [int(np.argmax(single))]


def test_discover_full_trajectory_desc(tmp_path):
    src = write_matrix(tmp_path / "s.json", ["a", "b", "c"], THREE)
    out = tmp_path / "t.json"
    assert run("discover", "--in", src, "--k", 3, "--order", "desc", "--out", out) == 0
    doc = load(out)
    assert doc["mode"] == "desc_unary" and len(doc["affinities"]) == 2
    assert doc["f_values"] == sorted(doc["f_values"])


@pytest.mark.parametrize("k", [0, 4])
def test_discover_budget_out_of_range(tmp_path, k):
    src = write_matrix(tmp_path / "s.json", ["a", "b", "c"], THREE)
    assert run("discover", "--in", src, "--k", k) == 2


# sample
def solution_file(tmp_path, p, tasks=None):
    tasks = tasks or [f"t{i}" for i in range(len(p))]
    path = tmp_path / "sol.json"
    path.write_text(json.dumps({"tasks": tasks, "p": p, "nu": 0.0, "energy": 0.0, "solver_path": "INTERIOR"}))
    return str(path)


def test_sample_zero_and_vertex(tmp_path):
    sol = solution_file(tmp_path, [1.0, 0.0, 0.0])
    out = tmp_path / "plan.json"
    assert run("sample", "--in", sol, "--budget", 0, "--out", out) == 0
    assert load(out)["counts"] == [0, 0, 0]
    assert run("sample", "--in", sol, "--budget", 25000, "--out", out) == 0
    assert load(out)["counts"] == [25000, 0, 0]


def test_sample_manifest_reproducible(tmp_path):
    sol = solution_file(tmp_path, [0.5, 0.3, 0.2])
    caps = tmp_path / "caps.csv"
    caps.write_text("task_id,size\nt0,40\nt1,40\nt2,40\n")
    runs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        assert run("sample", "--in", sol, "--budget", 50, "--capacities", caps, "--seed", 9, "--out", out) == 0
        runs.append((out.read_bytes(), (tmp_path / f"{name}.manifest.csv").read_bytes()))
    assert runs[0] == runs[1]
    rows = runs[0][1].decode().splitlines()
    assert rows[0] == "task_id,instance_index" and len(rows) == 51


def test_sample_budget_exceeds_capacity(tmp_path):
    sol = solution_file(tmp_path, [0.5, 0.5])
    caps = tmp_path / "caps.csv"
    caps.write_text("t0,3\nt1,3\n")
    assert run("sample", "--in", sol, "--budget", 10, "--capacities", caps) == 2


# gamma
def test_gamma_outputs(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert run("gamma", "--n", 6, "--trials", 20, "--seed", 1, "--out", out) == 0
    assert "min gamma" in capsys.readouterr().out
    doc = load(out)
    assert doc["violations"] == 0 and len(doc["gammas"]) + doc["degenerate"] == 20
    hist = (tmp_path / "g.hist.csv").read_text().splitlines()
    assert hist[0] == "bin,bin_lo,bin_hi,count" and len(hist) == 21


def test_gamma_single_trial_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("gamma", "--n", 5, "--trials", 1, "--seed", 3, "--out", a) == 0
    assert run("gamma", "--n", 5, "--trials", 1, "--seed", 3, "--out", b, "--threads", 2) == 0
    assert a.read_bytes() == b.read_bytes()
