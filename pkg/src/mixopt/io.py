"""File formats: JSON documents and CSV side tables.

Floats are written with ``repr`` (shortest round-trip form), so reading a
file back reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .core import MixtureSolution, Potentials, SimilarityMatrix, validate_similarity
from .errors import MalformedRecord, MixoptError


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


# similarity matrices
def similarity_to_dict(s: SimilarityMatrix) -> dict:
    d = {"tasks": list(s.tasks), "metric": s.metric.value, "matrix": _floats(s.values)}
    if s.transform != "raw":
        d["transform"] = s.transform
    return d


def similarity_from_dict(d: dict) -> SimilarityMatrix:
    try:
        return validate_similarity(
            d["tasks"], d["matrix"], d.get("metric", "EXTERNAL"), d.get("transform", "raw")
        )
    except (KeyError, TypeError) as exc:
        raise MixoptError(f"malformed similarity document: {exc}") from None


def similarity_to_csv(s: SimilarityMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(s.tasks)
    for row in s.values.tolist():
        w.writerow([repr(v) for v in row])
    return buf.getvalue()


def similarity_from_csv(text: str, metric: str = "EXTERNAL") -> SimilarityMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise MixoptError("empty similarity CSV")
    try:
        values = [[float(v) for v in r] for r in rows[1:]]
    except ValueError as exc:
        raise MixoptError(f"non-numeric entry in similarity CSV: {exc}") from None
    return validate_similarity([t.strip() for t in rows[0]], values, metric)


def read_similarity(path, metric: str | None = None) -> SimilarityMatrix:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).lower().endswith(".csv"):
        return similarity_from_csv(text, metric or "EXTERNAL")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MixoptError(f"{path}: invalid JSON ({exc.msg})") from None
    if metric:
        doc["metric"] = metric
    return similarity_from_dict(doc)


# spectra
def spectrum_to_dict(report, tasks=None) -> dict:
    d = {
        "eigenvalues": _floats(report.eigenvalues),
        "lambda_min": report.lambda_min,
        "lambda_max": report.lambda_max,
        "gamma_lower_bound": report.gamma_lower_bound,
    }
    if tasks is not None:
        d["tasks"] = list(tasks)
    return d


def spectrum_to_csv(report) -> str:
    lines = ["index,eigenvalue"]
    lines += [f"{i},{v!r}" for i, v in enumerate(report.eigenvalues.tolist())]
    return "\n".join(lines) + "\n"


# mixture solutions
def solution_to_dict(sol: MixtureSolution, pot: Potentials | None = None, residual=None) -> dict:
    d = {
        "tasks": list(sol.tasks),
        "p": _floats(sol.p),
        "nu": float(sol.nu),
        "energy": float(sol.energy),
        "active_set": sorted(sol.active_set),
        "solver_path": sol.solver_path.value,
        "entropy": sol.entropy,
    }
    if pot is not None:
        d["beta"] = pot.params.beta if pot.params else None
        d["lambda"] = pot.params.lam if pot.params else None
        d["shift"] = float(pot.shift)
    if residual is not None:
        d["kkt_residual"] = float(residual)
    return d


def solution_from_dict(d: dict) -> MixtureSolution:
    try:
        return MixtureSolution(
            tuple(d["tasks"]),
            np.asarray(d["p"], dtype=float),
            float(d["nu"]),
            frozenset(d.get("active_set", ())),
            float(d["energy"]),
            d["solver_path"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MixoptError(f"malformed solution document: {exc}") from None


# discovery
def trace_to_dict(trace) -> dict:
    return {
        "mode": trace.mode,
        "tasks": list(trace.tasks),
        "selected": [trace.tasks[i] for i in trace.selected],
        "selected_indices": list(trace.selected),
        "f_values": list(trace.f_values),
        "marginal_gains": list(trace.marginal_gains),
        "affinities": list(trace.affinities),
        "mixtures": [_floats(m.p) for m in trace.mixtures],
    }


def gamma_to_dict(report) -> dict:
    return {
        "n": report.n,
        "beta": report.params.beta,
        "lambda": report.params.lam,
        "trials": report.trials,
        "seed": report.seed,
        "gammas": list(report.gammas),
        "bounds": list(report.bounds),
        "min_gamma": report.min_gamma if report.gammas else None,
        "theory_bound": report.theory_bound if report.bounds else None,
        "degenerate": report.degenerate,
        "violations": report.violations(),
    }


def gamma_histogram_csv(report, bins: int = 20) -> str:
    counts, edges = report.histogram(bins)
    lines = ["bin,bin_lo,bin_hi,count"]
    rows = zip(edges[:-1].tolist(), edges[1:].tolist(), counts.tolist())
    lines += [f"{i},{lo!r},{hi!r},{c}" for i, (lo, hi, c) in enumerate(rows)]
    return "\n".join(lines) + "\n"


# sampling
def plan_to_dict(plan) -> dict:
    d = {
        "tasks": list(plan.tasks),
        "counts": list(plan.counts),
        "budget": plan.budget,
        "seed": plan.seed,
        "mode": plan.mode,
    }
    if plan.capacities is not None:
        d["capacities"] = list(plan.capacities)
    return d


def manifest_to_csv(manifest) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task_id", "instance_index"])
    w.writerows(manifest)
    return buf.getvalue()


def read_capacities(path) -> dict[str, int]:
    """``task_id,size`` rows; a header row is optional."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise MalformedRecord("expected task_id,size", lineno)
            task, size = row[0].strip(), row[1].strip()
            try:
                size = int(size)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise MalformedRecord(f"size {size!r} is not an integer", lineno) from None
            if size < 0:
                raise MalformedRecord("size must be non-negative", lineno)
            out[task] = size
    return out

