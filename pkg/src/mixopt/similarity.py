"""Behavioural task similarity from per-example model predictions.

Records are produced by models fine-tuned on single tasks and evaluated on
each other's data. Two scores are supported: a symmetrised mean log-ratio of
true-label probabilities (PMI) and a symmetrised mean per-example
Jensen-Shannon divergence (JSD).
"""

from __future__ import annotations

import json
import math
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import rel_entr

from .core import LOG2, Metric, SimilarityMatrix, check_task_id, validate_similarity
from .errors import (
    CoverageWarning,
    DistributionNotNormalized,
    DuplicateKey,
    EmptyEvaluationSet,
    IncompletePair,
    InvalidTaskId,
    LengthMismatch,
    MalformedRecord,
    MissingCounterpart,
)

LOGPROB_FLOOR = math.log(1e-12)
DIST_SUM_TOL = 1e-6


@dataclass(frozen=True)
class PredictionRecord:
    model_task: str
    eval_task: str
    example_id: str
    logprob: float | None = None
    dist: tuple[float, ...] | None = None

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_task, self.eval_task, self.example_id)


def parse_record(obj: Mapping, line: int | None = None) -> PredictionRecord:
    """Validate one decoded JSON object, clamp the logprob and renormalise ``dist``."""
    if not isinstance(obj, Mapping):
        raise MalformedRecord("record must be a JSON object", line)
    try:
        model_task = check_task_id(obj.get("model_task"))
        eval_task = check_task_id(obj.get("eval_task"))
    except InvalidTaskId as exc:
        raise MalformedRecord(str(exc), line) from None
    example_id = obj.get("example_id")
    if isinstance(example_id, bool) or not isinstance(example_id, (str, int)) or example_id == "":
        raise MalformedRecord(f"example_id must be a non-empty string, got {example_id!r}", line)
    example_id = str(example_id)

    logprob = obj.get("logprob")
    dist = obj.get("dist")
    if logprob is None and dist is None:
        raise MalformedRecord("record carries neither logprob nor dist", line)
    if logprob is not None:
        if isinstance(logprob, bool) or not isinstance(logprob, (int, float)):
            raise MalformedRecord(f"logprob must be a number, got {logprob!r}", line)
        if not math.isfinite(logprob) or logprob > 0:
            raise MalformedRecord(f"logprob must be finite and <= 0, got {logprob!r}", line)
        logprob = max(float(logprob), LOGPROB_FLOOR)
    if dist is not None:
        if not isinstance(dist, (list, tuple)) or not dist:
            raise MalformedRecord("dist must be a non-empty array", line)
        try:
            d = np.asarray(dist, dtype=float)
        except (TypeError, ValueError):
            raise MalformedRecord("dist entries must be numbers", line) from None
        if d.ndim != 1 or not np.all(np.isfinite(d)) or np.any(d < 0):
            raise MalformedRecord("dist entries must be finite and non-negative", line)
        total = float(d.sum())
        if abs(total - 1.0) > DIST_SUM_TOL:
            raise DistributionNotNormalized(f"dist sums to {total!r}", line)
        dist = tuple((d / total).tolist())
    return PredictionRecord(model_task, eval_task, example_id, logprob, dist)


class PredictionStore:
    """Prediction records keyed by ``(model_task, eval_task, example_id)``.

    Treat as immutable once built by :func:`ingest`.
    """

    def __init__(self, records: Iterable[PredictionRecord] = ()):
        self._records: dict[tuple[str, str, str], PredictionRecord] = {}
        self._by_pair: dict[tuple[str, str], dict[str, PredictionRecord]] = defaultdict(dict)
        for r in records:
            self._add(r)

    def _add(self, rec: PredictionRecord, line: int | None = None) -> None:
        if rec.key in self._records:
            raise DuplicateKey(f"duplicate record for {rec.key}", line)
        self._records[rec.key] = rec
        self._by_pair[(rec.model_task, rec.eval_task)][rec.example_id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        return key in self._records

    def get(self, model_task, eval_task, example_id) -> PredictionRecord | None:
        return self._records.get((model_task, eval_task, example_id))

    @property
    def tasks(self) -> tuple[str, ...]:
        """Sorted roster of every task seen as a model or an evaluation set."""
        seen = set()
        for m, e, _ in self._records:
            seen.update((m, e))
        return tuple(sorted(seen))

    def example_counts(self) -> dict[str, int]:
        ids = defaultdict(set)
        for _, e, x in self._records:
            ids[e].add(x)
        return {t: len(v) for t, v in sorted(ids.items())}

    def records(self, model_task, eval_task) -> Mapping[str, PredictionRecord]:
        return self._by_pair.get((model_task, eval_task), {})

    def _paired(self, model_a, model_b, eval_task, field):
        """Examples of ``eval_task`` on which both models carry ``field``."""
        ra = {k: r for k, r in self.records(model_a, eval_task).items() if getattr(r, field) is not None}
        rb = {k: r for k, r in self.records(model_b, eval_task).items() if getattr(r, field) is not None}
        shared = sorted(ra.keys() & rb.keys())
        return ra, rb, shared

    def _ready(self, ti, tj, field) -> bool:
        for ev in (tj, ti):
            if not self._paired(ti, tj, ev, field)[2]:
                return False
        return True

    def pmi_ready(self, ti: str, tj: str) -> bool:
        return self._ready(ti, tj, "logprob")

    def jsd_ready(self, ti: str, tj: str) -> bool:
        return self._ready(ti, tj, "dist")


def ingest(source: Iterable) -> PredictionStore:
    """Build a store from JSON Lines text (an iterable of lines) or of dicts.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    store = PredictionStore()
    for lineno, item in enumerate(source, start=1):
        if isinstance(item, (str, bytes)):
            text = item.strip()
            if not text:
                continue
            try:
                item = json.loads(text)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON ({exc.msg})", lineno) from None
        store._add(parse_record(item, lineno), lineno)
    return store


def read_predictions(path) -> PredictionStore:
    with open(path, encoding="utf-8") as fh:
        return ingest(fh)


def _direction(store, model_a, model_b, eval_task, field):
    ra, rb, shared = store._paired(model_a, model_b, eval_task, field)
    if not ra and not rb:
        raise EmptyEvaluationSet(
            f"no {field} records for models {model_a!r}/{model_b!r} on {eval_task!r}"
        )
    if not shared:
        raise MissingCounterpart(
            f"models {model_a!r} and {model_b!r} share no {field} examples on {eval_task!r}"
        )
    total = len(ra.keys() | rb.keys())
    if len(shared) < total:
        warnings.warn(
            f"{eval_task!r}: only {len(shared)}/{total} examples covered by both "
            f"{model_a!r} and {model_b!r}",
            CoverageWarning,
            stacklevel=3,
        )
    return [(x, ra[x], rb[x]) for x in shared]


def pmi_pair(store: PredictionStore, ti: str, tj: str) -> float:
    """Symmetrised mean log-likelihood ratio between the two task models."""
    if ti == tj:
        raise ValueError("pmi_pair needs two distinct tasks")
    a, b = sorted((ti, tj))

    def mean_log_ratio(num, den, eval_task):
        rows = _direction(store, num, den, eval_task, "logprob")
        return math.fsum(r_num.logprob - r_den.logprob for _, r_num, r_den in rows) / len(rows)

    on_b = mean_log_ratio(a, b, b)  # model a vs model b on b's data
    on_a = mean_log_ratio(b, a, a)
    return 0.5 * (on_b + on_a)


def jsd_sample(p, q) -> float:
    """Jensen-Shannon divergence in nats, using ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"distributions of length {p.shape} and {q.shape}")
    m = 0.5 * (p + q)
    js = 0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()
    return float(min(max(js, 0.0), LOG2))


def jsd_pair(store: PredictionStore, ti: str, tj: str) -> float:
    """Mean per-example JSD between the two task models, averaged over both datasets."""
    if ti == tj:
        raise ValueError("jsd_pair needs two distinct tasks")
    a, b = sorted((ti, tj))

    def mean_jsd(eval_task):
        rows = _direction(store, a, b, eval_task, "dist")
        vals = []
        for x, ra, rb in rows:
            try:
                vals.append(jsd_sample(ra.dist, rb.dist))
            except LengthMismatch as exc:
                raise LengthMismatch(f"{eval_task!r} example {x!r}: {exc}") from None
        return math.fsum(vals) / len(vals)

    return 0.5 * (mean_jsd(b) + mean_jsd(a))


def build_similarity(
    store: PredictionStore,
    metric: str = "PMI",
    tasks: Sequence[str] | None = None,
    jsd_mode: str = "raw",
    threads: int | None = None,
) -> SimilarityMatrix:
    """Assemble the full similarity matrix with a zero diagonal.

    ``tasks`` fixes the row order (defaults to the store's sorted roster).
    ``jsd_mode="complement"`` maps JSD values ``d`` to ``log 2 - d`` so larger
    means more alike. Every pair is checked before any is computed, and all
    missing pairs are reported together.
    """
    metric = Metric(metric.upper())
    if metric is Metric.EXTERNAL:
        raise ValueError("build_similarity computes PMI or JSD only")
    if jsd_mode not in ("raw", "complement"):
        raise ValueError(f"unknown jsd_mode {jsd_mode!r}")
    tasks = tuple(store.tasks if tasks is None else tasks)
    n = len(tasks)
    ready = store.pmi_ready if metric is Metric.PMI else store.jsd_ready
    pairs = list(combinations(range(n), 2))
    missing = [(tasks[i], tasks[j]) for i, j in pairs if not ready(tasks[i], tasks[j])]
    if missing:
        raise IncompletePair(missing)

    fn = pmi_pair if metric is Metric.PMI else jsd_pair
    work = lambda ij: fn(store, tasks[ij[0]], tasks[ij[1]])  # noqa: E731
    if threads and threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(work, pairs))
    else:
        scores = [work(ij) for ij in pairs]

    values = np.zeros((n, n))
    for (i, j), v in zip(pairs, scores):
        if metric is Metric.JSD and jsd_mode == "complement":
            v = LOG2 - v
        values[i, j] = values[j, i] = v
    transform = jsd_mode if metric is Metric.JSD else "raw"
    return validate_similarity(tasks, values, metric, transform)
