"""Domain types shared by every stage of the mixture pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    AsymmetryTooLarge,
    BoundViolation,
    DimensionMismatch,
    InvalidTaskId,
    NonFiniteEntry,
)

LOG2 = math.log(2.0)
SYMMETRY_TOL = 1e-9
# decimal inputs such as 0.300000001 vs 0.3 land a few ulps above the tolerance
_SYMMETRY_SLACK = 1e-15
_FORBIDDEN_ID_CHARS = set(",\n\r\t\"")


class Metric(str, Enum):
    PMI = "PMI"
    JSD = "JSD"
    EXTERNAL = "EXTERNAL"


class SolverPath(str, Enum):
    INTERIOR = "INTERIOR"
    ACTIVE_SET = "ACTIVE_SET"
    PROJECTED_GRADIENT = "PROJECTED_GRADIENT"


def check_task_id(task) -> str:
    if not isinstance(task, str) or not task:
        raise InvalidTaskId(f"task id must be a non-empty string, got {task!r}")
    if _FORBIDDEN_ID_CHARS & set(task):
        raise InvalidTaskId(f"task id {task!r} contains a separator or newline character")
    return task


def check_task_list(tasks: Sequence[str]) -> tuple[str, ...]:
    tasks = tuple(check_task_id(t) for t in tasks)
    if len(set(tasks)) != len(tasks):
        dupes = sorted({t for t in tasks if tasks.count(t) > 1})
        raise InvalidTaskId(f"duplicate task ids: {dupes}")
    return tasks


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NonFiniteEntry(f"{what} has a non-finite entry at {tuple(int(i) for i in bad)}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric task-by-task similarity scores.

    ``transform`` records a post-processing of the raw metric values, e.g.
    ``"complement"`` when JSD divergences were mapped to ``log 2 - JSD``.
    Construct through :func:`validate_similarity` to get the invariant checks.
    """

    tasks: tuple[str, ...]
    values: np.ndarray
    metric: Metric
    transform: str = "raw"

    @property
    def n(self) -> int:
        return len(self.tasks)

    def permuted(self, order: Sequence[int]) -> "SimilarityMatrix":
        order = list(order)
        return SimilarityMatrix(
            tuple(self.tasks[i] for i in order),
            _frozen(self.values[np.ix_(order, order)]),
            self.metric,
            self.transform,
        )


def validate_similarity(tasks, matrix, metric="EXTERNAL", transform="raw") -> SimilarityMatrix:
    """Check a raw matrix and wrap it as a :class:`SimilarityMatrix`.

    Asymmetry up to ``1e-9`` is repaired by averaging with the transpose;
    anything larger is rejected.
    """
    metric = Metric(metric)
    tasks = check_task_list(tasks)
    values = np.asarray(matrix, dtype=float)
    n = len(tasks)
    if n < 1:
        raise DimensionMismatch("at least one task is required")
    if values.shape != (n, n):
        raise DimensionMismatch(f"matrix of shape {values.shape} does not match {n} tasks")
    _check_finite(values, "similarity matrix")

    asym = float(np.max(np.abs(values - values.T)))
    scale = max(1.0, float(np.max(np.abs(values))))
    if asym > SYMMETRY_TOL + _SYMMETRY_SLACK * scale:
        i, j = np.unravel_index(np.argmax(np.abs(values - values.T)), values.shape)
        raise AsymmetryTooLarge(
            f"|S[{i}][{j}] - S[{j}][{i}]| = {asym:.3e} exceeds {SYMMETRY_TOL:g}"
        )
    if asym > 0:
        values = 0.5 * (values + values.T)

    if metric is not Metric.EXTERNAL and np.any(np.diag(values) != 0.0):
        raise BoundViolation(f"{metric.value} similarity must have a zero diagonal")
    if metric is Metric.JSD:
        lo, hi = float(values.min()), float(values.max())
        if lo < 0.0 or hi > LOG2 + 1e-12:
            raise BoundViolation(
                f"JSD entries must lie in [0, log 2]; found range [{lo:.6g}, {hi:.6g}]"
            )
    return SimilarityMatrix(tasks, _frozen(values), metric, transform)


@dataclass(frozen=True)
class PotentialParams:
    beta: float = 20.0
    lam: float = 10.0

    def __post_init__(self):
        for name in ("beta", "lam"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class Potentials:
    """Unary vector and (possibly shifted) pairwise matrix of the energy."""

    tasks: tuple[str, ...]
    unary: np.ndarray
    pairwise: np.ndarray
    shift: float = 0.0
    params: PotentialParams | None = None

    def __post_init__(self):
        unary = _frozen(self.unary)
        pairwise = _frozen(self.pairwise)
        n = len(self.tasks)
        if unary.shape != (n,) or pairwise.shape != (n, n):
            raise DimensionMismatch(
                f"potentials of shapes {unary.shape}, {pairwise.shape} do not match {n} tasks"
            )
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "pairwise", pairwise)
        object.__setattr__(self, "tasks", tuple(self.tasks))

    @property
    def n(self) -> int:
        return len(self.tasks)

    def subset(self, indices: Sequence[int]) -> "Potentials":
        """Principal restriction to ``indices`` (kept in the given order)."""
        idx = list(indices)
        return Potentials(
            tuple(self.tasks[i] for i in idx),
            self.unary[idx],
            self.pairwise[np.ix_(idx, idx)],
            self.shift,
            self.params,
        )

    @classmethod
    def from_arrays(cls, unary, pairwise, tasks=None) -> "Potentials":
        unary = np.asarray(unary, dtype=float)
        if tasks is None:
            tasks = tuple(f"t{i}" for i in range(unary.shape[0]))
        return cls(tuple(tasks), unary, np.asarray(pairwise, dtype=float))


@dataclass(frozen=True)
class MixtureSolution:
    tasks: tuple[str, ...]
    p: np.ndarray
    nu: float
    active_set: frozenset[int]
    energy: float
    solver_path: SolverPath
    iterations: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))
        object.__setattr__(self, "active_set", frozenset(int(i) for i in self.active_set))
        object.__setattr__(self, "solver_path", SolverPath(self.solver_path))

    @property
    def entropy(self) -> float:
        """Shannon entropy of the mixture in nats."""
        p = self.p[self.p > 0]
        return float(-np.sum(p * np.log(p)))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.tasks, self.p.tolist()))
