"""Turn a task mixture into per-task instance counts and an instance manifest."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceedsCapacity,
    CountBudgetMismatch,
    CountExceedsCapacity,
    InvalidMixture,
)


@dataclass(frozen=True)
class SamplingPlan:
    tasks: tuple[str, ...]
    counts: tuple[int, ...]
    budget: int
    seed: int
    mode: str = "multinomial"
    capacities: tuple[int, ...] | None = None
    manifest: tuple[tuple[str, int], ...] | None = None


def _check_mixture(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidMixture("mixture must be a non-empty finite vector")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-8:
        raise InvalidMixture(f"mixture is not on the simplex (min {p.min():.3g}, sum {p.sum()!r})")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _multinomial(total: int, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Multinomial draw as a chain of conditional binomials in index order."""
    counts = np.zeros(p.size, dtype=np.int64)
    nz = np.flatnonzero(p > 0)
    left, mass = int(total), 1.0
    for pos, i in enumerate(nz):
        if left == 0:
            break
        if pos == nz.size - 1:
            counts[i] = left
            break
        q = min(max(p[i] / mass, 0.0), 1.0)
        counts[i] = rng.binomial(left, q)
        left -= int(counts[i])
        mass -= p[i]
    return counts


def _largest_remainder(total: int, p: np.ndarray) -> np.ndarray:
    raw = total * p
    counts = np.floor(raw).astype(np.int64)
    short = int(total - counts.sum())
    if short:
        frac = raw - counts
        # ties go to the lower index
        order = np.lexsort((np.arange(p.size), -frac))
        order = [i for i in order if p[i] > 0]
        counts[order[:short]] += 1
    return counts


def allocate(
    p,
    budget: int,
    seed: int = 0,
    capacities: Sequence[int] | None = None,
    tasks: Sequence[str] | None = None,
    mode: str = "multinomial",
) -> SamplingPlan:
    """Split ``budget`` instances across tasks according to ``p``.

    ``mode="multinomial"`` draws ``k ~ Multinomial(budget, p)``; ``"expected"``
    rounds ``budget * p`` by largest remainder. When a task's count exceeds
    its capacity the overflow is re-drawn over the unsaturated tasks with
    renormalised probabilities until everything fits.
    """
    p = _check_mixture(p)
    n = p.size
    budget = int(budget)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    tasks = tuple(tasks) if tasks is not None else tuple(f"t{i}" for i in range(n))
    if len(tasks) != n:
        raise InvalidMixture(f"{len(tasks)} task ids for a mixture over {n} tasks")
    caps = None
    if capacities is not None:
        caps = np.asarray(capacities, dtype=np.int64)
        if caps.shape != (n,) or np.any(caps < 0):
            raise InvalidMixture("capacities must be one non-negative integer per task")
        usable = int(caps[p > 0].sum())
        if usable < budget:
            raise BudgetExceedsCapacity(
                f"budget {budget} exceeds the {usable} instances available to tasks with p > 0"
            )

    if mode == "multinomial":
        rng = np.random.default_rng(seed)
        draw = lambda total, q: _multinomial(total, q, rng)  # noqa: E731
    elif mode == "expected":
        draw = _largest_remainder
    else:
        raise ValueError(f"unknown mode {mode!r}")

    counts = draw(budget, p)
    if caps is not None:
        while True:
            overflow = int(np.maximum(counts - caps, 0).sum())
            if overflow == 0:
                break
            counts = np.minimum(counts, caps)
            open_ = (counts < caps) & (p > 0)
            if not open_.any():
                raise BudgetExceedsCapacity("all tasks saturated before the budget was met")
            q = np.where(open_, p, 0.0)
            counts = counts + draw(overflow, q / q.sum())
    assert counts.sum() == budget
    return SamplingPlan(
        tasks,
        tuple(int(c) for c in counts),
        budget,
        int(seed),
        mode,
        None if caps is None else tuple(int(c) for c in caps),
    )


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def draw_instances(counts, capacities, seed: int = 0, tasks=None) -> list[tuple[str, int]]:
    """Uniformly pick ``counts[i]`` distinct indices below ``capacities[i]`` per task.

    Each task uses its own generator derived from ``(seed, i)``, so the result
    does not depend on the order tasks are processed in.
    """
    counts = [int(c) for c in counts]
    capacities = [int(c) for c in capacities]
    if len(counts) != len(capacities):
        raise CountExceedsCapacity("counts and capacities differ in length")
    tasks = list(tasks) if tasks is not None else [f"t{i}" for i in range(len(counts))]
    manifest = []
    for i, (k, cap) in enumerate(zip(counts, capacities)):
        if k > cap:
            raise CountExceedsCapacity(f"task {tasks[i]!r}: {k} instances requested, {cap} available")
        if k == 0:
            continue
        picks = np.sort(_substream(seed, i).choice(cap, size=k, replace=False))
        manifest.extend((tasks[i], int(j)) for j in picks)
    return manifest


def plan_with_manifest(plan: SamplingPlan) -> SamplingPlan:
    if plan.capacities is None:
        raise ValueError("a manifest needs per-task capacities")
    manifest = draw_instances(plan.counts, plan.capacities, plan.seed, plan.tasks)
    return SamplingPlan(
        plan.tasks, plan.counts, plan.budget, plan.seed, plan.mode, plan.capacities, tuple(manifest)
    )


def multinomial_pmf(counts, budget: int, p) -> float:
    """Multinomial probability of ``counts``, evaluated in log space."""
    k = [int(c) for c in counts]
    p = np.asarray(p, dtype=float)
    if len(k) != p.size:
        raise CountBudgetMismatch(f"{len(k)} counts for {p.size} probabilities")
    if any(c < 0 for c in k) or sum(k) != budget:
        raise CountBudgetMismatch(f"counts {k} do not sum to budget {budget}")
    logp = math.lgamma(budget + 1)
    for c, pi in zip(k, p):
        if c == 0:
            continue
        if pi <= 0:
            return 0.0
        logp += c * math.log(pi) - math.lgamma(c + 1)
    return math.exp(logp)


def baseline_mixture(name: str, capacities: Sequence[int]) -> np.ndarray:
    """Reference mixtures: ``uniform`` over tasks, or ``epm``/``random`` by dataset size.

    ``random`` samples from the pooled instances, which in expectation equals
    size-proportional allocation; use it with ``mode="multinomial"``.
    """
    caps = np.asarray(capacities, dtype=float)
    name = name.lower()
    if name == "uniform":
        return np.full(caps.size, 1.0 / caps.size)
    if name in ("epm", "random"):
        if caps.sum() <= 0:
            raise InvalidMixture("capacities sum to zero")
        return caps / caps.sum()
    raise ValueError(f"unknown baseline {name!r}")
