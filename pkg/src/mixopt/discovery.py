"""Budgeted task discovery on top of the continuous mixture problem.

The set function ``F(A)`` is the best negated energy achievable by a mixture
whose support lies inside ``A``. It is monotone, and weakly submodular for a
positive-definite pairwise matrix, which is what makes greedy selection
reasonable.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import MixtureSolution, PotentialParams, Potentials, validate_similarity
from .errors import (
    BudgetOutOfRange,
    DegenerateDenominator,
    DimensionMismatch,
    EmptySupport,
    NonDisjointSets,
)
from .qp import build_potentials, solve
from .spectral import eigvals_desc

DEGENERATE_TOL = 1e-10


def _embed(pot: Potentials, idx: Sequence[int], sol: MixtureSolution) -> MixtureSolution:
    p = np.zeros(pot.n)
    p[list(idx)] = sol.p
    outside = set(range(pot.n)) - set(idx)
    active = {idx[i] for i in sol.active_set} | outside
    return MixtureSolution(
        pot.tasks, p, sol.nu, frozenset(active), sol.energy, sol.solver_path, sol.iterations
    )


def set_value(support: Iterable[int], pot: Potentials) -> tuple[float, MixtureSolution]:
    """``F(support)`` and the maximising mixture embedded in the full task space."""
    idx = sorted(set(int(i) for i in support))
    if not idx:
        raise EmptySupport("support must contain at least one task")
    if idx[0] < 0 or idx[-1] >= pot.n:
        raise IndexError(f"support indices out of range for {pot.n} tasks")
    sol = solve(pot.subset(idx))
    return -sol.energy, _embed(pot, idx, sol)


class SetFunction:
    """Memoised ``F`` over subsets of the task indices, with ``F(empty) = 0``."""

    def __init__(self, pot: Potentials):
        self.pot = pot
        self._cache: dict[frozenset, float] = {frozenset(): 0.0}

    def __call__(self, subset: Iterable[int]) -> float:
        key = frozenset(int(i) for i in subset)
        if key not in self._cache:
            self._cache[key] = set_value(key, self.pot)[0]
        return self._cache[key]


@dataclass
class DiscoveryTrace:
    tasks: tuple[str, ...]
    selected: list[int] = field(default_factory=list)
    f_values: list[float] = field(default_factory=list)
    marginal_gains: list[float] = field(default_factory=list)
    affinities: list[float] = field(default_factory=list)
    mixtures: list[MixtureSolution] = field(default_factory=list)
    mode: str = "greedy"

    @property
    def selected_tasks(self) -> list[str]:
        return [self.tasks[i] for i in self.selected]

    def _push(self, idx: int, pot: Potentials) -> None:
        self.selected.append(idx)
        value, mix = set_value(self.selected, pot)
        prev = self.f_values[-1] if self.f_values else 0.0
        if self.mixtures:
            order = self.selected[:-1]
            self.affinities.append(tv_affinity(self.mixtures[-1].p[order], mix.p[self.selected]))
        self.marginal_gains.append(value - prev)
        self.f_values.append(value)
        self.mixtures.append(mix)


def tv_affinity(p_k, p_k1) -> float:
    """Half the L1 gap between a k-task mixture and the first k entries of a (k+1)-task one."""
    p_k = np.asarray(p_k, dtype=float)
    p_k1 = np.asarray(p_k1, dtype=float)
    if p_k.ndim != 1 or p_k1.shape != (p_k.size + 1,):
        raise DimensionMismatch(
            f"expected mixtures of lengths k and k+1, got {p_k.shape} and {p_k1.shape}"
        )
    return float(0.5 * np.abs(p_k - p_k1[:-1]).sum())


def greedy_select(pot: Potentials, k: int) -> DiscoveryTrace:
    """Plain greedy under a cardinality budget; ties go to the lowest task index."""
    if not 1 <= k <= pot.n:
        raise BudgetOutOfRange(f"k must lie in [1, {pot.n}], got {k}")
    f = SetFunction(pot)
    trace = DiscoveryTrace(pot.tasks)
    for _ in range(k):
        current = set(trace.selected)
        best, best_val = None, -np.inf
        for j in range(pot.n):
            if j in current:
                continue
            v = f(current | {j})
            if v > best_val:
                best, best_val = j, v
        trace._push(best, pot)
    return trace


def affinity_trajectory(pot: Potentials, order: str = "desc", k: int | None = None) -> DiscoveryTrace:
    """Add tasks one by one sorted by unary potential and record TV affinities.

    ``order`` is ``"asc"`` or ``"desc"``; ties keep index order. ``k`` stops
    the trajectory early (default: all tasks).
    """
    if pot.n < 2:
        raise BudgetOutOfRange("an affinity trajectory needs at least two tasks")
    o = order.lower().replace("_unary", "")
    if o not in ("asc", "desc"):
        raise ValueError(f"order must be 'asc' or 'desc', got {order!r}")
    key = pot.unary if o == "asc" else -pot.unary
    seq = np.argsort(key, kind="stable").tolist()
    if k is not None:
        if not 2 <= k <= pot.n:
            raise BudgetOutOfRange(f"k must lie in [2, {pot.n}] for a trajectory, got {k}")
        seq = seq[:k]
    trace = DiscoveryTrace(pot.tasks, mode=f"{o}_unary")
    for j in seq:
        trace._push(int(j), pot)
    return trace


def submodularity_ratio(
    pot: Potentials | SetFunction,
    x: Iterable[int],
    y: Iterable[int],
    convention: str = "standard",
) -> float:
    """Ratio of summed singleton gains of ``y`` over its joint gain.

    ``"standard"`` divides by ``F(X u Y) - F(X)``; ``"paper"`` divides by
    ``F(X u Y) - F(Y)`` instead.
    """
    f = pot if isinstance(pot, SetFunction) else SetFunction(pot)
    x, y = set(x), set(y)
    if x & y:
        raise NonDisjointSets(f"sets overlap on {sorted(x & y)}")
    if not y:
        raise ValueError("y must be non-empty")
    fx = f(x)
    num = sum(f(x | {i}) - fx for i in sorted(y))
    conv = convention.lower()
    if conv == "standard":
        den = f(x | y) - fx
    elif conv == "paper":
        den = f(x | y) - f(y)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    if abs(den) <= DEGENERATE_TOL:
        raise DegenerateDenominator(f"denominator {den:.3e} is too close to zero")
    return float(num / den)


def min_submodularity_ratio(pot: Potentials, max_size: int) -> float:
    """Smallest standard ratio over all disjoint ``X, Y`` with ``|X|, |Y| <= max_size``.

    Exhaustive, so only meant for small task counts. Degenerate pairs are skipped.
    """
    f = SetFunction(pot)
    n = pot.n
    gamma = np.inf
    subsets = [frozenset(c) for r in range(0, max_size + 1) for c in combinations(range(n), r)]
    for xs in subsets:
        for ys in subsets:
            if not ys or xs & ys:
                continue
            try:
                gamma = min(gamma, submodularity_ratio(f, xs, ys))
            except DegenerateDenominator:
                continue
    return float(gamma)


def random_hollow_similarity(n: int, rng: np.random.Generator, tasks=None):
    """Uniform [0, 1] entries, symmetrised, zero diagonal."""
    a = rng.uniform(0.0, 1.0, size=(n, n))
    s = 0.5 * (a + a.T)
    np.fill_diagonal(s, 0.0)
    tasks = tasks or [f"t{i}" for i in range(n)]
    return validate_similarity(tasks, s, "EXTERNAL")


def _random_disjoint(n: int, rng: np.random.Generator):
    labels = rng.integers(0, 3, size=n)  # 0: X, 1: Y, 2: neither
    x = set(np.flatnonzero(labels == 0).tolist())
    y = set(np.flatnonzero(labels == 1).tolist())
    if not y:
        j = int(rng.integers(n))
        x.discard(j)
        y.add(j)
    return x, y


@dataclass
class GammaReport:
    n: int
    params: PotentialParams
    trials: int
    seed: int
    gammas: list[float]
    bounds: list[float]  # eigenvalue ratio of the pairwise matrix, per kept trial
    degenerate: int = 0

    @property
    def min_gamma(self) -> float:
        return float(min(self.gammas)) if self.gammas else float("nan")

    @property
    def theory_bound(self) -> float:
        return float(min(self.bounds)) if self.bounds else float("nan")

    def violations(self, tol: float = 1e-6) -> int:
        return sum(g < b - tol for g, b in zip(self.gammas, self.bounds))

    def histogram(self, bins: int = 20):
        counts, edges = np.histogram(self.gammas, bins=bins)
        return counts, edges


def _gamma_trial(n, params, seed):
    rng = np.random.default_rng(seed)
    pot = build_potentials(random_hollow_similarity(n, rng), params, "auto")
    w = eigvals_desc(pot.pairwise)
    bound = float(w[-1] / w[0])
    x, y = _random_disjoint(n, rng)
    try:
        return submodularity_ratio(pot, x, y, "standard"), bound
    except DegenerateDenominator:
        return None, bound


def gamma_experiment(
    n: int,
    params: PotentialParams = PotentialParams(),
    trials: int = 100,
    seed: int = 0,
    threads: int | None = None,
) -> GammaReport:
    """Empirical submodularity ratios over random hollow similarity matrices.

    Trial ``t`` uses seed ``seed + t`` so the outcome does not depend on threading.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = [seed + t for t in range(trials)]
    run = lambda s: _gamma_trial(n, params, s)  # noqa: E731
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    gammas = [g for g, _ in results if g is not None]
    bounds = [b for g, b in results if g is not None]
    return GammaReport(n, params, trials, seed, gammas, bounds, trials - len(gammas))


@dataclass
class MonotonicityReport:
    trials: int
    violations: int
    worst_margin: float  # min over samples of F(B) - F(A)


def monotonicity_check(pot: Potentials, trials: int = 500, seed: int = 0, tol: float = 1e-9):
    """Sample nested non-empty ``A <= B`` and count ``F(A) > F(B) + tol``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    f = SetFunction(pot)
    n = pot.n
    violations, worst = 0, np.inf
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        b_mask = rng.random(n) < 0.5
        if not b_mask.any():
            b_mask[rng.integers(n)] = True
        b = np.flatnonzero(b_mask)
        a = b[rng.random(b.size) < 0.5]
        if a.size == 0:
            a = b[[rng.integers(b.size)]]
        margin = f(b) - f(a)
        worst = min(worst, margin)
        violations += margin < -tol
    return MonotonicityReport(trials, violations, float(worst))


__all__ = [
    "DiscoveryTrace",
    "GammaReport",
    "MonotonicityReport",
    "SetFunction",
    "affinity_trajectory",
    "gamma_experiment",
    "greedy_select",
    "min_submodularity_ratio",
    "monotonicity_check",
    "random_hollow_similarity",
    "set_value",
    "submodularity_ratio",
    "tv_affinity",
]
