import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixopt.errors import (
    BudgetExceedsCapacity,
    CountBudgetMismatch,
    CountExceedsCapacity,
    InvalidMixture,
)
from mixopt.sampler import (
    allocate,
    baseline_mixture,
    draw_instances,
    multinomial_pmf,
    plan_with_manifest,
)


def test_point_mass():
    assert allocate([1.0, 0.0], 10, seed=3).counts == (10, 0)


def test_zero_budget():
    assert allocate([0.3, 0.7], 0).counts == (0, 0)


def test_law_of_large_numbers():
    plan = allocate([0.5, 0.5], 100_000, seed=0)
    assert abs(plan.counts[0] / 1e5 - 0.5) < 0.01


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(0, 500))
def test_counts_sum_to_budget(seed, n, budget):
    p = np.random.default_rng(seed).dirichlet(np.ones(n))
    plan = allocate(p, budget, seed)
    assert sum(plan.counts) == budget
    assert plan == allocate(p, budget, seed)
    assert all(c == 0 for c, q in zip(plan.counts, p) if q == 0)


def test_invalid_mixture():
    with pytest.raises(InvalidMixture):
        allocate([0.5, 0.6], 10)
    with pytest.raises(InvalidMixture):
        allocate([1.2, -0.2], 10)


def test_pmf_values():
    assert multinomial_pmf([1, 1], 2, [0.5, 0.5]) == pytest.approx(0.5, abs=1e-15)
    assert multinomial_pmf([3, 0], 3, [1.0, 0.0]) == 1.0
    assert multinomial_pmf([2, 1], 3, [1.0, 0.0]) == 0.0
    with pytest.raises(CountBudgetMismatch):
        multinomial_pmf([1, 1], 3, [0.5, 0.5])


def test_pmf_sums_to_one():
    p = [0.2, 0.5, 0.3]
    total = sum(
        multinomial_pmf(k, 6, p)
        for k in itertools.product(range(7), repeat=3)
        if sum(k) == 6
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_pmf_matches_scipy():
    from scipy.stats import multinomial

    k, p = [3, 4, 1], [0.25, 0.6, 0.15]
    assert multinomial_pmf(k, 8, p) == pytest.approx(multinomial.pmf(k, 8, p), rel=1e-12)


def test_capacity_redistribution():
    plan = allocate([0.9, 0.1, 0.0], 20, seed=1, capacities=[5, 100, 100])
    assert plan.counts[0] == 5 and plan.counts[2] == 0
    assert sum(plan.counts) == 20


def test_capacity_exceeded():
    with pytest.raises(BudgetExceedsCapacity):
        allocate([0.5, 0.5, 0.0], 10, capacities=[3, 3, 100])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_capacities_respected(seed, n):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n))
    caps = rng.integers(0, 30, size=n)
    budget = int(caps.sum() // 2)
    for mode in ("multinomial", "expected"):
        plan = allocate(p, budget, seed, caps, mode=mode)
        assert sum(plan.counts) == budget
        assert all(c <= cap for c, cap in zip(plan.counts, caps))


def test_expected_mode_largest_remainder():
    assert allocate([0.5, 0.25, 0.25], 10, mode="expected").counts == (5, 3, 2)
    assert allocate([1 / 3] * 3, 10, mode="expected").counts == (4, 3, 3)
    assert allocate([0.26, 0.74], 100, mode="expected").counts == (26, 74)


def test_draw_full_capacity():
    manifest = draw_instances([3], [3], seed=0, tasks=["a"])
    assert manifest == [("a", 0), ("a", 1), ("a", 2)]


def test_draw_deterministic_and_seed_sensitive():
    a = draw_instances([5, 7], [100, 50], seed=11)
    assert a == draw_instances([5, 7], [100, 50], seed=11)
    assert a != draw_instances([5, 7], [100, 50], seed=12)
    for t, k, cap in (("t0", 5, 100), ("t1", 7, 50)):
        idx = [j for task, j in a if task == t]
        assert len(idx) == len(set(idx)) == k and all(0 <= j < cap for j in idx)


def test_draw_per_task_streams_are_independent():
    # changing task 0's count does not move task 1's picks
    a = [j for t, j in draw_instances([5, 7], [100, 50], seed=2) if t == "t1"]
    b = [j for t, j in draw_instances([9, 7], [100, 50], seed=2) if t == "t1"]
    assert a == b


def test_draw_count_exceeds_capacity():
    with pytest.raises(CountExceedsCapacity):
        draw_instances([4], [3])


def test_plan_with_manifest():
    plan = plan_with_manifest(allocate([0.5, 0.5], 8, 4, [10, 10], ["x", "y"]))
    assert len(plan.manifest) == 8
    assert sum(t == "x" for t, _ in plan.manifest) == plan.counts[0]
    with pytest.raises(ValueError):
        plan_with_manifest(allocate([0.5, 0.5], 8))


def test_baselines():
    assert baseline_mixture("uniform", [10, 30]).tolist() == [0.5, 0.5]
    assert baseline_mixture("epm", [10, 30]).tolist() == [0.25, 0.75]
    assert np.array_equal(baseline_mixture("random", [10, 30]), baseline_mixture("epm", [10, 30]))
    with pytest.raises(ValueError):
        baseline_mixture("nope", [1])


def test_multinomial_frequencies_match_pmf():
    p = [0.2, 0.3, 0.5]
    hits = sum(allocate(p, 4, seed=s).counts == (1, 1, 2) for s in range(4000))
    expected = multinomial_pmf([1, 1, 2], 4, p)
    sd = math.sqrt(expected * (1 - expected) / 4000)
    assert abs(hits / 4000 - expected) < 5 * sd
