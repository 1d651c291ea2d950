"""
From proportions to instances
=============================

A mixture p and a budget B give per-task counts, either drawn from a
multinomial or rounded deterministically, then a manifest of concrete
instance indices within each task's dataset.
"""

import numpy as np

from mixopt import allocate, multinomial_pmf
from mixopt.sampler import baseline_mixture, plan_with_manifest

tasks = ("qa", "summarize", "translate")
p = np.array([0.55, 0.35, 0.10])
sizes = [1000, 120, 5000]

plan = allocate(p, 500, seed=0, tasks=tasks)
print("multinomial counts", plan.counts)
print("expected-mode counts", allocate(p, 500, tasks=tasks, mode="expected").counts)

# summarize only has 120 instances; the overflow is re-drawn elsewhere
plan = plan_with_manifest(allocate(p, 500, seed=0, capacities=sizes, tasks=tasks))
print("capped counts", plan.counts)
print("first manifest rows", plan.manifest[:5])

# Same seed, same plan
assert plan == plan_with_manifest(allocate(p, 500, seed=0, capacities=sizes, tasks=tasks))

print("P(counts = (1, 1)) for p = (.5, .5), B = 2:", multinomial_pmf([1, 1], 2, [0.5, 0.5]))

for name in ("uniform", "epm"):
    print(name, np.round(baseline_mixture(name, sizes), 3))
