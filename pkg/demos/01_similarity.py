"""
Task similarity from cross-evaluated predictions
================================================

Three toy tasks. A model fine-tuned on each task is run on every task's
examples; we score how alike two models behave on each other's data.
"""

import math

import numpy as np

from mixopt import build_similarity, ingest, jsd_sample

# A single record: which model, which task's data, which example, and the
# log-probability of the true label (plus an optional predictive distribution).
rng = np.random.default_rng(0)
tasks = ["qa", "summarize", "translate"]
prefs = rng.normal(size=(3, 4))
prefs[1] = prefs[0] + 0.2 * rng.normal(size=4)  # summarize behaves like qa

records = []
for j, ev in enumerate(tasks):
    for x in range(20):
        label = int(rng.integers(4))
        for i, model in enumerate(tasks):
            logits = prefs[i].copy()
            logits[label] += 1.0
            dist = np.exp(logits - logits.max())
            dist /= dist.sum()
            records.append(dict(model_task=model, eval_task=ev, example_id=f"{ev}-{x}",
                                logprob=math.log(dist[label]), dist=dist.tolist()))

store = ingest(records)
print(len(store), "records over", store.tasks)

# PMI: mean log-ratio of true-label probabilities, symmetrised over the two datasets
pmi = build_similarity(store, "PMI")
print("PMI similarity\n", np.round(pmi.values, 4))

# JSD: mean per-example Jensen-Shannon divergence (a distance, so smaller = closer)
jsd = build_similarity(store, "JSD")
print("JSD divergence\n", np.round(jsd.values, 4))

# ...or flipped into a similarity with log 2 - JSD
print("JSD complement\n", np.round(build_similarity(store, "JSD", jsd_mode="complement").values, 4))

# JSD is bounded by log 2 and symmetric
print(jsd_sample([1, 0], [0, 1]), math.log(2))
print(jsd_sample([0.5, 0.5], [0.25, 0.75]), jsd_sample([0.25, 0.75], [0.5, 0.5]))
