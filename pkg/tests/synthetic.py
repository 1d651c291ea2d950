"""Tiny generator of prediction records for tests.

Each task owns a latent preference over a small label vocabulary. The model
fine-tuned on task ``i`` predicts a softmax that blends its own preference
with the example's true label, so models of related tasks behave alike.
"""

import json

import numpy as np


def make_records(n_tasks=3, n_examples=4, vocab=5, seed=0, prefix="task"):
    rng = np.random.default_rng(seed)
    tasks = [f"{prefix}{i}" for i in range(n_tasks)]
    prefs = rng.normal(size=(n_tasks, vocab))
    records = []
    for j, ev in enumerate(tasks):
        for x in range(n_examples):
            label = int(rng.integers(vocab))
            context = rng.normal(scale=0.3, size=vocab)
            for i, model in enumerate(tasks):
                logits = prefs[i] + context
                logits[label] += 1.5 if i == j else 0.5
                dist = np.exp(logits - logits.max())
                dist /= dist.sum()
                records.append({
                    "model_task": model,
                    "eval_task": ev,
                    "example_id": f"ex{x:03d}",
                    "logprob": float(np.log(dist[label])),
                    "dist": dist.tolist(),
                })
    return tasks, records


def to_jsonl(records):
    return "".join(json.dumps(r) + "\n" for r in records)
