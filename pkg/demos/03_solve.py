"""
Optimal mixture on the simplex
==============================

Energy E(p) = -u'p + 1/2 p'Wp with u = beta * S 1 and W = lambda * S (+ shift).
Minimising over the probability simplex gives the task proportions.
"""

import numpy as np

from mixopt import PotentialParams, build_potentials, kkt_residual, solve, sweep_beta_lambda, validate_similarity

tasks = ["a", "b", "c"]
s = validate_similarity(tasks, [[1, 0.5, 0], [0.5, 1, 0], [0, 0, 1]])

# beta = lambda: interior optimum (3, 3, 1) / 7
pot = build_potentials(s, PotentialParams(beta=10, lam=10))
sol = solve(pot)
print(sol.solver_path.value, sol.p, 7 * sol.p)
print("KKT residual", kkt_residual(sol, pot))

# beta = 2 lambda: the free stationary point leaves the simplex, the active set
# drops task c
sol = solve(build_potentials(s, PotentialParams(beta=20, lam=10)))
print(sol.solver_path.value, np.round(sol.p, 6), "active:", sorted(sol.active_set))

# Sweeping beta/lambda: small ratios spread mass, large ones concentrate it
ratios = [0.1, 0.5, 1, 2, 5]
for r, sol in zip(ratios, sweep_beta_lambda(s, ratios)):
    print(f"beta/lambda={r:<4} entropy={sol.entropy:.4f} p={np.round(sol.p, 3)}")
