from functools import lru_cache

import numpy as np
import pytest

from mixopt import Potentials, validate_similarity


@pytest.fixture
def three_task_pot():
    """Pairwise [[1,.5,0],[.5,1,0],[0,0,1]] with unary = row sums; optimum (3,3,1)/7."""
    w = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return Potentials.from_arrays(w.sum(axis=1), w, ["a", "b", "c"])


@pytest.fixture
def vertex_pot():
    return Potentials.from_arrays([10.0, 0.0, 0.0], np.eye(3), ["a", "b", "c"])


@pytest.fixture
def exchange():
    return validate_similarity(["a", "b"], [[0.0, 1.0], [1.0, 0.0]], "PMI")


def random_psd_pot(rng, n):
    g = rng.normal(size=(n, n))
    w = g @ g.T + 1e-3 * np.eye(n)
    u = rng.normal(scale=2.0, size=n)
    return Potentials.from_arrays(u, w)


@lru_cache(maxsize=None)
def simplex_grid(n, step):
    """All points of the simplex whose coordinates are multiples of ``step``."""
    m = int(round(1 / step))
    if n == 1:
        return np.ones((1, 1))
    pts = []

    def rec(prefix, left, depth):
        if depth == n - 1:
            pts.append(prefix + [left])
            return
        for c in range(left + 1):
            rec(prefix + [c], left - c, depth + 1)

    rec([], m, 0)
    out = np.asarray(pts, dtype=float) / m
    out.setflags(write=False)
    return out


def grid_energies(pts, u, w):
    return -pts @ u + 0.5 * np.einsum("ij,jk,ik->i", pts, w, pts)
