"""Minimise the MRF energy ``-u.p + p.W.p / 2`` over the probability simplex.

The unconstrained-in-sign stationary point has a closed form; when it leaves
the nonnegative orthant an active-set refinement restricts the support, and a
projected-gradient loop is kept as a last resort.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy import linalg

from .core import (
    MixtureSolution,
    PotentialParams,
    Potentials,
    SimilarityMatrix,
    SolverPath,
)
from .errors import DimensionMismatch, NotPsd, SingularPairwise, SolverDiverged
from .spectral import eigvals_desc, psd_shift

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-12
DUAL_TOL = 1e-8
PG_MAX_ITER = 100_000
PG_ENERGY_TOL = 1e-12


def build_potentials(
    s: SimilarityMatrix,
    params: PotentialParams = PotentialParams(),
    shift_mode: str = "auto",
    epsilon_rel: float = 1e-8,
    extra_shift: float = 0.0,
) -> Potentials:
    """Unary ``beta * S 1`` and pairwise ``lam * S (+ shift I)``.

    ``extra_shift`` adds a further diagonal term on top of whatever ``shift_mode``
    produced; it exists for studying how heavy shifting flattens the optimum.
    """
    values = np.asarray(s.values, dtype=float)
    unary = params.beta * values.sum(axis=1)
    pairwise = params.lam * values
    mode = shift_mode.lower()
    if mode == "auto":
        pairwise, shift = psd_shift(pairwise, epsilon_rel)
    elif mode == "off":
        lmin = eigvals_desc(pairwise)[-1]
        if lmin < -1e-9:
            raise NotPsd(
                f"lambda * S has smallest eigenvalue {lmin:.6g}; use shift_mode='auto'"
            )
        shift = 0.0
    else:
        raise ValueError(f"unknown shift_mode {shift_mode!r}")
    if extra_shift:
        if extra_shift < 0:
            raise ValueError("extra_shift must be non-negative")
        pairwise = pairwise + extra_shift * np.eye(len(unary))
        shift += extra_shift
    return Potentials(s.tasks, unary, pairwise, float(shift), params)


def energy(p, pot: Potentials) -> float:
    p = np.asarray(p, dtype=float)
    if p.shape != (pot.n,):
        raise DimensionMismatch(f"mixture of length {p.shape} for {pot.n} tasks")
    return float(-pot.unary @ p + 0.5 * p @ pot.pairwise @ p)


def _factor_solve(pairwise: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        c = linalg.cho_factor(pairwise, check_finite=False)
        out = linalg.cho_solve(c, rhs, check_finite=False)
    except linalg.LinAlgError:
        # indefinite but possibly invertible
        try:
            out = linalg.solve(pairwise, rhs, assume_a="sym", check_finite=False)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SingularPairwise(f"pairwise matrix is singular: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise SingularPairwise("linear solve produced non-finite values")
    return out


def _interior(unary: np.ndarray, pairwise: np.ndarray) -> tuple[np.ndarray, float]:
    n = unary.shape[0]
    if n == 1:
        return np.ones(1), float(unary[0] - pairwise[0, 0])
    sol = _factor_solve(pairwise, np.column_stack([unary, np.ones(n)]))
    w_u, w_1 = sol[:, 0], sol[:, 1]
    a = w_u.sum()
    b = w_1.sum()
    if not abs(b) > 1e-300:
        raise SingularPairwise("1' W^-1 1 vanishes; stationary point is undefined")
    nu = (a - 1.0) / b
    p = w_u - nu * w_1
    # one step of iterative refinement on the KKT system; nu loses digits to
    # cancellation when a shifted W is nearly singular
    r = pairwise @ p - unary + nu
    d = 1.0 - p.sum()
    w_r = _factor_solve(pairwise, -r)
    dnu = (w_r.sum() - d) / b
    p = p + w_r - dnu * w_1
    nu += dnu
    # the affine constraint holds analytically; remove round-off drift
    p += (1.0 - p.sum()) / n
    return p, float(nu)


def solve_interior(pot: Potentials) -> tuple[np.ndarray, float]:
    """Closed-form stationary point of the energy on the affine hull of the simplex.

    Returns ``(p, nu)`` with ``p = W^-1 (u - nu 1)`` and
    ``nu = (1' W^-1 u - 1) / (1' W^-1 1)``. Entries of ``p`` may be negative.
    """
    return _interior(pot.unary, pot.pairwise)


def _dual(pot: Potentials, p: np.ndarray, nu: float) -> np.ndarray:
    return pot.pairwise @ p - pot.unary + nu


def _finish(pot, p, nu, active, path, iterations) -> MixtureSolution:
    p = np.where(p < 0, 0.0, p)
    p[list(active)] = 0.0
    p = p / p.sum()
    return MixtureSolution(pot.tasks, p, nu, frozenset(active), energy(p, pot), path, iterations)


def _restricted(pot: Potentials, free: Sequence[int]) -> tuple[np.ndarray, float]:
    idx = list(free)
    p_free, nu = _interior(pot.unary[idx], pot.pairwise[np.ix_(idx, idx)])
    p = np.zeros(pot.n)
    p[idx] = p_free
    return p, nu


def _active_set(pot: Potentials, max_iter: int):
    """Drop the most negative coordinate until feasible, then run a primal
    active-set loop (release by most negative multiplier, blocking steps)."""
    n = pot.n
    free = list(range(n))
    p, nu = _restricted(pot, free)
    it = 0
    while p[free].min() < -CLAMP_TOL:
        worst = free[int(np.argmin(p[free]))]
        free.remove(worst)
        p, nu = _restricted(pot, free)
        it += 1
    p[free] = np.maximum(p[free], 0.0)

    while it < max_iter:
        active = [i for i in range(n) if i not in free]
        if not active:
            return p, nu, frozenset(), it
        mu = _dual(pot, p, nu)[active]
        if mu.min() >= -DUAL_TOL:
            return p, nu, frozenset(active), it
        free = sorted(free + [active[int(np.argmin(mu))]])
        # walk from the feasible p toward the face optimum, stopping at the first blocker
        while it < max_iter:
            it += 1
            target, t_nu = _restricted(pot, free)
            if target[free].min() >= -CLAMP_TOL:
                p, nu = target, t_nu
                p[free] = np.maximum(p[free], 0.0)
                break
            step, blocker = 1.0, None
            for i in free:
                if target[i] < p[i]:
                    ratio = p[i] / (p[i] - target[i])
                    if ratio < step:
                        step, blocker = ratio, i
            p = p + step * (target - p)
            if blocker is None:
                blocker = free[int(np.argmin(target[free]))]
            p[blocker] = 0.0
            free.remove(blocker)
            p[free] = np.maximum(p[free], 0.0)
            p /= p.sum()
    return None


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u * np.arange(1, y.size + 1) > css)[0][-1]
    tau = css[k] / (k + 1.0)
    return np.maximum(y - tau, 0.0)


def _projected_gradient(pot: Potentials, p0=None) -> MixtureSolution:
    n = pot.n
    lmax = float(eigvals_desc(pot.pairwise)[0])
    step = 1.0 / lmax if lmax > 0 else 1.0
    p = np.full(n, 1.0 / n) if p0 is None else project_simplex(p0)
    e_prev = energy(p, pot)
    it = 0
    for it in range(1, PG_MAX_ITER + 1):
        grad = pot.pairwise @ p - pot.unary
        p = project_simplex(p - step * grad)
        e = energy(p, pot)
        if abs(e_prev - e) < PG_ENERGY_TOL:
            break
        e_prev = e
    if not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > 1e-8:
        raise SolverDiverged("projected gradient did not return a point on the simplex")
    support = p > 0
    nu = float(np.mean((pot.unary - pot.pairwise @ p)[support]))
    active = frozenset(np.flatnonzero(~support).tolist())
    return MixtureSolution(
        pot.tasks, p, nu, active, energy(p, pot), SolverPath.PROJECTED_GRADIENT, it
    )


def solve(pot: Potentials, max_active_iter: int | None = None) -> MixtureSolution:
    """Minimise the energy over the simplex.

    ``max_active_iter`` caps the active-set refinement (default ``10 n + 10``);
    once exhausted the projected-gradient fallback takes over.
    """
    n = pot.n
    if n == 1:
        p, nu = _interior(pot.unary, pot.pairwise)
        return MixtureSolution(pot.tasks, p, nu, frozenset(), energy(p, pot), SolverPath.INTERIOR)

    p, nu = solve_interior(pot)
    if p.min() >= -CLAMP_TOL:
        return _finish(pot, p, nu, frozenset(), SolverPath.INTERIOR, 0)

    cap = 10 * n + 10 if max_active_iter is None else max_active_iter
    found = _active_set(pot, cap)
    if found is not None:
        p, nu, active, it = found
        return _finish(pot, p, nu, active, SolverPath.ACTIVE_SET, it)
    log.warning("active-set refinement did not converge in %d steps; using projected gradient", cap)
    return _projected_gradient(pot)


def kkt_residual(sol: MixtureSolution, pot: Potentials) -> float:
    """Stationarity violation on free coordinates plus dual infeasibility on active ones."""
    p = np.asarray(sol.p, dtype=float)
    if p.shape != (pot.n,):
        raise DimensionMismatch(f"solution of length {p.shape} for {pot.n} tasks")
    r = _dual(pot, p, sol.nu)
    active = sorted(sol.active_set)
    free = np.ones(pot.n, dtype=bool)
    free[active] = False
    stat = float(np.max(np.abs(r[free]))) if free.any() else 0.0
    dual = max(0.0, -float(r[active].min())) if active else 0.0
    return stat + dual


def sweep_beta_lambda(
    s: SimilarityMatrix,
    ratios: Sequence[float],
    lambda_fixed: float = 10.0,
    shift_mode: str = "auto",
    epsilon_rel: float = 1e-8,
) -> list[MixtureSolution]:
    """Solve once per ``beta / lambda`` ratio with ``lambda`` held fixed.

    Each solution exposes ``.entropy`` for tracing the representative/diverse
    tradeoff.
    """
    out = []
    for r in ratios:
        if not r > 0:
            raise ValueError(f"ratios must be positive, got {r!r}")
        params = PotentialParams(beta=r * lambda_fixed, lam=lambda_fixed)
        out.append(solve(build_potentials(s, params, shift_mode, epsilon_rel)))
    return out
