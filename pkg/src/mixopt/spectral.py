"""Eigenvalue analysis and diagonal shifting into the PSD cone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import SYMMETRY_TOL
from .errors import AsymmetryTooLarge, DimensionMismatch, NonFiniteEntry


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray  # descending

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def gamma_lower_bound(self) -> float:
        """Eigenvalue ratio bounding the submodularity ratio from below."""
        if self.lambda_max <= 0:
            return 0.0
        return max(self.lambda_min, 0.0) / self.lambda_max


def _symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteEntry("matrix has non-finite entries")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(m)))):
        raise AsymmetryTooLarge(f"matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:g}")
    return 0.5 * (m + m.T)


def eigvals_desc(m) -> np.ndarray:
    w = linalg.eigvalsh(_symmetric(m))
    return w[::-1].copy()


def eigen_spectrum(m) -> SpectrumReport:
    w = eigvals_desc(m)
    w.setflags(write=False)
    return SpectrumReport(w)


def is_psd(m, tol: float = 0.0) -> bool:
    return bool(eigvals_desc(m)[-1] >= -tol)


def psd_shift(pairwise, epsilon_rel: float = 1e-8) -> tuple[np.ndarray, float]:
    """Add a multiple of the identity so that the matrix is positive definite.

    Indefinite input is shifted by ``|lambda_min| + epsilon_rel * max(lambda_max, 1)``.
    PSD input is left alone unless its smallest eigenvalue falls below the
    jitter floor ``epsilon_rel * max(lambda_max, 1)``, in which case the floor
    itself is added.

    Returns the shifted matrix and the shift amount.
    """
    if epsilon_rel < 0:
        raise ValueError("epsilon_rel must be non-negative")
    m = _symmetric(pairwise)
    w = linalg.eigvalsh(m)
    lmin, lmax = float(w[0]), float(w[-1])
    floor = epsilon_rel * max(lmax, 1.0)
    if lmin < 0:
        shift = abs(lmin) + floor
    elif lmin < floor:
        shift = floor
    else:
        shift = 0.0
    if shift == 0.0:
        return m, 0.0
    out = m.copy()
    out[np.diag_indices_from(out)] += shift
    return out, shift
