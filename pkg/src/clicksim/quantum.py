"""Closed-form quantum predictions the click statistics are compared against."""

from __future__ import annotations

import numpy as np

from .exceptions import ZeroTrace
from .linalg import trace_power


def density_from_covariance(B) -> np.ndarray:
    """Density matrix rho = B / Tr B."""
    b = np.asarray(B, dtype=np.complex128)
    tr = trace_power(b)
    if not tr > 0:
        raise ZeroTrace("covariance must have positive trace")
    return b / tr


def born_probability(rho, j: int) -> float:
    """Detection probability for channel ``j`` (projection onto e_j)."""
    rho = np.asarray(rho)
    m = rho.shape[0]
    if not 0 <= j < m:
        raise IndexError(f"channel {j} out of range for dimension {m}")
    return float(rho[j, j].real)


def born_probabilities(rho) -> np.ndarray:
    return np.real(np.diag(np.asarray(rho))).copy()


def expected_clicks(power, horizon, threshold):
    """Mean click count b_jj * T / E_d of a channel with the given power."""
    return power * horizon / threshold


def expected_hitting_time(sigma2, threshold):
    """Mean first time the energy of a power-``sigma2`` process reaches ``threshold``."""
    return threshold / sigma2
