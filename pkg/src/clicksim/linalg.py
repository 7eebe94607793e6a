"""Complex matrix kernel: covariance validation and factorization B = CC*.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Validated
covariances and factors are returned read-only so they can be shared between
workers without copying.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import DimensionMismatch, NotHermitian, NotPSD, NotSquare, ValidationError, ZeroTrace

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-10
FACTOR_RTOL = 1e-10


class FactorCheck(NamedTuple):
    ok: bool
    residual: float


class RealFactorPair(NamedTuple):
    """Real and imaginary parts of a factor, ``C = K1 + 1j * K2``."""

    K1: np.ndarray
    K2: np.ndarray

    def recombine(self) -> np.ndarray:
        return self.K1 + 1j * self.K2


def _as_complex_square(raw, name="matrix") -> np.ndarray:
    try:
        a = np.array(raw, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not a numeric grid: {exc}") from None
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NotSquare(f"{name} must be a non-empty square grid, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def trace_power(B) -> float:
    """Total power Tr B (real part; B is Hermitian)."""
    return float(np.trace(np.asarray(B)).real)


def validate_covariance(raw) -> np.ndarray:
    """Check that ``raw`` is a Hermitian PSD matrix with positive trace.

    Non-Hermitian input is rejected rather than symmetrized. Returns a
    read-only complex copy.
    """
    b = _as_complex_square(raw, "covariance")
    scale = np.abs(b).max()
    herm_residual = np.abs(b - b.conj().T).max()
    if herm_residual > HERMITIAN_RTOL * scale:
        raise NotHermitian(
            f"covariance is not Hermitian: max |b_ij - conj(b_ji)| = {herm_residual:.3g}"
        )
    tr = trace_power(b)
    eigs = np.linalg.eigvalsh(b)
    if eigs[0] < -PSD_RTOL * abs(tr):
        raise NotPSD(f"covariance has negative eigenvalue {eigs[0]:.6g}")
    if tr <= 0.0:
        raise ZeroTrace("covariance must have positive trace")
    return _frozen(b)


def cholesky_factor(B) -> np.ndarray:
    """Lower-triangular complex Cholesky factor C with CC* = B.

    Semidefinite matrices are handled by zeroing a column whose pivot vanishes
    (within ``PSD_RTOL * Tr B``); for PSD input the rest of that column is then
    zero as well, so the factor stays exact and lower-triangular.
    """
    b = np.asarray(B, dtype=np.complex128)
    m = b.shape[0]
    tol = PSD_RTOL * trace_power(b)
    L = np.zeros((m, m), dtype=np.complex128)
    for k in range(m):
        row = L[k, :k]
        d = b[k, k].real - float(np.vdot(row, row).real)
        col = b[k + 1 :, k] - L[k + 1 :, :k] @ row.conj()
        if d < -tol:
            raise NotPSD(f"negative pivot {d:.6g} at column {k}")
        if d <= 0.0 or (d <= tol and np.all(np.abs(col) <= tol)):
            if col.size and np.abs(col).max() > tol:
                raise NotPSD(f"zero pivot with nonzero column at {k}")
            continue
        L[k, k] = np.sqrt(d)
        L[k + 1 :, k] = col / L[k, k]
    check = verify_factor(L, b)
    if not check.ok:
        raise NotPSD(f"factorization residual {check.residual:.3g} exceeds tolerance")
    return _frozen(L)


def verify_factor(C, B, tol=None) -> FactorCheck:
    """Max entrywise residual of CC* against B; ok iff it is <= tol.

    ``tol`` defaults to ``1e-10 * Tr B``.
    """
    c = np.asarray(C, dtype=np.complex128)
    b = np.asarray(B, dtype=np.complex128)
    if c.ndim != 2 or c.shape != b.shape:
        raise DimensionMismatch(f"factor shape {c.shape} does not match covariance {b.shape}")
    if tol is None:
        tol = FACTOR_RTOL * trace_power(b)
    residual = float(np.abs(c @ c.conj().T - b).max())
    return FactorCheck(residual <= tol, residual)


def real_decomposition(C) -> RealFactorPair:
    c = np.asarray(C, dtype=np.complex128)
    return RealFactorPair(c.real.copy(), c.imag.copy())
