"""Discretized complex Wiener processes.

The standard complex Wiener process has independent components
``W_j = w1_j + i w2_j`` with real parts of variance ``s/2`` each, so that
``E|W_j(s)|^2 = s``. A process with covariance ``B = CC*`` is ``phi = C W``.
Increments are exact Gaussians, so stepping introduces no error in the field
itself.

Random numbers come from counter-based Philox generators keyed by
``(seed, stream_id)``; the same pair always yields the same sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionMismatch

_U64 = 1 << 64


class RngStream:
    """Reproducible Gaussian source identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed < _U64 and 0 <= stream_id < _U64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def standard_normal(self, size):
        return self.generator.standard_normal(size)


@dataclass
class FieldState:
    phi: np.ndarray
    step_index: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "FieldState":
        return cls(np.zeros(dim, dtype=np.complex128), 0)

    @property
    def dim(self) -> int:
        return self.phi.shape[0]


def _check_dt(dt):
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")


def standard_complex_increment(rng: RngStream, dim: int, dt: float) -> np.ndarray:
    """One increment of the standard complex Wiener process over ``dt``."""
    _check_dt(dt)
    g = rng.standard_normal((dim, 2))
    return (g[:, 0] + 1j * g[:, 1]) * math.sqrt(dt / 2.0)


def standard_complex_increments(rng: RngStream, n_steps: int, dim: int, dt: float) -> np.ndarray:
    """``n_steps`` consecutive increments, shape ``(n_steps, dim)``.

    Consumes the stream in the same order as repeated calls to
    :func:`standard_complex_increment`.
    """
    _check_dt(dt)
    g = rng.standard_normal((n_steps, dim, 2))
    return (g[..., 0] + 1j * g[..., 1]) * math.sqrt(dt / 2.0)


def advance(state: FieldState, C, rng: RngStream, dt: float) -> FieldState:
    """Return the field one step later: ``phi + C xi``."""
    C = np.asarray(C)
    if C.shape != (state.dim, state.dim):
        raise DimensionMismatch(f"factor {C.shape} does not act on a {state.dim}-dim field")
    xi = standard_complex_increment(rng, state.dim, dt)
    return FieldState(state.phi + C @ xi, state.step_index + 1)


class CovarianceEstimate(NamedTuple):
    matrix: np.ndarray
    mean: np.ndarray
    rel_error: float
    n_samples: int


def empirical_covariance(C, n_samples: int, s: float, rng: RngStream | None = None,
                         n_steps: int = 1, chunk: int = 100_000) -> CovarianceEstimate:
    """Monte Carlo estimate of ``E[phi_i(s) conj(phi_j(s))]`` for ``phi = C W``.

    Each trajectory is built from ``n_steps`` exact increments of size
    ``s / n_steps``. ``rel_error`` is the Frobenius-relative deviation from
    ``s * CC*``.
    """
    if n_samples < 1000:
        raise ValueError("empirical_covariance needs at least 1000 samples")
    _check_dt(s)
    C = np.asarray(C, dtype=np.complex128)
    m = C.shape[0]
    rng = rng if rng is not None else RngStream(0)
    dt = s / n_steps
    acc = np.zeros((m, m), dtype=np.complex128)
    total = np.zeros(m, dtype=np.complex128)
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        w = np.zeros((n, m), dtype=np.complex128)
        for _ in range(n_steps):
            w += standard_complex_increments(rng, n, m, dt)
        phi = w @ C.T
        acc += phi.T @ phi.conj()
        total += phi.sum(axis=0)
        done += n
    cov = acc / n_samples
    target = s * (C @ C.conj().T)
    rel = float(np.linalg.norm(cov - target) / np.linalg.norm(target))
    return CovarianceEstimate(cov, total / n_samples, rel, n_samples)
