"""Full detection runs and the statistics computed from their click logs."""

from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .detector import DetectorBank, ThresholdSpec, scan_block
from .exceptions import (
    DivisionByZero,
    FactorMismatch,
    InsufficientClicks,
    NoClicks,
    ValidationError,
    WrongChannelCount,
)
from .linalg import cholesky_factor, validate_covariance, verify_factor
from .process import FieldState, RngStream

log = logging.getLogger(__name__)

DEFAULT_TAU_STEPS = (1, 2, 5, 10, 20, 50)
# Segment length is part of the stream layout: segment k draws its increments
# from stream (seed, k). Changing it changes every result for a given seed.
SEGMENT_STEPS = 1 << 18


@dataclass
class ExperimentConfig:
    covariance: np.ndarray
    threshold: ThresholdSpec
    horizon_steps: int
    seed: int = 0
    factor: np.ndarray | None = None
    dt: float = 1e-3
    tau_steps: tuple = DEFAULT_TAU_STEPS
    n_workers: int = 1

    def __post_init__(self):
        self.covariance = validate_covariance(self.covariance)
        if self.factor is None:
            self.factor = cholesky_factor(self.covariance)
        else:
            self.factor = np.array(self.factor, dtype=np.complex128)
            if self.factor.shape != self.covariance.shape:
                raise FactorMismatch(
                    f"factor shape {self.factor.shape} does not match covariance {self.covariance.shape}"
                )
            check = verify_factor(self.factor, self.covariance)
            if not check.ok:
                raise FactorMismatch(f"factor does not reproduce covariance (residual {check.residual:.3g})")
            self.factor.setflags(write=False)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if int(self.horizon_steps) != self.horizon_steps or self.horizon_steps < 0:
            raise ValidationError("horizon_steps must be a nonnegative integer")
        self.horizon_steps = int(self.horizon_steps)
        taus = tuple(int(t) for t in self.tau_steps)
        if any(t < 0 for t in taus):
            raise ValidationError("tau_steps must be nonnegative")
        self.tau_steps = taus
        if int(self.n_workers) < 1:
            raise ValidationError("n_workers must be at least 1")
        self.n_workers = int(self.n_workers)
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        self.seed = int(self.seed)

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def threshold_value(self) -> float:
        return self.threshold.resolve(self.covariance)


@dataclass
class ClickLog:
    """Per-channel sorted click steps of one run."""

    steps: list
    dt: float = 1.0
    horizon_steps: int = 0

    def __post_init__(self):
        self.steps = [np.asarray(s, dtype=np.int64) for s in self.steps]
        for s in self.steps:
            if s.size > 1 and np.any(np.diff(s) <= 0):
                raise ValueError("click steps must be strictly increasing within a channel")

    @property
    def n_channels(self) -> int:
        return len(self.steps)

    @property
    def counts(self) -> np.ndarray:
        return np.array([s.size for s in self.steps], dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def events(self):
        """All clicks as ``(channel, step)`` pairs ordered by step, then channel."""
        ch = np.concatenate([np.full(s.size, j, dtype=np.int64) for j, s in enumerate(self.steps)]) \
            if self.steps else np.empty(0, np.int64)
        st = np.concatenate(self.steps) if self.steps else np.empty(0, np.int64)
        order = np.lexsort((ch, st))
        return ch[order], st[order]


@dataclass
class TallyResult:
    N: np.ndarray
    N12: dict = field(default_factory=dict)
    P_sum_norm: np.ndarray | None = None
    P_coinc_norm: dict = field(default_factory=dict)
    g2: dict = field(default_factory=dict)


def _segment_normals(seed, k, n, m):
    return RngStream(seed, k).standard_normal((n, m, 2))


def run_experiment(cfg: ExperimentConfig) -> ClickLog:
    """Evolve the field for ``cfg.horizon_steps`` steps and log every click.

    The horizon is cut into fixed-length segments whose increments come from
    their own stream ``(seed, segment index)``. Workers draw segments ahead of
    time in parallel; the detection scan carries the field across segment
    boundaries, so the log depends on the seed only, never on ``n_workers``.
    """
    m = cfg.dim
    bank = DetectorBank(cfg.threshold_value, m)
    state = FieldState.zeros(m)
    H = cfg.horizon_steps
    n_seg = -(-H // SEGMENT_STEPS)
    lengths = [min(SEGMENT_STEPS, H - k * SEGMENT_STEPS) for k in range(n_seg)]
    chans, steps = [], []

    def consume(normals):
        c, s = scan_block(bank, state, cfg.factor, normals, cfg.dt)
        chans.append(c)
        steps.append(s)

    if cfg.n_workers == 1 or n_seg <= 1:
        for k in range(n_seg):
            consume(_segment_normals(cfg.seed, k, lengths[k], m))
    else:
        with ThreadPoolExecutor(cfg.n_workers) as pool:
            pending = deque()
            nxt = 0
            for k in range(n_seg):
                while nxt < n_seg and len(pending) <= cfg.n_workers:
                    pending.append(pool.submit(_segment_normals, cfg.seed, nxt, lengths[nxt], m))
                    nxt += 1
                consume(pending.popleft().result())
    log.debug("simulated %d steps in %d segments", H, n_seg)

    if chans:
        c = np.concatenate(chans)
        s = np.concatenate(steps)
    else:
        c = s = np.empty(0, np.int64)
    return ClickLog([s[c == j] for j in range(m)], dt=cfg.dt, horizon_steps=H)


def _two_channels(log: ClickLog):
    if log.n_channels != 2:
        raise WrongChannelCount(f"coincidence statistics need 2 channels, got {log.n_channels}")
    return log.steps[0], log.steps[1]


@nb.njit(cache=True)
def _greedy_pairs(a, b, tau):
    p = 0
    n = 0
    nb_ = b.shape[0]
    for t in a:
        while p < nb_ and b[p] < t - tau:
            p += 1
        if p < nb_ and b[p] <= t + tau:
            n += 1
            p += 1
    return n


def coincidence_count(log: ClickLog, tau_steps: int) -> int:
    """Number of channel-0/channel-1 click pairs at most ``tau_steps`` apart.

    Channel-0 clicks are taken in time order; each is paired with the earliest
    unused channel-1 click inside its window. No click is used twice.
    """
    a, b = _two_channels(log)
    if tau_steps < 0:
        raise ValueError("tau_steps must be nonnegative")
    return int(_greedy_pairs(a, b, int(tau_steps)))


def max_matching_count(ch1, ch2, tau_steps: int) -> int:
    """Maximum one-to-one pairing of clicks within ``tau_steps`` (reference
    oracle via a general bipartite matching; quadratic memory, small logs only)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    a = np.asarray(ch1, dtype=np.int64)
    b = np.asarray(ch2, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    adj = np.abs(a[:, None] - b[None, :]) <= tau_steps
    match = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return int(np.count_nonzero(match >= 0))


def frequencies_from_counts(counts, n12=None) -> np.ndarray:
    """``N_j / sum N`` or, given a coincidence count, ``N_j / (N1 + N2 - N12)``."""
    counts = np.asarray(counts, dtype=np.int64)
    if n12 is None:
        total = counts.sum()
        if total == 0:
            raise NoClicks("no clicks recorded")
        return counts / total
    if counts.size != 2:
        raise WrongChannelCount("coincidence normalization needs 2 channels")
    denom = counts.sum() - n12
    if denom <= 0:
        raise NoClicks("no clicks recorded")
    return counts / denom


def detection_frequencies(log: ClickLog, normalization: str = "sum", tau_steps: int | None = None):
    if normalization == "sum":
        return frequencies_from_counts(log.counts)
    if normalization == "coincidence":
        if tau_steps is None:
            raise ValueError("coincidence normalization needs tau_steps")
        _two_channels(log)
        return frequencies_from_counts(log.counts, coincidence_count(log, tau_steps))
    raise ValueError(f"unknown normalization {normalization!r}")


def g2_from_counts(n1, n2, n12) -> float:
    if n1 <= 0 or n2 <= 0:
        raise DivisionByZero("g2 is undefined when a channel has no clicks")
    return n12 * (n1 + n2 - n12) / (n1 * n2)


def g2_curve(log: ClickLog, tau_list) -> dict:
    """Second-order coherence ``g2(0; tau)`` for each coincidence window."""
    _two_channels(log)
    n1, n2 = (int(x) for x in log.counts)
    return {int(t): g2_from_counts(n1, n2, coincidence_count(log, t)) for t in tau_list}


def hitting_time_stats(log: ClickLog, dt: float | None = None) -> np.ndarray:
    """Mean time between successive clicks, per channel."""
    dt = log.dt if dt is None else dt
    out = np.empty(log.n_channels)
    for j, s in enumerate(log.steps):
        if s.size < 2:
            raise InsufficientClicks(f"channel {j} has {s.size} clicks, need at least 2")
        out[j] = np.diff(s).mean() * dt
    return out


def tally(log: ClickLog, tau_list=()) -> TallyResult:
    res = TallyResult(N=log.counts)
    if log.total:
        res.P_sum_norm = frequencies_from_counts(res.N)
    if log.n_channels == 2:
        n1, n2 = (int(x) for x in res.N)
        for t in tau_list:
            n12 = coincidence_count(log, t)
            res.N12[int(t)] = n12
            if n1 + n2 > n12:
                res.P_coinc_norm[int(t)] = frequencies_from_counts(res.N, n12)
            if n1 > 0 and n2 > 0:
                res.g2[int(t)] = g2_from_counts(n1, n2, n12)
    return res
