"""Threshold detectors: one per channel, clicking when ``|phi_j|^2 >= E_d``.

A clicking channel is reset to zero; the joint (correlated) increments keep
flowing into every channel, so channels never influence each other. There is
no dead time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba as nb
import numpy as np

from .exceptions import DimensionMismatch, MaxStepsExceeded
from .linalg import trace_power
from .process import FieldState, RngStream

MAX_STEPS = 10**9
# Bridge intervals whose endpoints both sit more than this many (per-component)
# standard deviations inside the threshold radius are not subdivided.
BRIDGE_MARGIN = 6.0


class ClickEvent(NamedTuple):
    channel: int
    step: int


@dataclass(frozen=True)
class ThresholdSpec:
    """Detection threshold, absolute or as a fraction of Tr B."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("absolute", "trace_fraction"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"threshold value must be positive, got {self.value!r}")

    @classmethod
    def absolute(cls, value):
        return cls("absolute", float(value))

    @classmethod
    def trace_fraction(cls, value):
        return cls("trace_fraction", float(value))

    def resolve(self, B) -> float:
        if self.kind == "absolute":
            return self.value
        return self.value * trace_power(B)

    def to_dict(self):
        return {self.kind: self.value}


@dataclass
class DetectorBank:
    threshold: float
    channels: int
    last_click: np.ndarray = field(default=None)

    def __post_init__(self):
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ValueError(f"threshold must be positive, got {self.threshold!r}")
        if self.channels < 1:
            raise ValueError("a detector bank needs at least one channel")
        if self.last_click is None:
            self.last_click = np.full(self.channels, -1, dtype=np.int64)

    def _check(self, state: FieldState):
        if state.dim != self.channels:
            raise DimensionMismatch(f"bank has {self.channels} channels, field has {state.dim}")


def reset_channel(bank: DetectorBank, state: FieldState, j: int) -> FieldState:
    """Restart channel ``j`` at zero field; other channels are left alone."""
    state.phi[j] = 0.0
    return state


def step_and_detect(bank: DetectorBank, state: FieldState) -> list[ClickEvent]:
    """Emit a click for every channel at or above threshold, then reset them.

    ``state`` is the field right after advancing to ``state.step_index`` and
    is modified in place.
    """
    bank._check(state)
    energy = state.phi.real**2 + state.phi.imag**2
    events = []
    for j in np.flatnonzero(energy >= bank.threshold):
        j = int(j)
        events.append(ClickEvent(j, state.step_index))
        bank.last_click[j] = state.step_index
        reset_channel(bank, state, j)
    return events


@nb.njit(nogil=True, cache=True)
def _scan_block(g, C, scale, phi, threshold, step0):
    # g: (n, m, 2) standard normals; phi updated in place.
    n, m = g.shape[0], g.shape[1]
    cap = 256
    chans = np.empty(cap, np.int64)
    steps = np.empty(cap, np.int64)
    k = 0
    xi = np.empty(m, np.complex128)
    for s in range(n):
        for a in range(m):
            xi[a] = complex(g[s, a, 0] * scale, g[s, a, 1] * scale)
        for j in range(m):
            acc = 0j
            for a in range(m):
                acc += C[j, a] * xi[a]
            v = phi[j] + acc
            if v.real * v.real + v.imag * v.imag >= threshold:
                if k == cap:
                    cap *= 2
                    c2 = np.empty(cap, np.int64)
                    s2 = np.empty(cap, np.int64)
                    c2[:k] = chans[:k]
                    s2[:k] = steps[:k]
                    chans, steps = c2, s2
                chans[k] = j
                steps[k] = step0 + s + 1
                k += 1
                v = 0j
            phi[j] = v
    return chans[:k], steps[:k]


def scan_block(bank: DetectorBank, state: FieldState, C, normals, dt):
    """Advance ``state`` through a block of pre-drawn normals, detecting clicks.

    ``normals`` has shape ``(n_steps, m, 2)`` and is interpreted exactly as in
    :func:`clicksim.process.standard_complex_increments`. Returns the click
    ``(channels, steps)`` arrays in chronological order.
    """
    bank._check(state)
    C = np.ascontiguousarray(C, dtype=np.complex128)
    if C.shape != (bank.channels, bank.channels):
        raise DimensionMismatch(f"factor {C.shape} does not match {bank.channels} channels")
    chans, steps = _scan_block(normals, C, math.sqrt(dt / 2.0), state.phi,
                               float(bank.threshold), int(state.step_index))
    state.step_index += normals.shape[0]
    if chans.size:
        for j in range(bank.channels):
            sel = steps[chans == j]
            if sel.size:
                bank.last_click[j] = sel[-1]
    return chans, steps


@nb.njit(cache=True)
def _refine_crossing(gen, ax, ay, bx, by, t0, dt, sc, r2, levels, margin):
    # Depth-first Brownian-bridge bisection of one coarse step; returns the
    # first fine grid time with energy >= r2, or -1.
    r = math.sqrt(r2)
    size = levels + 2
    st = np.empty((size, 5))
    dep = np.empty(size, np.int64)
    st[0, 0], st[0, 1], st[0, 2], st[0, 3], st[0, 4] = ax, ay, bx, by, t0
    dep[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        ax, ay, bx, by, t0 = st[sp, 0], st[sp, 1], st[sp, 2], st[sp, 3], st[sp, 4]
        d = dep[sp]
        h = dt / 2.0**d
        if d == levels:
            if bx * bx + by * by >= r2:
                return t0 + h
            continue
        near = r - margin * sc * math.sqrt(h)
        if max(math.sqrt(ax * ax + ay * ay), math.sqrt(bx * bx + by * by)) < near:
            continue
        sm = sc * math.sqrt(h / 4.0)
        mx = 0.5 * (ax + bx) + sm * gen.standard_normal()
        my = 0.5 * (ay + by) + sm * gen.standard_normal()
        st[sp, 0], st[sp, 1], st[sp, 2], st[sp, 3], st[sp, 4] = mx, my, bx, by, t0 + 0.5 * h
        dep[sp] = d + 1
        st[sp + 1, 0], st[sp + 1, 1], st[sp + 1, 2], st[sp + 1, 3], st[sp + 1, 4] = ax, ay, mx, my, t0
        dep[sp + 1] = d + 1
        sp += 2
    return -1.0


@nb.njit(cache=True)
def _hitting_times(gen, sigma2, r2, dt, n_trials, levels, max_steps, margin):
    out = np.empty(n_trials)
    sc = math.sqrt(sigma2 / 2.0)  # per-component std per unit sqrt(time)
    sd = sc * math.sqrt(dt)
    r = math.sqrt(r2)
    for i in range(n_trials):
        x = 0.0
        y = 0.0
        out[i] = -1.0
        for n in range(max_steps):
            nx = x + sd * gen.standard_normal()
            ny = y + sd * gen.standard_normal()
            e = nx * nx + ny * ny
            if levels > 0:
                near = r - margin * sd
                if max(math.sqrt(x * x + y * y), math.sqrt(e)) >= near:
                    t = _refine_crossing(gen, x, y, nx, ny, n * dt, dt, sc, r2, levels, margin)
                    if t >= 0.0:
                        out[i] = t
                        break
            elif e >= r2:
                out[i] = (n + 1) * dt
                break
            x = nx
            y = ny
        if out[i] < 0.0:
            return out[: i + 1]
    return out


def hitting_times(sigma2, threshold, dt, rng: RngStream, n_trials=1,
                  bridge_levels=0, max_steps=MAX_STEPS) -> np.ndarray:
    """First times a scalar complex Wiener process of power ``sigma2``
    reaches energy ``threshold``, one per independent trial.

    With ``bridge_levels = 0`` the path is only observed on the ``dt`` grid and
    each time is ``step * dt``; this overestimates the continuous hitting time
    by an overshoot of order ``sqrt(dt)``. With ``bridge_levels = L > 0``, coarse
    steps that come close to the threshold are bisected ``L`` times by exact
    Brownian-bridge sampling, so crossings are resolved on a ``dt / 2**L`` grid
    at little extra cost.
    """
    if not (sigma2 > 0):
        raise ValueError("sigma2 must be positive")
    if not (threshold > 0):
        raise ValueError("threshold must be positive")
    if not (dt > 0):
        raise ValueError("dt must be positive")
    if bridge_levels < 0:
        raise ValueError("bridge_levels must be nonnegative")
    out = _hitting_times(rng.generator, float(sigma2), float(threshold), float(dt),
                         int(n_trials), int(bridge_levels), int(max_steps), BRIDGE_MARGIN)
    if out.size < n_trials or out[-1] < 0:
        raise MaxStepsExceeded(f"no threshold crossing within {max_steps} steps")
    return out


def single_channel_hitting_time(sigma2, threshold, dt, rng: RngStream,
                                bridge_levels=0, max_steps=MAX_STEPS) -> float:
    return float(hitting_times(sigma2, threshold, dt, rng, 1, bridge_levels, max_steps)[0])
