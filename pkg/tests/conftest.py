import math
import time

import numpy as np
import pytest

from clicksim.detector import ThresholdSpec
from clicksim.experiment import ExperimentConfig, run_experiment

B2 = np.array([[10, 5 + 2j], [5 - 2j, 9]], dtype=complex)
S2 = np.array([[1, 3j], [2 - 2j, 1j]], dtype=complex)

B4 = np.array(
    [
        [14, 4 - 2j, -2 - 5j, 7 - 4j],
        [4 + 2j, 12, -7 - 1j, 2],
        [-2 + 5j, -7 + 1j, 8, 1 + 4j],
        [7 + 4j, 2, 1 - 4j, 6],
    ],
    dtype=complex,
)
S4 = np.array(
    [
        [2 - 2j, 1j, 1, 2],
        [1, 3j, 1, -1],
        [1j, -2j, 1j, 1 + 1j],
        [2, 0, 1, 1],
    ],
    dtype=complex,
)

TARGET_CLICKS = 200_000

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES = []


def fine_dt(B, threshold):
    """Step size 1e-3 * E_d / max_j b_jj used for the long Born-rule runs."""
    return 1e-3 * threshold / float(np.max(np.diag(B).real))


def long_run_config(B, seed, clicks=TARGET_CLICKS, margin=1.15):
    threshold = ThresholdSpec.trace_fraction(1 / 20)
    E_d = threshold.resolve(B)
    dt = fine_dt(B, E_d)
    rate = float(np.trace(B).real) * dt / E_d  # clicks per step, ignoring overshoot
    horizon = math.ceil(margin * clicks / rate)
    return ExperimentConfig(B, threshold, horizon, seed=seed, dt=dt, tau_steps=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50))


def _timed_run(cfg):
    t0 = time.perf_counter()
    log = run_experiment(cfg)
    return cfg, log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def long_run_2x2_timed():
    return _timed_run(long_run_config(B2, seed=20240601))


@pytest.fixture(scope="session")
def long_run_4x4_timed():
    return _timed_run(long_run_config(B4, seed=20240602))


@pytest.fixture(scope="session")
def long_run_2x2(long_run_2x2_timed):
    return long_run_2x2_timed[:2]


@pytest.fixture(scope="session")
def long_run_4x4(long_run_4x4_timed):
    return long_run_4x4_timed[:2]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
