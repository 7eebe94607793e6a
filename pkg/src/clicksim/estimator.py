"""scikit-learn style front end to a detection run.

The "training data" is the covariance matrix B; fitting simulates the
threshold detectors and stores the click statistics as fitted attributes::

    sim = ThresholdDetectionSimulator(threshold=0.05, horizon_steps=10**6)
    sim.fit(B)
    sim.frequencies_, sim.born_probabilities_, sim.g2_
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .detector import ThresholdSpec
from .experiment import DEFAULT_TAU_STEPS, ExperimentConfig, hitting_time_stats, run_experiment, tally
from .exceptions import InsufficientClicks
from .linalg import validate_covariance
from .quantum import born_probabilities, density_from_covariance


class ThresholdDetectionSimulator(BaseEstimator):
    """Estimate click frequencies and g2 for a field with covariance B.

    Parameters
    ----------
    threshold : float
        Detection threshold, interpreted according to ``threshold_kind``.
    threshold_kind : {"trace_fraction", "absolute"}
    dt : float
        Time step.
    horizon_steps : int
        Number of simulated steps.
    tau_steps : sequence of int
        Coincidence windows (in steps) for g2; only used for 2 channels.
    factor : array, optional
        Factor C with CC* = B. Defaults to the Cholesky factor.
    seed : int
    n_workers : int
    """

    def __init__(self, threshold=0.05, threshold_kind="trace_fraction", dt=1e-3,
                 horizon_steps=100_000, tau_steps=DEFAULT_TAU_STEPS, factor=None,
                 seed=0, n_workers=1):
        self.threshold = threshold
        self.threshold_kind = threshold_kind
        self.dt = dt
        self.horizon_steps = horizon_steps
        self.tau_steps = tau_steps
        self.factor = factor
        self.seed = seed
        self.n_workers = n_workers

    def _config(self, B):
        return ExperimentConfig(
            covariance=B,
            threshold=ThresholdSpec(self.threshold_kind, float(self.threshold)),
            horizon_steps=self.horizon_steps,
            seed=self.seed,
            factor=self.factor,
            dt=self.dt,
            tau_steps=tuple(self.tau_steps),
            n_workers=self.n_workers,
        )

    def fit(self, X, y=None):
        cfg = self._config(X)
        self.covariance_ = cfg.covariance
        self.factor_ = cfg.factor
        self.threshold_ = cfg.threshold_value
        self.n_channels_ = cfg.dim
        self.click_log_ = run_experiment(cfg)
        res = tally(self.click_log_, cfg.tau_steps)
        self.counts_ = res.N
        self.frequencies_ = res.P_sum_norm
        self.n12_ = res.N12
        self.g2_ = res.g2
        self.born_probabilities_ = born_probabilities(density_from_covariance(cfg.covariance))
        try:
            self.mean_hitting_times_ = hitting_time_stats(self.click_log_)
        except InsufficientClicks:
            self.mean_hitting_times_ = None
        return self

    def predict_proba(self, X=None):
        """Simulated detection frequencies per channel.

        ``X`` is accepted for API symmetry; if given it must be the covariance
        the simulator was fitted on.
        """
        check_is_fitted(self, "frequencies_")
        if X is not None and not np.array_equal(validate_covariance(X), self.covariance_):
            raise ValueError("predict_proba only reports the fitted covariance")
        return self.frequencies_

    def score(self, X=None, y=None):
        """Negative largest deviation between frequencies and Born probabilities."""
        p = self.predict_proba(X)
        return -float(np.max(np.abs(p - self.born_probabilities_)))
