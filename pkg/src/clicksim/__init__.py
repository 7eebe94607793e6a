"""Monte Carlo simulation of threshold detectors driven by complex Wiener processes."""

from .detector import (
    ClickEvent,
    DetectorBank,
    ThresholdSpec,
    hitting_times,
    single_channel_hitting_time,
    step_and_detect,
)
from .estimator import ThresholdDetectionSimulator
from .experiment import (
    ClickLog,
    ExperimentConfig,
    coincidence_count,
    detection_frequencies,
    g2_curve,
    hitting_time_stats,
    run_experiment,
    tally,
)
from .linalg import cholesky_factor, real_decomposition, validate_covariance, verify_factor
from .process import FieldState, RngStream, advance, empirical_covariance, standard_complex_increment
from .quantum import born_probabilities, born_probability, density_from_covariance, expected_clicks, expected_hitting_time

__version__ = "0.1.0"
