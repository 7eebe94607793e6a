import numpy as np
import pytest
from scipy.stats import unitary_group

from clicksim.exceptions import DimensionMismatch
from clicksim.linalg import cholesky_factor
from clicksim.process import (
    FieldState,
    RngStream,
    advance,
    empirical_covariance,
    standard_complex_increment,
    standard_complex_increments,
)

from .conftest import B2, B4, S2


class TestRngStream:
    def test_same_key_same_sequence(self):
        a = RngStream(42, 7).standard_normal(1000)
        b = RngStream(42, 7).standard_normal(1000)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(42, 7).standard_normal(100)
        assert not np.array_equal(a, RngStream(42, 8).standard_normal(100))
        assert not np.array_equal(a, RngStream(43, 7).standard_normal(100))

    def test_key_layout(self):
        # pins the (seed, stream_id) -> Philox key mapping
        key = np.random.Philox(key=np.array([1, 2], dtype=np.uint64))
        np.testing.assert_array_equal(
            RngStream(1, 2).standard_normal(5), np.random.Generator(key).standard_normal(5)
        )

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_out_of_range(self, seed):
        with pytest.raises(ValueError):
            RngStream(seed)


class TestIncrements:
    def test_unit_power(self):
        xi = standard_complex_increments(RngStream(1), 1_000_000, 1, 1.0)[:, 0]
        assert abs(np.mean(np.abs(xi) ** 2) - 1.0) < 0.005

    def test_half_power_per_component(self):
        xi = standard_complex_increments(RngStream(2), 1_000_000, 1, 1.0)[:, 0]
        assert abs(np.mean(xi.real**2) - 0.5) < 0.005
        assert abs(np.mean(xi.imag**2) - 0.5) < 0.005

    def test_components_uncorrelated(self):
        xi = standard_complex_increments(RngStream(3), 400_000, 3, 0.25)
        cov = xi.T @ xi.conj() / xi.shape[0]
        np.testing.assert_allclose(cov, 0.25 * np.eye(3), atol=0.005)

    @pytest.mark.parametrize("dt", [0.0, -1e-3, np.inf, np.nan])
    def test_bad_dt(self, dt):
        with pytest.raises(ValueError):
            standard_complex_increment(RngStream(0), 2, dt)

    def test_batch_matches_sequential(self):
        r1, r2 = RngStream(9, 1), RngStream(9, 1)
        batch = standard_complex_increments(r1, 50, 3, 1e-3)
        seq = np.array([standard_complex_increment(r2, 3, 1e-3) for _ in range(50)])
        np.testing.assert_array_equal(batch, seq)


class TestAdvance:
    def test_zero_factor(self):
        s = FieldState(np.array([1 + 1j, -2.0]), 4)
        out = advance(s, np.zeros((2, 2)), RngStream(0), 1e-3)
        np.testing.assert_array_equal(out.phi, s.phi)
        assert out.step_index == 5

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            advance(FieldState.zeros(2), np.eye(3), RngStream(0), 1e-3)

    def test_deterministic(self):
        def path(stream):
            s = FieldState.zeros(2)
            out = []
            for _ in range(100):
                s = advance(s, S2, stream, 1e-2)
                out.append(s.phi)
            return np.array(out)

        np.testing.assert_array_equal(path(RngStream(5, 5)), path(RngStream(5, 5)))

    def test_identity_energy_growth(self):
        # E||phi||^2 = n * dt * m after n steps from zero
        n, dt, m = 20, 0.05, 2
        est = empirical_covariance(np.eye(m), 200_000, n * dt, RngStream(11), n_steps=n)
        assert abs(np.trace(est.matrix).real / (n * dt * m) - 1) < 0.01


class TestEmpiricalCovariance:
    @pytest.mark.parametrize("C", [np.eye(2), cholesky_factor(B2), S2], ids=["identity", "chol", "S"])
    def test_matches_scaled_covariance(self, C):
        est = empirical_covariance(C, 1_000_000, 1.0, RngStream(21))
        assert est.rel_error < 0.02

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            empirical_covariance(np.eye(2), 0, 1.0)

    def test_zero_mean(self):
        s, n = 0.7, 500_000
        est = empirical_covariance(S2, n, s, RngStream(22))
        sigma = np.sqrt(s * np.diag(B2).real)
        assert np.all(np.abs(est.mean) <= 5 * sigma / np.sqrt(n))

    def test_linear_in_time(self):
        C = cholesky_factor(B4)
        a = empirical_covariance(C, 400_000, 1.0, RngStream(23), n_steps=4)
        b = empirical_covariance(C, 400_000, 2.0, RngStream(24), n_steps=4)
        ratio = np.trace(b.matrix).real / np.trace(a.matrix).real
        # each trace has relative sd ~ 1.6e-3 here
        assert abs(ratio - 2) < 0.02

    def test_power_additivity(self):
        est = empirical_covariance(cholesky_factor(B4), 400_000, 0.5, RngStream(25))
        assert abs(np.trace(est.matrix).real / (0.5 * 40) - 1) < 0.01

    def test_factor_class_equivalence(self):
        C = cholesky_factor(B4)
        U = unitary_group.rvs(4, random_state=3)
        a = empirical_covariance(C, 400_000, 1.0, RngStream(26))
        b = empirical_covariance(C @ U, 400_000, 1.0, RngStream(27))
        assert a.rel_error < 0.02 and b.rel_error < 0.02
        assert np.linalg.norm(a.matrix - b.matrix) / np.linalg.norm(B4) < 0.03
