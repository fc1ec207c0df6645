import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onsketch.errors import EmptyEstimator, InvalidProbability, InvalidStep
from onsketch.inference import (
    RunningCovariance,
    confidence_interval,
    normal_cdf,
    normal_quantile,
)


def batch_weighted_cov(xs, phis):
    """Two-pass reference: (1/t) sum (1/phi_i)(x_i - xbar)(x_i - xbar)^T."""
    xs = np.asarray(xs, dtype=float)
    xbar = xs.mean(axis=0)
    centered = xs - xbar
    return (centered.T * (1.0 / np.asarray(phis))) @ centered / xs.shape[0]


class TestRunningCovariance:
    def test_constant_stream_vanishes(self):
        rc = RunningCovariance(2)
        for _ in range(10):
            rc.push(np.array([3.0, -1.0]), 0.5)
        np.testing.assert_allclose(rc.materialize(), np.zeros((2, 2)), atol=1e-12)

    def test_single_point_is_zero(self):
        rc = RunningCovariance(3)
        rc.push(np.array([1.0, 2.0, 3.0]), 0.1)
        np.testing.assert_allclose(rc.materialize(), np.zeros((3, 3)), atol=1e-12)

    def test_hand_arithmetic_d1(self):
        rc = RunningCovariance(1)
        rc.push(np.array([0.0]), 1.0)
        rc.push(np.array([2.0]), 1.0)
        np.testing.assert_allclose(rc.materialize(), [[1.0]])

    @given(st.integers(0, 10_000), st.sampled_from([1, 2, 5, 10]))
    @settings(max_examples=50, deadline=None)
    def test_online_equals_batch_two_pass(self, seed, d):
        rng = np.random.default_rng(seed)
        n = 200
        xs = rng.standard_normal((n, d)) * rng.uniform(0.5, 3.0)
        phis = 1.0 / (np.arange(1, n + 1)) ** rng.uniform(0.501, 1.0)
        rc = RunningCovariance(d)
        for x, phi in zip(xs, phis):
            rc.push(x, phi)
        got = rc.materialize()
        ref = batch_weighted_cov(xs, phis)
        assert np.abs(got - ref).max() <= 1e-9 * (1.0 + np.abs(ref).max())

    def test_shift_invariance(self):
        rng = np.random.default_rng(8)
        xs = rng.standard_normal((100, 3))
        phis = 1.0 / np.sqrt(np.arange(1, 101))
        rc1, rc2 = RunningCovariance(3), RunningCovariance(3)
        shift = np.array([10.0, -20.0, 5.0])
        for x, phi in zip(xs, phis):
            rc1.push(x, phi)
            rc2.push(x + shift, phi)
        np.testing.assert_allclose(rc1.materialize(), rc2.materialize(), atol=1e-8)

    def test_materialized_estimate_near_psd(self):
        rng = np.random.default_rng(9)
        rc = RunningCovariance(4)
        for i in range(500):
            rc.push(rng.standard_normal(4), 1.0 / (i + 1.0) ** 0.6)
        assert np.linalg.eigvalsh(rc.materialize()).min() >= -1e-10

    def test_errors(self):
        rc = RunningCovariance(2)
        with pytest.raises(EmptyEstimator):
            rc.materialize()
        with pytest.raises(InvalidStep):
            rc.push(np.zeros(2), 0.0)


class TestNormalQuantile:
    def test_median(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_frozen_975(self):
        # reference value computed from the erfc-based CDF by bisection
        assert normal_quantile(0.975) == pytest.approx(1.95996398, abs=1e-8)

    def test_round_trip_against_cdf_oracle(self):
        for p in np.linspace(0.01, 0.99, 99):
            assert abs(normal_cdf(normal_quantile(float(p))) - p) <= 1e-8

    def test_tails(self):
        for p in (1e-10, 1e-6, 1.0 - 1e-6, 1.0 - 1e-10):
            z = normal_quantile(p)
            assert abs(normal_cdf(z) - p) <= 1e-12 * max(1.0, abs(z)) + 1e-16 / p

    def test_invalid_probability(self):
        for p in (0.0, 1.0, -0.5, 1.5, float("nan")):
            with pytest.raises(InvalidProbability):
                normal_quantile(p)


class TestConfidenceInterval:
    def test_arithmetic_example(self):
        # half width = z_{0.975} * sqrt(0.01 * 4) = 1.95996 * 0.2
        sigma = np.array([[4.0]])
        ci = confidence_interval(np.array([1.0]), np.array([2.0]), sigma, 0.01, 0.05)
        assert ci.half_width == pytest.approx(0.391993, abs=1e-5)
        assert ci.center == 2.0
        assert ci.covers(2.39) and not ci.covers(2.40)

    def test_degenerate_interval(self):
        ci = confidence_interval(np.ones(2), np.array([1.0, 3.0]), np.zeros((2, 2)), 0.5, 0.05)
        assert ci.half_width == 0.0
        assert ci.lo == ci.hi == 4.0

    def test_scaling_in_phi(self):
        sigma = np.array([[2.0, 0.0], [0.0, 1.0]])
        w = np.array([0.5, 0.5])
        x = np.zeros(2)
        ci1 = confidence_interval(w, x, sigma, 0.04, 0.32)
        ci2 = confidence_interval(w, x, sigma, 0.01, 0.32)
        assert ci1.half_width == pytest.approx(2.0 * ci2.half_width, rel=1e-12)
        z = normal_quantile(1.0 - 0.32 / 2.0)
        assert z == pytest.approx(0.9945, abs=1e-4)

    def test_negative_quadratic_form_clamped(self):
        sigma = np.array([[-1e-12]])
        ci = confidence_interval(np.array([1.0]), np.array([0.0]), sigma, 1.0, 0.05)
        assert ci.half_width == 0.0

    @given(
        st.floats(0.001, 10.0),
        st.floats(0.001, 10.0),
        st.floats(0.01, 0.99),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_phi_and_quadratic_form(self, phi, scale, q):
        sigma = np.array([[scale]])
        w = np.array([1.0])
        x = np.array([0.3])
        base = confidence_interval(w, x, sigma, phi, q)
        wider_phi = confidence_interval(w, x, sigma, phi * 2.0, q)
        wider_var = confidence_interval(w, x, 2.0 * sigma, phi, q)
        assert wider_phi.half_width >= base.half_width
        assert wider_var.half_width >= base.half_width
        assert base.hi - base.center == pytest.approx(base.center - base.lo, rel=1e-12)

    def test_phi_must_be_positive(self):
        with pytest.raises(InvalidStep):
            confidence_interval(np.ones(1), np.ones(1), np.eye(1), 0.0, 0.05)


def test_normal_cdf_reference_points():
    assert normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    assert normal_cdf(-8.0) == pytest.approx(6.22096e-16, rel=1e-4)
