import numpy as np
import pytest

from onsketch.errors import DegenerateModel, InvalidConfig
from onsketch.models import (
    DesignSpec,
    GroundTruth,
    Sample,
    default_ground_truth,
    draw_sample,
    grad_hess,
    loss,
    make_design,
    population_quantities,
    sigmoid,
)
from onsketch.rng import RngStream


class TestDesigns:
    def test_identity(self):
        np.testing.assert_array_equal(make_design(DesignSpec("identity", 3)), np.eye(3))

    def test_toeplitz(self):
        expected = np.array([[1.0, 0.4, 0.16], [0.4, 1.0, 0.4], [0.16, 0.4, 1.0]])
        np.testing.assert_allclose(make_design(DesignSpec("toeplitz", 3, 0.4)), expected)

    def test_equicorr(self):
        got = make_design(DesignSpec("equicorr", 3, 0.4))
        assert np.allclose(np.diag(got), 1.0)
        off = got[~np.eye(3, dtype=bool)]
        assert np.allclose(off, 0.4)

    def test_r_range_validated(self):
        with pytest.raises(InvalidConfig):
            DesignSpec("toeplitz", 3, 1.0)
        with pytest.raises(InvalidConfig):
            DesignSpec("equicorr", 3, -0.1)

    def test_designs_positive_definite(self):
        for kind in ("identity", "toeplitz", "equicorr"):
            m = make_design(DesignSpec(kind, 6, 0.4))
            assert np.linalg.eigvalsh(m).min() > 0


def test_ground_truth_linspace():
    gt = default_ground_truth(DesignSpec("identity", 5))
    np.testing.assert_allclose(gt.x_star, [0.0, 0.25, 0.5, 0.75, 1.0])


class TestDrawSample:
    def test_linear_conditional_mean_and_residual_variance(self):
        gt = GroundTruth(np.array([0.0, 1.0]), np.eye(2), 1.0)
        rng = RngStream(21)
        residuals = np.empty(100_000)
        for i in range(residuals.shape[0]):
            s = draw_sample("linear", gt, rng)
            residuals[i] = s.response - s.features[1]
        assert abs(residuals.mean()) < 0.02
        assert abs(residuals.var() - 1.0) < 0.03

    def test_logistic_symmetric_labels_at_zero_truth(self):
        gt = GroundTruth(np.zeros(2), np.eye(2), 1.0)
        rng = RngStream(22)
        labels = np.array([draw_sample("logistic", gt, rng).response for _ in range(100_000)])
        assert set(np.unique(labels)) == {-1.0, 1.0}
        assert abs((labels == 1.0).mean() - 0.5) < 0.01

    def test_fixed_seed_determinism(self):
        gt = default_ground_truth(DesignSpec("toeplitz", 3, 0.4))
        a = draw_sample("linear", gt, RngStream(42))
        b = draw_sample("linear", gt, RngStream(42))
        np.testing.assert_array_equal(a.features, b.features)
        assert a.response == b.response


class TestGradHess:
    def test_linear_at_truth(self):
        xi = np.array([1.0, -2.0])
        x_star = np.array([0.5, 0.5])
        eps = 0.3
        sample = Sample(xi, float(xi @ x_star + eps))
        g, h = grad_hess("linear", x_star, sample)
        np.testing.assert_allclose(g, -eps * xi, atol=1e-14)
        np.testing.assert_allclose(h, np.outer(xi, xi))

    def test_logistic_at_origin(self):
        xi = np.array([2.0, 1.0])
        sample = Sample(xi, -1.0)
        g, h = grad_hess("logistic", np.zeros(2), sample)
        np.testing.assert_allclose(g, 0.5 * xi, atol=1e-14)
        np.testing.assert_allclose(h, 0.25 * np.outer(xi, xi), atol=1e-14)

    @pytest.mark.parametrize("model", ["linear", "logistic"])
    def test_finite_difference_oracle(self, model):
        rng = np.random.default_rng(33)
        for _ in range(10):
            d = int(rng.integers(2, 5))
            xi = rng.standard_normal(d)
            resp = float(rng.standard_normal()) if model == "linear" else float(rng.choice([-1.0, 1.0]))
            sample = Sample(xi, resp)
            x = rng.standard_normal(d)
            g, h = grad_hess(model, x, sample)
            eps = 1e-5
            for k in range(d):
                e = np.zeros(d)
                e[k] = eps
                fd_g = (loss(model, x + e, sample) - loss(model, x - e, sample)) / (2 * eps)
                assert abs(fd_g - g[k]) < 1e-5 * (1.0 + abs(g[k]))
                fd_h = (
                    loss(model, x + e, sample) - 2 * loss(model, x, sample) + loss(model, x - e, sample)
                ) / eps**2
                assert abs(fd_h - h[k, k]) < 1e-4 * (1.0 + abs(h[k, k]))

    def test_stable_for_large_inner_products(self):
        xi = np.array([100.0])
        sample = Sample(xi, 1.0)
        g, h = grad_hess("logistic", np.array([10.0]), sample)
        assert np.isfinite(g).all() and np.isfinite(h).all()
        assert abs(g[0]) < 1e-300 or g[0] == 0.0  # fully saturated
        g2, _ = grad_hess("logistic", np.array([-10.0]), sample)
        np.testing.assert_allclose(g2, -xi, rtol=1e-12)

    def test_per_sample_hessians_psd_rank_one(self):
        rng = np.random.default_rng(44)
        samples = []
        gt = default_ground_truth(DesignSpec("identity", 3))
        stream = RngStream(44)
        for _ in range(6):
            samples.append(draw_sample("logistic", gt, stream))
        hessians = [grad_hess("logistic", rng.standard_normal(3), s)[1] for s in samples]
        for h in hessians:
            w = np.linalg.eigvalsh(h)
            assert w.min() >= -1e-12
            assert np.linalg.matrix_rank(h) == 1
        avg = sum(hessians) / len(hessians)
        assert np.linalg.eigvalsh(avg).min() > 0


class TestPopulationQuantities:
    def test_linear_identity(self):
        gt = default_ground_truth(DesignSpec("identity", 2))
        b_star, omega = population_quantities("linear", gt)
        np.testing.assert_allclose(b_star, np.eye(2))
        np.testing.assert_allclose(omega, np.eye(2))

    def test_linear_diagonal_sandwich(self):
        gt = GroundTruth(np.array([0.0, 1.0]), np.diag([1.0, 4.0]), 1.0)
        _, omega = population_quantities("linear", gt)
        np.testing.assert_allclose(omega, np.diag([1.0, 0.25]), atol=1e-12)

    def test_logistic_scalar_oracle(self):
        # at x* = 0: B* = 0.25 E[xi^2] = 0.25 and E[g^2] = 0.25, so Omega* = 4
        gt = GroundTruth(np.zeros(1), np.eye(1), 1.0)
        b_star, omega = population_quantities("logistic", gt)
        assert abs(b_star[0, 0] - 0.25) < 0.005
        assert abs(omega[0, 0] - 4.0) < 0.12

    def test_linear_information_identity_monte_carlo(self):
        # E[grad grad^T] at the truth equals sigma2 * Sigma_a
        gt = default_ground_truth(DesignSpec("toeplitz", 4, 0.4), sigma2=1.0)
        rng = RngStream(55)
        acc = np.zeros((4, 4))
        n = 40_000
        for _ in range(n):
            s = draw_sample("linear", gt, rng)
            g, _ = grad_hess("linear", gt.x_star, s)
            acc += np.outer(g, g)
        acc /= n
        assert np.abs(acc - gt.sigma_a).max() <= 0.02 * np.abs(gt.sigma_a).max() + 0.02

    def test_logistic_score_identity_monte_carlo(self):
        # Bartlett identity: E[grad grad^T] = population Hessian at the truth
        gt = default_ground_truth(DesignSpec("identity", 3))
        b_star, omega = population_quantities("logistic", gt)
        rng = RngStream(56)
        acc = np.zeros((3, 3))
        n = 60_000
        for _ in range(n):
            s = draw_sample("logistic", gt, rng)
            g, _ = grad_hess("logistic", gt.x_star, s)
            acc += np.outer(g, g)
        acc /= n
        assert np.abs(acc - b_star).max() <= 0.03 * np.abs(b_star).max() + 0.01
        # which collapses the sandwich to the inverse Hessian
        inv = np.linalg.inv(b_star)
        assert np.abs(omega - inv).max() <= 0.05 * np.abs(inv).max()

    def test_degenerate_model_raises(self):
        gt = GroundTruth(np.zeros(2), np.diag([1.0, 0.0]), 1.0)
        with pytest.raises(DegenerateModel):
            population_quantities("linear", gt)


def test_sigmoid_stability():
    assert sigmoid(800.0) == 1.0
    assert sigmoid(-800.0) == 0.0
    assert abs(sigmoid(0.0) - 0.5) < 1e-15
    vals = sigmoid(np.array([-40.0, 0.0, 40.0]))
    assert np.isfinite(vals).all()
