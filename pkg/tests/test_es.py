import numpy as np
import pytest

from twotower.es import (
    AT,
    FD,
    EsConfig,
    EvaluationError,
    QuadraticObjective,
    at_gradient,
    at_mse_closed_form,
    es_step,
    fd_gradient,
    lazy_mask,
    mc_gradient_stats,
    mc_mse,
    smoothing_gradient_mc,
)
from twotower.numerics import orthogonal_gaussian_ensemble
from twotower.rng import Rng


def _sphere(dim):
    return QuadraticObjective(g=np.zeros(dim), hessian=np.eye(dim))  # F = |x|^2 / 2


class TestEsConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EsConfig(sigma=0.0)
        with pytest.raises(ValueError):
            EsConfig(sigma=1.0, eta=0.0)
        with pytest.raises(ValueError):
            EsConfig(sigma=1.0, lazy_period=0)
        with pytest.raises(ValueError):
            EsConfig(sigma=1.0, resample_mode="sometimes")


class TestAtGradient:
    def test_exact_zero_at_sphere_origin(self):
        est = at_gradient(_sphere(4), np.zeros(4), 1.0, 4, Rng.from_seed(1))
        assert np.array_equal(est.vector, np.zeros(4))

    def test_unbiased_on_linear(self):
        g = np.array([1.0, -2.0, 0.5, 3.0])
        q = QuadraticObjective(g=g, hessian=np.zeros((4, 4)))
        _, mean = mc_gradient_stats(AT, q, np.zeros(4), 0.7, 4, 100_000, Rng.from_seed(2))
        assert np.linalg.norm(mean - g) <= 0.01 * np.linalg.norm(g)

    def test_sphere_mse_matches_closed_form(self):
        # D=4, M=2, F = |x|^2/2 at theta = e1: MSE -> ((4+2)/2 - 1) = 2
        theta = np.array([1.0, 0.0, 0.0, 0.0])
        mse = mc_mse(AT, _sphere(4), theta, 1.0, 2, 100_000, Rng.from_seed(3))
        assert abs(mse - 2.0) <= 0.04

    def test_query_count_exactly_2m(self):
        calls = []

        def f(x):
            calls.append(1)
            return float(x.sum())

        at_gradient(f, np.zeros(5), 1.0, 3, Rng.from_seed(4))
        assert len(calls) == 6

    def test_non_finite_value_reports_index(self):
        hits = []

        def f(x):
            hits.append(1)
            return float("nan") if len(hits) == 3 else 1.0

        with pytest.raises(EvaluationError) as err:
            at_gradient(f, np.zeros(4), 1.0, 4, Rng.from_seed(5))
        assert err.value.index == 1

    def test_antithetic_terms_reduce_to_gradient_projection(self):
        # on quadratics each pair term equals (grad . eps) eps exactly
        rng_fix = Rng.from_seed(6)
        q = QuadraticObjective.random(5, rng_fix)
        theta = rng_fix.normals(5)
        grad = q.grad(theta)
        key = Rng.from_seed(7)
        eps = orthogonal_gaussian_ensemble(3, 5, Rng.from_seed(7))
        est = at_gradient(q, theta, 0.5, 3, key)
        manual = np.zeros(5)
        for i in range(3):
            manual += (grad @ eps[i]) * eps[i]
        np.testing.assert_allclose(est.vector, manual / 3.0, rtol=1e-10)


class TestFdGradient:
    def test_constant_objective_zero(self):
        est = fd_gradient(lambda x: 3.5, np.zeros(4), 1.0, 4, Rng.from_seed(8))
        assert np.array_equal(est.vector, np.zeros(4))

    def test_query_count_m_plus_one(self):
        calls = []

        def f(x):
            calls.append(1)
            return float(x.sum())

        fd_gradient(f, np.zeros(5), 1.0, 3, Rng.from_seed(9))
        assert len(calls) == 4

    def test_matches_at_on_linear(self):
        g = np.zeros(4)
        g[0] = 1.0
        q = QuadraticObjective(g=g, hessian=np.zeros((4, 4)))
        m_at = mc_mse(AT, q, np.zeros(4), 1.0, 4, 100_000, Rng.from_seed(10))
        m_fd = mc_mse(FD, q, np.zeros(4), 1.0, 4, 100_000, Rng.from_seed(11))
        assert abs(m_fd - m_at) <= 0.02 * m_at

    def test_exceeds_at_on_curved_objective(self):
        q = QuadraticObjective(g=Rng.from_seed(12).normals(8), hessian=np.eye(8))
        theta = np.zeros(8)
        m_at = mc_mse(AT, q, theta, 1.0, 4, 50_000, Rng.from_seed(13))
        m_fd = mc_mse(FD, q, theta, 1.0, 4, 50_000, Rng.from_seed(14))
        assert m_fd > m_at


class TestEsStep:
    def test_zero_estimate(self):
        theta = np.array([1.0, 2.0])
        assert np.array_equal(es_step(theta, np.zeros(2), 0.1), theta)

    def test_zero_eta_rejected_by_config_but_step_allows_any(self):
        theta = np.array([1.0, 2.0])
        assert np.array_equal(es_step(theta, np.ones(2), 0.0), theta)

    def test_ascent_direction(self):
        out = es_step(np.zeros(2), np.array([1.0, 2.0]), 0.01)
        np.testing.assert_allclose(out, [0.01, 0.02], rtol=1e-15)


class TestClosedForm:
    def test_positive_below_dim(self):
        q = QuadraticObjective(g=np.array([1.0, 0.0, 0.0, 0.0]), hessian=np.zeros((4, 4)))
        for m in (1, 2, 4):
            assert at_mse_closed_form(q, np.zeros(4), m) >= (2 / 4) * 1.0

    def test_plug_in_value(self):
        q = QuadraticObjective(g=np.array([1.0, 0.0, 0.0, 0.0]), hessian=np.zeros((4, 4)))
        assert at_mse_closed_form(q, np.zeros(4), 2) == 2.0

    def test_zero_gradient(self):
        assert at_mse_closed_form(_sphere(4), np.zeros(4), 2) == 0.0

    def test_m_above_dim_rejected(self):
        with pytest.raises(ValueError):
            at_mse_closed_form(_sphere(4), np.zeros(4), 5)


class TestMcMse:
    def test_linear_closed_form(self):
        g = np.zeros(4)
        g[0] = 1.0
        q = QuadraticObjective(g=g, hessian=np.zeros((4, 4)))
        mse = mc_mse(AT, q, np.zeros(4), 1.0, 4, 100_000, Rng.from_seed(15))
        assert abs(mse - 0.5) <= 0.01

    def test_zero_gradient_exact_zero(self):
        mse = mc_mse(AT, _sphere(4), np.zeros(4), 1.0, 4, 500, Rng.from_seed(16))
        assert mse == 0.0

    def test_fd_against_higher_trial_self_oracle(self):
        q = QuadraticObjective(g=np.array([1.0, 0.0, 0.0, 0.0]), hessian=np.eye(4))
        est = mc_mse(FD, q, np.zeros(4), 1.0, 4, 50_000, Rng.from_seed(17))
        oracle = mc_mse(FD, q, np.zeros(4), 1.0, 4, 1_000_000, Rng.from_seed(18))
        assert abs(est - oracle) <= 0.03 * oracle


class TestSmoothingGradient:
    def test_constant_objective_near_zero(self):
        v = smoothing_gradient_mc(lambda x: 2.0, np.zeros(3), 1.0, 100_000, Rng.from_seed(19))
        assert np.linalg.norm(v) < 0.03

    def test_quadratic_converges_to_gradient(self):
        q = QuadraticObjective.random(4, Rng.from_seed(20))
        theta = Rng.from_seed(21).normals(4)
        v = smoothing_gradient_mc(q, theta, 0.5, 1_000_000, Rng.from_seed(22))
        grad = q.grad(theta)
        assert np.linalg.norm(v - grad) <= 0.02 * np.linalg.norm(grad) + 0.02

    def test_linear_unbiased(self):
        g = np.array([2.0, -1.0])
        q = QuadraticObjective(g=g, hessian=np.zeros((2, 2)))
        v = smoothing_gradient_mc(q, np.zeros(2), 1.0, 400_000, Rng.from_seed(23))
        assert np.linalg.norm(v - g) <= 0.01 * np.linalg.norm(g) + 0.01

    def test_at_mean_matches_smoothing_oracle(self):
        q = QuadraticObjective.random(4, Rng.from_seed(24))
        theta = Rng.from_seed(25).normals(4)
        _, at_mean = mc_gradient_stats(AT, q, theta, 0.5, 4, 200_000, Rng.from_seed(26))
        oracle = smoothing_gradient_mc(q, theta, 0.5, 400_000, Rng.from_seed(27))
        scale = np.linalg.norm(q.grad(theta))
        assert np.linalg.norm(at_mean - oracle) <= 0.03 * scale


class TestLazyMask:
    def test_period_one_identity(self):
        ens = Rng.from_seed(28).normals(12).reshape(3, 4)
        for it in range(5):
            assert np.array_equal(lazy_mask(ens, (2, 2), it, 1), ens)

    def test_frozen_iteration_zeroes_action_block(self):
        ens = Rng.from_seed(29).normals(12).reshape(3, 4)
        out = lazy_mask(ens, (2, 2), 3, 5)
        assert np.array_equal(out[:, 2:], np.zeros((3, 2)))
        assert np.array_equal(out[:, :2], ens[:, :2])

    def test_update_iteration_passthrough(self):
        ens = Rng.from_seed(30).normals(12).reshape(3, 4)
        assert np.array_equal(lazy_mask(ens, (2, 2), 10, 5), ens)

    def test_layout_mismatch_rejected(self):
        with pytest.raises(ValueError):
            lazy_mask(np.zeros((2, 4)), (1, 2), 0, 5)


class TestQuadraticObjective:
    def test_symmetry_enforced(self):
        with pytest.raises(ValueError):
            QuadraticObjective(g=np.zeros(2), hessian=np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_value_and_grad(self):
        q = QuadraticObjective(g=np.array([1.0, 2.0]), hessian=np.diag([2.0, 4.0]), constant=3.0)
        x = np.array([1.0, -1.0])
        assert q.value(x) == 3.0 + (1.0 - 2.0) + 0.5 * (2.0 + 4.0)
        np.testing.assert_allclose(q.grad(x), [3.0, -2.0])

    def test_batch_matches_scalar(self):
        q = QuadraticObjective.random(3, Rng.from_seed(31))
        xs = Rng.from_seed(32).normals(12).reshape(4, 3)
        np.testing.assert_allclose(
            q.value_batch(xs), [q.value(x) for x in xs], rtol=1e-12
        )
