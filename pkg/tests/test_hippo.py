"""LegS operator, online approximation, reconstruction and the quadrature oracle."""

import math

import numpy as np
import pytest

from library.errors import DataError, DomainError
from library.hippo import (
    LegsApproximator,
    build_legs,
    legs_online_approx,
    project_coefficients,
    reconstruct,
    reconstruct_curve,
)
from library.pipeline.demos import demo_signal, hippo_demo


def _samples(fn, t_start=1.0, t_end=10.0, dt=0.005):
    t = np.arange(t_start, t_end + 0.5 * dt, dt)
    return np.column_stack([t, fn(t)])


def _rel_l2(signal, n, initial="linear", substeps=1):
    trajectory = legs_online_approx(signal, n, initial=initial, substeps=substeps)
    t, u = signal[:, 0], signal[:, 1]
    u_hat = reconstruct_curve(trajectory.final, trajectory.horizon, t)
    return float(np.linalg.norm(u_hat - u) / np.linalg.norm(u))


class TestBuildLegs:
    def test_two_orders(self):
        op = build_legs(2)
        np.testing.assert_allclose(op.A, [[-1.0, 0.0], [-math.sqrt(3.0), -2.0]], atol=1e-12)
        np.testing.assert_allclose(op.B, [math.sqrt(2.0), math.sqrt(6.0)], atol=1e-12)

    def test_lower_triangular_with_negative_diagonal(self):
        op = build_legs(16)
        assert np.all(np.triu(op.A, k=1) == 0.0)
        np.testing.assert_array_equal(np.diag(op.A), -(np.arange(16) + 1.0))

    @pytest.mark.parametrize("k", [1, 3, 8])
    def test_leading_block_is_smaller_operator(self, k):
        lead = build_legs(8).leading(k)
        small = build_legs(k)
        np.testing.assert_array_equal(lead.A, small.A)
        np.testing.assert_array_equal(lead.B, small.B)

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            build_legs(0)
        with pytest.raises(ValueError):
            build_legs(4).leading(5)


class TestOnlineApprox:
    def test_constant_is_exact_with_hold(self):
        signal = _samples(np.ones_like)
        trajectory = legs_online_approx(signal, 8, initial="hold")
        expected = np.zeros(8)
        expected[0] = math.sqrt(2.0)
        np.testing.assert_allclose(trajectory.final, expected, atol=1e-10)
        assert _rel_l2(signal, 8, initial="hold") <= 1e-3

    def test_sine_reconstruction(self):
        signal = _samples(np.sin)
        assert _rel_l2(signal, 32) <= 1e-2

    def test_slow_sine_reconstruction(self):
        signal = _samples(lambda t: np.sin(2.0 * np.pi * t / 10.0))
        assert _rel_l2(signal, 32) <= 1e-2

    def test_error_shrinks_with_state_size(self):
        signal = _samples(np.sin)
        errors = [_rel_l2(signal, n) for n in (4, 8, 16, 32)]
        for smaller, larger in zip(errors, errors[1:]):
            assert larger <= smaller * 1.05

    def test_finer_steps_agree(self):
        signal = _samples(np.sin)
        coarse = legs_online_approx(signal, 16, initial="linear").final
        fine = legs_online_approx(signal, 16, initial="linear", substeps=10).final
        np.testing.assert_allclose(coarse, fine, atol=1e-3)

    def test_pointwise_error_away_from_start(self):
        signal = _samples(np.sin)
        trajectory = legs_online_approx(signal, 32, initial="linear")
        t = signal[:, 0]
        err = np.abs(reconstruct_curve(trajectory.final, trajectory.horizon, t) - signal[:, 1])
        assert np.max(err[t >= 2.0]) <= 5e-2

    def test_zero_start_reports_zero_before_clamp(self):
        t = np.linspace(0.01, 10.0, 1000)
        trajectory = legs_online_approx(np.column_stack([t, np.cos(t)]), 4)
        assert trajectory.start_time == pytest.approx(0.1)
        early = t <= trajectory.start_time
        np.testing.assert_array_equal(trajectory.coeffs[early], 0.0)

    def test_non_monotone_times(self):
        signal = np.array([[1.0, 0.0], [2.0, 1.0], [2.0, 2.0]])
        with pytest.raises(DomainError, match="strictly increasing"):
            legs_online_approx(signal, 4)

    def test_too_few_samples(self):
        with pytest.raises(DomainError):
            legs_online_approx(np.array([[1.0, 0.0]]), 4)

    def test_non_positive_start(self):
        with pytest.raises(DomainError):
            legs_online_approx(np.array([[0.0, 0.0], [1.0, 1.0]]), 4)

    def test_unknown_initial(self):
        with pytest.raises(ValueError):
            legs_online_approx(_samples(np.sin), 4, initial="ramp")


class TestZeroStart:
    """c(t_0) = 0 is exact for a signal at rest before the clamped start."""

    @staticmethod
    def _at_rest(t):
        return 1.0 - np.cos(2.0 * np.pi * t / 10.0)

    def test_zero_signal_keeps_zero_state(self):
        trajectory = legs_online_approx(_samples(np.zeros_like), 8)
        assert trajectory.initial == "zero"
        np.testing.assert_array_equal(trajectory.coeffs, 0.0)

    def test_reconstruction_bound(self):
        signal = _samples(self._at_rest, t_start=0.005)
        assert _rel_l2(signal, 32, initial="zero") <= 1e-2

    def test_matches_projection(self):
        trajectory = legs_online_approx(_samples(self._at_rest, t_start=0.005), 16)
        direct = project_coefficients(self._at_rest, trajectory.horizon, 16)
        np.testing.assert_allclose(trajectory.final, direct, atol=2e-2)


class TestReconstruct:
    def test_query_outside_horizon(self):
        with pytest.raises(DomainError):
            reconstruct(np.ones(4), 10.0, 10.5)
        with pytest.raises(DomainError):
            reconstruct(np.ones(4), 10.0, -0.1)

    def test_first_coefficient_is_mean_level(self):
        assert reconstruct(np.array([math.sqrt(2.0), 0.0, 0.0]), 5.0, 2.5) == pytest.approx(1.0)


class TestProjection:
    def test_matches_online_coefficients(self):
        t = np.arange(1, 2001) * 0.005
        trajectory = legs_online_approx(np.column_stack([t, np.sin(t)]), 16, initial="linear")
        direct = project_coefficients(np.sin, 10.0, 16)
        np.testing.assert_allclose(trajectory.final, direct, atol=2e-2)

    def test_polynomial_projection_is_exact(self):
        # u(t) = t on [0, 2] maps to s + 1
        direct = project_coefficients(lambda t: t, 2.0, 4)
        expected = [math.sqrt(2.0), math.sqrt(2.0 / 3.0), 0.0, 0.0]
        np.testing.assert_allclose(direct, expected, atol=1e-12)

    def test_coarse_grid_rejected(self):
        grid = np.linspace(0.0, 1.0, 10)
        with pytest.raises(DomainError, match="too coarse"):
            project_coefficients(np.column_stack([grid, grid]), 1.0, 8)

    def test_grid_must_cover_horizon(self):
        grid = np.linspace(0.5, 1.0, 100)
        with pytest.raises(DomainError, match="cover"):
            project_coefficients(np.column_stack([grid, grid]), 1.0, 4)


class TestLegsApproximator:
    def test_stream_matches_constant_state(self):
        approx = LegsApproximator(n=6, initial="hold")
        assert approx.update(1.0, 2.0) is None
        assert not approx.is_ready
        for t in np.arange(1.01, 5.0, 0.01):
            c = approx.update(float(t), 2.0)
        assert approx.is_ready
        np.testing.assert_allclose(c[0], 2.0 * math.sqrt(2.0))
        np.testing.assert_allclose(c[1:], 0.0, atol=1e-12)
        assert approx.reconstruct(approx.time) == pytest.approx(2.0)

    def test_reset_forgets_stream(self):
        approx = LegsApproximator(n=4)
        approx.update(1.0, 0.5)
        approx.update(1.5, 0.7)
        approx.reset()
        assert approx.value is None
        assert approx.time is None

    def test_times_must_increase(self):
        approx = LegsApproximator(n=4)
        approx.update(1.0, 0.0)
        with pytest.raises(DomainError):
            approx.update(1.0, 0.0)

    def test_linear_start_needs_whole_signal(self):
        with pytest.raises(ValueError):
            LegsApproximator(n=4, initial="linear")


class TestHippoDemo:
    def test_sine_demo(self):
        result = hippo_demo("sin", n=32)
        assert result.rel_l2 <= 1e-2
        header, first = result.to_csv().splitlines()[:2]
        assert header == "t,u,u_hat,abs_err"
        assert len(first.split(",")) == 4

    def test_square_demo_runs(self):
        result = hippo_demo("square", n=16, dt=0.01)
        assert result.u_hat.shape == result.u.shape
        assert np.all(np.isfinite(result.abs_err))

    def test_unknown_signal(self):
        with pytest.raises(DataError):
            demo_signal("triangle")
