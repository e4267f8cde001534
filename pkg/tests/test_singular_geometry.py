import math

import numpy as np
import pytest

from vegspot.analysis.singular_geometry import (
    Direction,
    criterion_margin,
    desert_far_field,
    energy,
    front_momentum_limit,
    gamma_in_gap,
    gamma_out,
    integrate_reduced,
    launch_radius_study,
    layer_front,
    layer_operator_residual,
    layer_quotient,
    layer_quotient_closed_form,
    melnikov_closed_form,
    melnikov_u,
    predict_interface_radius,
    reduced_flow_shoot,
    shoot_sweep,
    sideband_coefficient,
    singular_front,
)
from vegspot.errors import DomainError, NoCrossing, NoIntersection
from vegspot.model.model_core import ModelParams, criterion_boundary, restriction_window, u_front, vegetated_state


@pytest.fixture
def params():
    return ModelParams(2.625, 1.0, 0.5)


class TestLayerFront:
    """Explicit tanh fronts of the fast subsystem."""

    def test_stationary_at_front_level(self, params):
        for direction in Direction:
            assert layer_front(direction, u_front(params), params).speed == 0.0

    def test_speed_at_fold(self, params):
        front = layer_front(Direction.VEG_TO_DESERT, 2.0, params)
        assert front.speed == pytest.approx(-0.5)
        assert layer_front(Direction.DESERT_TO_VEG, 2.0, params).speed == pytest.approx(0.5)

    def test_below_fold_raises(self, params):
        with pytest.raises(DomainError):
            layer_front(Direction.VEG_TO_DESERT, 1.99, params)

    @pytest.mark.parametrize("u", [2.0, 2.1, 2.25, 2.6])
    @pytest.mark.parametrize("direction", list(Direction))
    def test_profile_residual(self, params, u, direction):
        front = layer_front(direction, u, params)
        zeta = np.linspace(-20.0, 20.0, 401)
        residual = front.residual(zeta)
        assert np.max(np.abs(residual)) < 1e-10, f"max residual {np.max(np.abs(residual))}"

    def test_limits(self, params):
        front = layer_front(Direction.VEG_TO_DESERT, 2.25, params)
        assert front.value(-50.0) == pytest.approx(front.amplitude, abs=1e-12)
        assert front.value(50.0) == pytest.approx(0.0, abs=1e-12)
        assert front.amplitude == pytest.approx(2.0 / 3.0)


class TestLayerIntegrals:
    """Melnikov integral and the layer quotient."""

    @pytest.mark.parametrize("b", [0.8, 1.0, 1.7])
    def test_melnikov_quadrature(self, b):
        params = ModelParams(2.625 * b, b, 0.5)
        expected = -4.0 / (81.0 * b ** 3)
        assert melnikov_closed_form(u_front(params), params) == pytest.approx(expected, rel=1e-12)
        for direction in Direction:
            assert melnikov_u(direction, params) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("b, m", [(1.0, 0.5), (1.4, 0.3), (0.9, 0.8)])
    def test_stationary_quotient(self, b, m):
        params = ModelParams(5.5 * b * m, b, m)
        quotient = layer_quotient(u_front(params), params)
        assert quotient == pytest.approx(layer_quotient_closed_form(params), abs=1e-6)

    def test_closed_form_value(self, params):
        assert layer_quotient_closed_form(params) == pytest.approx(0.9428090, abs=1e-7)

    def test_translation_mode_in_kernel(self, params):
        zeta = np.linspace(-15.0, 15.0, 301)
        assert np.max(np.abs(layer_operator_residual(zeta, params))) < 1e-8


class TestEnergy:
    """First integral of the planar reduced flow."""

    def test_conserved_along_planar_flow(self, params):
        u2 = vegetated_state(params)[0]
        start_u, start_p = u2 + 0.05, 0.01
        trajectory = integrate_reduced(start_u, start_p, (0.0, 1.0), params, radial=False, samples=21)
        e0 = energy(start_u, start_p, params)
        for u, p in zip(trajectory.u, trajectory.p):
            assert abs(energy(u, p, params) - e0) < 1e-9

    def test_conserved_over_long_span(self, params):
        # U2 is a saddle of the planar flow; the stable branch stays bounded longest
        u2 = vegetated_state(params)[0]
        start_u = u2 + 0.5
        start_p = -math.sqrt(2.0 * energy(start_u, 0.0, params))
        trajectory = integrate_reduced(start_u, start_p, (0.0, 50.0), params, radial=False, samples=501)
        e0 = energy(start_u, start_p, params)
        bounded = (trajectory.u >= 4.0 * params.b * params.m) & (trajectory.u <= params.a)
        stretch = trajectory.r[bounded]
        assert stretch[-1] - stretch[0] >= 10.0, stretch[-1]
        for u, p in zip(trajectory.u[bounded], trajectory.p[bounded]):
            assert abs(energy(u, p, params) - e0) < 1e-9

    def test_momentum_limit_zero_energy(self, params):
        p = front_momentum_limit(params)
        assert p > 0
        assert abs(energy(u_front(params), p, params)) < 1e-12

    def test_margin_sign_follows_criterion(self):
        assert criterion_margin(ModelParams(2.625, 1.0, 0.5)) > 0
        assert criterion_margin(ModelParams(2.665, 1.0, 0.5)) < 0

    def test_far_field_reaches_front_level(self, params):
        far = desert_far_field(np.array([5.0]), 5.0, params)
        assert far.u[0] == pytest.approx(u_front(params), abs=1e-13)
        assert far.p[0] == pytest.approx(float(gamma_out(5.0, params)), rel=1e-12)

    def test_gap_core_momentum_negative(self, params):
        assert np.all(gamma_in_gap(np.array([0.5, 3.0, 9.0]), params) < 0)


class TestCoreShooting:
    """Reduced-flow trajectories launched from the spot centre."""

    def test_crossing_reported(self, params):
        trajectory = reduced_flow_shoot(2.2, params)
        assert trajectory.reached
        assert trajectory.u[-1] == pytest.approx(u_front(params), abs=1e-8)
        assert trajectory.p_f > 0

    def test_launch_below_equilibrium(self, params):
        with pytest.raises(NoCrossing):
            reduced_flow_shoot(2.0, params)
        with pytest.raises(DomainError):
            reduced_flow_shoot(2.3, params)

    def test_monotone_in_launch_level(self, params):
        u2 = vegetated_state(params)[0]
        levels = u2 + np.array([1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2])
        endpoints = shoot_sweep(levels, params, threads=1)
        radii = [r for r, _ in endpoints]
        momenta = [p for _, p in endpoints]
        assert all(np.diff(radii) < 0), f"r_f not decreasing: {radii}"
        assert all(np.diff(momenta) < 0), f"p_f not decreasing: {momenta}"

    def test_threaded_sweep_matches_inline(self, params):
        levels = [2.05, 2.1, 2.15, 2.2]
        assert shoot_sweep(levels, params, threads=2) == shoot_sweep(levels, params, threads=1)


class TestRadiusPrediction:
    """Crossing of the core trajectories with the far field."""

    def test_spot_radius(self, params):
        prediction = predict_interface_radius(params)
        assert prediction.kind == "spot" and prediction.converged
        assert prediction.r_interface == pytest.approx(5.66, abs=0.5)
        assert prediction.p_at_jump == pytest.approx(float(gamma_out(prediction.r_interface, params)), abs=1e-7)

    def test_gap_radius(self):
        prediction = predict_interface_radius(ModelParams(2.665, 1.0, 0.5))
        assert prediction.kind == "gap" and prediction.converged
        assert prediction.r_interface == pytest.approx(5.85, abs=0.5)

    def test_wrong_kind_raises(self, params):
        with pytest.raises(NoIntersection):
            predict_interface_radius(params, kind="gap")

    def test_radius_grows_toward_boundary(self):
        boundary = criterion_boundary(1.0, 0.5)
        radii = [
            predict_interface_radius(ModelParams(a, 1.0, 0.5), kind="spot").r_interface
            for a in (2.6, 2.625, boundary - 1e-3)
        ]
        assert radii[0] < radii[1] < radii[2], radii

    def test_launch_radius_insensitive(self, params):
        radii = launch_radius_study(params, threads=1)
        assert max(radii) - min(radii) < 1e-3, radii


class TestSingularFront:
    """Planar front and its sideband coefficient."""

    def test_jump_level_below_front_level_for_spots(self, params):
        assert singular_front(params).u_star < u_front(params)
        assert singular_front(ModelParams(2.665, 1.0, 0.5)).u_star > u_front(ModelParams(2.665, 1.0, 0.5))

    def test_jump_at_front_level_on_boundary(self):
        boundary = criterion_boundary(1.0, 0.5)
        front = singular_front(ModelParams(boundary, 1.0, 0.5))
        assert front.u_star == pytest.approx(2.25, abs=1e-6)
        assert abs(front.speed) < 1e-5

    def test_sideband_positive(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            b = rng.uniform(0.8, 1.6)
            m = rng.uniform(0.3, 0.8)
            low, high = restriction_window(b)
            params = ModelParams(m * rng.uniform(low + 1e-3, high - 1e-3), b, m, 0.05)
            coefficient = sideband_coefficient(params)
            assert coefficient.value > 0, f"lambda_2c = {coefficient.value} at {params}"

    def test_literal_weight_flag(self, params):
        default = sideband_coefficient(params.with_delta(0.05))
        literal = sideband_coefficient(params.with_delta(0.05), literal_weight=True)
        assert literal.literal_weight and not default.literal_weight
        assert math.isclose(literal.value, default.value), "b = 1 makes the two weights coincide"
