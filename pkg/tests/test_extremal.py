"""Explicit Euler-Lagrange field and the shooting solver."""

import math

import numpy as np
import pytest

from herglotz import (
    IrregularLagrangianError,
    ShootingError,
    el_explicit_form,
    el_residual,
    make_problem,
    shoot,
)


class TestExplicitField:
    def test_free_particle(self, free):
        field = el_explicit_form(free)
        acc, zdot = field(0.3, np.array([1.0]), np.array([0.8]), 0.0)
        assert acc[0] == 0.0
        assert zdot == pytest.approx(0.8**2 / 2, rel=1e-15)

    def test_uniform_field(self, grav):
        field = el_explicit_form(grav)
        acc, _ = field(0.1, np.array([2.0]), np.array([-0.4]), 0.3)
        assert acc[0] == pytest.approx(-1.0, abs=1e-15)

    def test_damped_oscillator_from_z_coupling(self, damp):
        # The z-coupling term dL/dz * dL/ddx1 supplies the -0.1 x' drag.
        field = el_explicit_form(damp)
        rng = np.random.default_rng(3)
        for _ in range(20):
            t, x, v, z = rng.uniform(-1.0, 1.0, 4)
            acc, zdot = field(t, np.array([x]), np.array([v]), z)
            assert acc[0] == pytest.approx(-x - 0.1 * v, rel=1e-14, abs=1e-14)
            assert zdot == pytest.approx(v * v / 2 - x * x / 2 - 0.1 * z, rel=1e-14, abs=1e-14)

    def test_velocity_decay_fixture(self, expz):
        field = el_explicit_form(expz)
        acc, _ = field(0.0, np.array([2.0]), np.array([0.6]), 0.0)
        assert acc[0] == pytest.approx(-0.3, rel=1e-14)

    def test_two_dimensional_decoupled(self):
        p = make_problem(2, 0.0, 1.0, "(dx1^2 + dx2^2)/2 - x1", [1.0, 0.5], 0.0)
        field = el_explicit_form(p)
        acc, _ = field(0.2, np.array([1.0, 0.5]), np.array([0.3, -0.2]), 0.0)
        assert acc == pytest.approx([-1.0, 0.0], abs=1e-14)

    def test_classical_reduction_matches_hand_field(self):
        # For z-independent L the coupling terms vanish and the field is
        # the classical one; here x'' = -cos(x1).
        p = make_problem(1, 0.0, 1.0, "dx1^2/2 - sin(x1)", [0.3], 0.0)
        field = el_explicit_form(p)
        for x in (-1.0, 0.0, 0.7):
            acc, _ = field(0.0, np.array([x]), np.array([0.2]), 0.0)
            assert acc[0] == pytest.approx(-math.cos(x), rel=1e-14)

    def test_degenerate_lagrangian_is_irregular(self, zlin):
        field = el_explicit_form(zlin)
        with pytest.raises(IrregularLagrangianError, match="t="):
            field(0.0, np.array([1.0]), np.array([0.0]), 2.0)

    def test_pointwise_singular_hessian(self):
        p = make_problem(1, 0.0, 1.0, "dx1^3/6", [1.0], 0.0)
        field = el_explicit_form(p)
        acc, _ = field(0.0, np.array([1.0]), np.array([2.0]), 0.0)  # fine away from v=0
        assert np.isfinite(acc[0])
        with pytest.raises(IrregularLagrangianError):
            field(0.0, np.array([1.0]), np.array([0.0]), 0.0)

    def test_singular_hessian_in_two_dimensions(self):
        p = make_problem(2, 0.0, 1.0, "(dx1 + dx2)^2/2", [0.0, 0.0], 0.0)
        field = el_explicit_form(p)
        with pytest.raises(IrregularLagrangianError):
            field(0.0, np.zeros(2), np.zeros(2), 0.0)


class TestShoot:
    def test_free_particle_rests(self, free):
        result = shoot(free, [0.7])
        assert result.converged
        assert abs(result.v_star[0]) <= 1e-10
        assert result.transversality_norm <= 1e-10

    def test_uniform_field_analytic_solution(self, grav):
        result = shoot(grav, [0.0])
        assert result.converged
        assert result.v_star[0] == pytest.approx(1.0, abs=1e-8)
        traj = result.trajectory
        expected_x = 1.0 + traj.times - traj.times**2 / 2.0
        assert np.max(np.abs(traj.x[:, 0] - expected_x)) <= 1e-8
        assert traj.z[-1] == pytest.approx(-7.0 / 6.0, abs=1e-6)

    def test_velocity_decay_keeps_state_constant(self, expz):
        # x'' = -0.5 x' with x'(1) = 0 forces x' identically 0.
        result = shoot(expz, [0.4])
        assert result.converged
        assert abs(result.v_star[0]) <= 1e-9
        assert np.max(np.abs(result.trajectory.x[:, 0] - 2.0)) <= 1e-9

    def test_two_dimensional_shoot(self):
        p = make_problem(2, 0.0, 1.0, "(dx1^2 + dx2^2)/2 - x1", [1.0, 0.5], 0.0)
        result = shoot(p, [0.0, 0.3])
        assert result.converged
        assert result.v_star == pytest.approx([1.0, 0.0], abs=1e-8)

    def test_converged_extremal_passes_el_check(self, damp):
        result = shoot(damp, [0.0])
        assert el_residual(damp, result.trajectory).max_abs <= 1e-6

    def test_terminal_costate_matches_transversality(self, damp):
        result = shoot(damp, [0.0])
        assert np.max(np.abs(result.multipliers.psi_x[-1])) <= 1e-10

    def test_iteration_budget_exhausted(self, grav):
        result = shoot(grav, [123.0], max_iter=0)
        assert not result.converged
        assert result.multipliers is None
        assert result.iterations == 0
        assert result.transversality_norm > 1.0

    def test_history_is_recorded(self, grav):
        result = shoot(grav, [0.0])
        assert len(result.residual_history) == result.iterations + 1
        assert result.residual_history[-1] == result.transversality_norm

    def test_singular_jacobian_detected(self):
        # x'' = 1 - 1000 x': the transient dies within a few steps, so the
        # terminal velocity is bitwise independent of the guess and the
        # forward-difference Jacobian is exactly zero.
        p = make_problem(1, 0.0, 1.0, "dx1^2/2 + x1 - 1000*z", [1.0], 0.0)
        with pytest.raises(ShootingError, match="Jacobian"):
            shoot(p, [0.0])

    def test_rootless_terminal_condition_does_not_converge(self):
        # L = dx1^2/2 - dx1*x1 gives x'' = 0 and the terminal condition
        # x'(1) - x1(1) = -alpha, which no guess can zero; rounding noise
        # in the difference quotient sends Newton on a runaway.
        p = make_problem(1, 0.0, 1.0, "dx1^2/2 - dx1*x1", [1.0], 0.0)
        result = shoot(p, [0.0], max_iter=6)
        assert not result.converged
        assert result.transversality_norm == pytest.approx(1.0, abs=1e-4)

    def test_bad_guess_shape(self, grav):
        with pytest.raises(ShootingError):
            shoot(grav, [0.0, 1.0])

    def test_irregular_lagrangian_propagates(self, zlin):
        with pytest.raises(IrregularLagrangianError):
            shoot(zlin, [0.0])
