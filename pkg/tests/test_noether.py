"""Invariance checking, generators, and conserved quantities."""

import math

import numpy as np
import pytest

from herglotz import (
    check_invariance,
    compute_psi_z,
    conserved_quantity,
    constancy,
    generators,
    georgieva_quantity,
    make_family,
    shoot,
    xi_constancy_check,
)
from herglotz.noether import (
    FamilyError,
    NoetherError,
    TimeMapError,
    XiUndefinedError,
    verify_identity_at_zero,
)

from conftest import free_rest_extremal, grav_extremal, zlin_trajectory


@pytest.fixture
def grav_solution(grav):
    return shoot(grav, [0.0])


@pytest.fixture
def damp_solution(damp):
    return shoot(damp, [0.0])


class TestGenerators:
    def test_time_shift(self, time_shift):
        traj = grav_extremal(200)
        gen = generators(time_shift, traj)
        assert np.all(gen.T == 1.0)
        assert np.all(gen.X == 0.0)
        assert np.all(gen.Z == 0.0)
        assert gen.xi == 0.0

    def test_space_translation(self, space_translation):
        traj = free_rest_extremal(200)
        gen = generators(space_translation, traj)
        assert np.all(gen.T == 0.0)
        assert np.all(gen.X == 1.0)
        assert gen.xi == 0.0

    def test_z_scaling_generator_tracks_z(self, z_scaling):
        traj = zlin_trajectory(200)
        gen = generators(z_scaling, traj)
        assert np.max(np.abs(gen.Z - traj.z)) <= 1e-14
        assert gen.xi == 0.0

    def test_time_dilation_drift(self):
        # T = t (1 + s) has generator T = t, so dT/dt = 1 and the drift
        # must cancel the functional-value level z(b)/(b - a).
        fam = make_family("time-dilation", "t*(1 + s)", ["x1"], "z")
        traj = grav_extremal(400)
        gen = generators(fam, traj)
        level = traj.z[-1] / 1.0
        assert gen.xi == pytest.approx(-level, rel=1e-10)

    def test_non_constant_rate_is_rejected(self):
        fam = make_family("bad-drift", "t + s*t^2", ["x1"], "z")
        with pytest.raises(XiUndefinedError):
            generators(fam, grav_extremal(200))

    def test_identity_violation_detected(self):
        fam = make_family("shifted", "t + 1", ["x1"], "z")
        with pytest.raises(FamilyError):
            verify_identity_at_zero(fam, grav_extremal(100))

    def test_dimension_mismatch(self, time_shift):
        from herglotz import Trajectory

        traj2 = Trajectory(
            np.linspace(0, 1, 11), np.zeros((11, 2)), np.zeros((11, 2)), np.zeros(11)
        )
        with pytest.raises(FamilyError):
            generators(time_shift, traj2)


class TestCheckInvariance:
    def test_free_time_shift_is_exact(self, free, time_shift):
        traj = free_rest_extremal(500)
        report = check_invariance(free, time_shift, traj)
        assert report.invariant
        assert report.xi == 0.0
        assert max(report.eq_rate_max) <= 1e-10
        assert max(report.eq_time_max) == 0.0

    def test_grav_time_shift(self, grav, time_shift, grav_solution):
        report = check_invariance(grav, time_shift, grav_solution.trajectory)
        assert report.invariant
        assert report.xi == 0.0

    def test_grav_space_translation_fails(self, grav, space_translation, grav_solution):
        report = check_invariance(grav, space_translation, grav_solution.trajectory)
        assert not report.invariant
        # The rate-identity residual is |s| itself: L(x + s) - L(x) = -s.
        for s, r in zip(report.s_values, report.eq_rate_max):
            assert r == pytest.approx(abs(s), rel=1e-2)
        assert report.order_rate == pytest.approx(1.0, abs=0.05)

    def test_z_scaling_on_pure_decay(self, zlin, z_scaling):
        report = check_invariance(zlin, z_scaling, zlin_trajectory(1000))
        assert report.invariant

    def test_time_dilation_reports_second_order_time_identity(self, grav, grav_solution):
        # With the fitted drift the time identity is exactly quadratic in
        # s, even though the rate identity fails for this problem.
        fam = make_family("time-dilation", "t*(1 + s)", ["x1"], "z")
        report = check_invariance(grav, fam, grav_solution.trajectory)
        assert not report.invariant
        assert report.order_time is not None
        assert report.order_time >= 1.9

    def test_undefined_drift_reported_not_raised(self, grav, grav_solution):
        fam = make_family("bad-drift", "t + s*t^2", ["x1"], "z")
        report = check_invariance(grav, fam, grav_solution.trajectory)
        assert not report.invariant
        assert "drift" in report.reason or "rate" in report.reason

    def test_non_invertible_time_map(self, grav, grav_solution):
        fam = make_family("collapse", "t*(1 - 200*s)", ["x1"], "z")
        with pytest.raises(TimeMapError):
            check_invariance(grav, fam, grav_solution.trajectory)


class TestConservedQuantity:
    def test_grav_time_shift_value(self, grav, time_shift, grav_solution):
        traj, mult = grav_solution.trajectory, grav_solution.multipliers
        gen = generators(time_shift, traj)
        quantity = conserved_quantity(grav, traj, mult, gen)
        verdict = constancy(quantity, 1e-6)
        assert verdict.passed
        assert verdict.mean == pytest.approx(-1.5, abs=1e-6)

    def test_resting_particle_momentum_is_zero(self, free, space_translation):
        traj = free_rest_extremal(500)
        mult = compute_psi_z(free, traj)
        gen = generators(space_translation, traj)
        assert np.all(conserved_quantity(free, traj, mult, gen) == 0.0)

    def test_pure_decay_with_z_scaling(self, zlin, z_scaling):
        traj = zlin_trajectory(1000)
        mult = compute_psi_z(zlin, traj)
        gen = generators(z_scaling, traj)
        quantity = conserved_quantity(zlin, traj, mult, gen)
        verdict = constancy(quantity, 1e-8)
        assert verdict.passed
        assert verdict.mean == pytest.approx(-2.0 * math.exp(-1.0), abs=1e-8)

    def test_non_invariant_family_is_not_conserved(self, grav, space_translation, grav_solution):
        traj, mult = grav_solution.trajectory, grav_solution.multipliers
        gen = generators(space_translation, traj)
        verdict = constancy(conserved_quantity(grav, traj, mult, gen), 1e-6)
        assert not verdict.passed
        assert verdict.deviation > 0.1

    def test_costate_weight_is_essential(self, damp, time_shift, damp_solution):
        # Dividing out psi_z leaves a visibly non-constant function; only
        # the full product is conserved.
        traj, mult = damp_solution.trajectory, damp_solution.multipliers
        gen = generators(time_shift, traj)
        quantity = conserved_quantity(damp, traj, mult, gen)
        assert constancy(quantity, 1e-5).passed
        stripped = quantity / mult.psi_z
        assert constancy(stripped, 1e-5).deviation > 0.01

    def test_deviation_shrinks_with_mesh(self, damp, time_shift):
        devs = {}
        for steps in (500, 1000):
            result = shoot(damp, [0.0], steps=steps)
            gen = generators(time_shift, result.trajectory)
            quantity = conserved_quantity(damp, result.trajectory, result.multipliers, gen)
            devs[steps] = constancy(quantity, 1e-5).deviation
        floor = 1e-10
        assert devs[1000] <= max(devs[500] / 2.0, floor)


class TestGeorgievaQuantity:
    def test_classical_weight_is_unity(self, grav, time_shift, grav_solution):
        traj = grav_solution.trajectory
        gen = generators(time_shift, traj)
        weighted = georgieva_quantity(grav, traj, gen)
        assert constancy(weighted, 1e-6).mean == pytest.approx(-1.5, abs=1e-6)

    def test_matches_costate_quantity_up_to_constant(self, damp, time_shift, damp_solution):
        traj, mult = damp_solution.trajectory, damp_solution.multipliers
        gen = generators(time_shift, traj)
        quantity = conserved_quantity(damp, traj, mult, gen)
        weighted = georgieva_quantity(damp, traj, gen)
        factor = math.exp(-0.1)  # integral of dL/dz over [0, 1]
        assert np.max(np.abs(quantity - factor * weighted)) <= 1e-10

    def test_requires_vanishing_z_generator(self, zlin, z_scaling):
        traj = zlin_trajectory(500)
        gen = generators(z_scaling, traj)
        with pytest.raises(NoetherError):
            georgieva_quantity(zlin, traj, gen)


class TestXiConstancy:
    def test_time_shift_is_flat(self, time_shift):
        traj = grav_extremal(500)
        gen = generators(time_shift, traj)
        assert xi_constancy_check(gen, float(traj.z[-1]), 0.0, 1.0) == 0.0

    def test_space_translation_is_flat(self, space_translation):
        traj = free_rest_extremal(500)
        gen = generators(space_translation, traj)
        assert xi_constancy_check(gen, float(traj.z[-1]), 0.0, 1.0) == 0.0

    def test_invariant_fixtures_stay_within_scaled_tolerance(
        self, grav, time_shift, zlin, z_scaling, grav_solution
    ):
        cases = [
            (generators(time_shift, grav_solution.trajectory), grav_solution.trajectory),
            (generators(z_scaling, zlin_trajectory(1000)), zlin_trajectory(1000)),
        ]
        for gen, traj in cases:
            z_b = float(traj.z[-1])
            assert xi_constancy_check(gen, z_b, 0.0, 1.0) <= 1e-8 * (1.0 + abs(z_b))


class TestConstancy:
    def test_constant_samples_pass(self):
        verdict = constancy(np.full(64, 2.5), 1e-12)
        assert verdict.passed and verdict.deviation == 0.0

    def test_linear_ramp_fails(self):
        verdict = constancy(np.linspace(0.0, 1.0, 101), 1e-6)
        assert not verdict.passed
        assert verdict.deviation == pytest.approx(0.5, rel=1e-12)

    def test_empty_samples_rejected(self):
        with pytest.raises(NoetherError):
            constancy(np.array([]), 1e-6)
