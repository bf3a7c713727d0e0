"""Inverse-engineering checks: trajectory structure, detuning closure, and
the agreement of the two independent detuning constructions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsflip.simulator import ControlField, final_population
from qsflip.synthesis import (
    ANSATZ_A_INTERIOR_MIN,
    ANSATZ_A_MIN,
    AnsatzParameter,
    SeriesCoefficients,
    ansatz_duration,
    ansatz_theta,
    detuning_from_theta,
    detuning_series_closed_form,
    discretize,
    flat_pi_trajectory,
    lr_phase,
    series_eta,
    series_m,
    series_theta,
)
from qsflip.qsl import qsl_time

OMEGA = 2.0 * np.pi * 20e6

valid_a = st.floats(0.45, 2.0)
alpha_lists = st.lists(st.floats(-1.5, 1.5), min_size=0, max_size=3)


class TestAnsatzTrajectory:
    def test_rejects_nonpositive_duration_parameter(self):
        with pytest.raises(ValueError, match="pi\\^2/6"):
            AnsatzParameter(ANSATZ_A_MIN - 0.01)

    def test_rejects_interior_dip(self):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        with pytest.raises(ValueError, match="dips"):
            ansatz_theta(ANSATZ_A_INTERIOR_MIN - 0.01, field)

    def test_accepts_just_above_interior_bound(self):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        traj = ansatz_theta(ANSATZ_A_INTERIOR_MIN + 0.01, field)
        assert traj.theta[0] == 0.0
        assert traj.theta[-1] == pytest.approx(np.pi, abs=1e-9)

    def test_closed_form_duration(self):
        assert ansatz_duration(1.0, 1.0) == pytest.approx(
            np.pi / (np.pi**2 / 6.0 - 1.0), rel=1e-15
        )

    def test_boundary_derivatives(self):
        """The trajectory must launch and land at full angular speed with no
        curvature, so the detuning stays finite at the ends."""
        field = ControlField(omega=OMEGA, delta_max=0.0)
        traj = ansatz_theta(0.604, field)
        assert traj.theta_dot[0] == pytest.approx(OMEGA, rel=1e-12)
        assert traj.theta_dot[-1] == pytest.approx(OMEGA, rel=1e-12)
        assert abs(traj.theta_ddot[0]) < 1e-6 * OMEGA**2
        assert abs(traj.theta_ddot[-1]) < 1e-6 * OMEGA**2
        # arcsin amplifies float noise near theta_dot = Omega by a square root
        assert traj.beta[0] == pytest.approx(-np.pi / 2.0, abs=1e-7)
        assert traj.beta[-1] == pytest.approx(-np.pi / 2.0, abs=1e-7)

    @given(a=valid_a)
    def test_theta_spans_zero_to_pi(self, a):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = ansatz_theta(a, field)
        assert traj.theta[0] == 0.0
        assert traj.theta[-1] == pytest.approx(np.pi, abs=1e-9)
        assert np.all(traj.theta[1:-1] > 0.0)
        assert np.max(np.abs(traj.theta_dot)) <= 1.0 + 1e-12

    def test_curvature_consistent_with_speed(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = ansatz_theta(0.8, field)
        fd = np.gradient(traj.theta_dot, traj.times)
        interior = slice(2, -2)
        assert np.max(np.abs(fd[interior] - traj.theta_ddot[interior])) < 1e-4


class TestSeriesTrajectory:
    def test_plain_series_duration_is_curve_length(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([], field)
        assert traj.T == pytest.approx(qsl_time([]), rel=1e-6)

    @given(alphas=alpha_lists)
    def test_arrival_time_matches_quadrature(self, alphas):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta(alphas, field)
        assert traj.T == pytest.approx(qsl_time(alphas), rel=1e-6)

    @given(alphas=alpha_lists)
    def test_phase_slope_is_twice_m(self, alphas):
        """d(eta)/d(theta) = 2 M by construction of the expansion."""
        coeffs = SeriesCoefficients(tuple(alphas))
        theta = np.linspace(0.0, np.pi, 4001)
        slope = np.gradient(series_eta(theta, coeffs), theta)
        expected = 2.0 * series_m(theta, coeffs)
        interior = slice(1, -1)
        assert np.max(np.abs(slope[interior] - expected[interior])) < 1e-3

    def test_speed_never_exceeds_omega(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([1.2, -0.7], field)
        assert np.max(traj.theta_dot) <= 1.0 + 1e-12
        assert np.min(traj.theta_dot) > 0.0

    def test_curvature_consistent_with_speed(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([-1.0], field)
        fd = np.gradient(traj.theta_dot, traj.times)
        interior = slice(2, -2)
        assert np.max(np.abs(fd[interior] - traj.theta_ddot[interior])) < 1e-3


class TestAccumulatedPhase:
    @pytest.mark.parametrize("alphas", [[], [-1.74]])
    def test_quadrature_matches_series_closed_form(self, alphas):
        """The phase from integrating the auxiliary equations must equal the
        series expression eta/2 it was derived from."""
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta(alphas, field)
        gamma = lr_phase(traj)
        assert np.max(np.abs(gamma - 0.5 * traj.eta)) < 1e-8

    def test_ansatz_phase_consistency(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = ansatz_theta(0.604, field)
        gamma = lr_phase(traj)
        assert np.max(np.abs(gamma - traj.gamma_plus)) < 1e-9


class TestDetuning:
    def test_flat_trajectory_gives_zero_detuning(self):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        pulse = detuning_from_theta(flat_pi_trajectory(field))
        assert np.max(np.abs(pulse.deltas)) < 1e-6 * OMEGA

    def test_plain_series_detuning_vanishes_at_midpoint(self):
        """For eta = 2 theta the detuning is odd about theta = pi/2."""
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([], field)
        pulse = detuning_series_closed_form(traj, [])
        mid = np.argmin(np.abs(traj.theta - np.pi / 2.0))
        assert abs(pulse.deltas[mid]) < 1e-3

    @given(alphas=alpha_lists)
    def test_dual_construction_agreement(self, alphas):
        """The generic auxiliary-angle construction and the closed form are
        independent derivations; they must agree on interior samples."""
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta(alphas, field)
        generic = detuning_from_theta(traj)
        closed = detuning_series_closed_form(traj, alphas)
        interior = slice(1, -1)
        scale = max(np.max(np.abs(closed.deltas)), 1.0)
        gap = np.max(np.abs(generic.deltas[interior] - closed.deltas[interior]))
        assert gap < 1e-6 * scale

    def test_closed_form_rejects_mismatched_coefficients(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([0.5], field)
        with pytest.raises(ValueError, match="does not match"):
            detuning_series_closed_form(traj, [1.0])

    def test_large_coefficient_needs_wide_detuning(self):
        """alpha_1 = -1.74 demands a detuning excursion beyond 3 Omega."""
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta([-1.74], field)
        pulse = detuning_series_closed_form(traj, [-1.74])
        assert pulse.max_abs_delta > 3.0


class TestClosure:
    @settings(max_examples=10)
    @given(a=valid_a)
    def test_ansatz_pulse_flips_the_qubit(self, a):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        seq = discretize(detuning_from_theta(ansatz_theta(a, field)), 2000)
        assert final_population(seq) > 1.0 - 1e-4

    @settings(max_examples=10)
    @given(alphas=alpha_lists)
    def test_series_pulse_flips_the_qubit(self, alphas):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        traj = series_theta(alphas, field)
        seq = discretize(detuning_series_closed_form(traj, alphas), 2000)
        assert final_population(seq) > 1.0 - 1e-4

    def test_generic_route_closure_on_series_trajectory(self):
        field = ControlField(omega=OMEGA, delta_max=0.0)
        traj = series_theta([-1.0], field)
        seq = discretize(detuning_from_theta(traj), 2000)
        assert final_population(seq) > 1.0 - 1e-4


class TestDiscretize:
    def test_midpoint_sampling(self):
        from qsflip.synthesis import ContinuousPulse

        field = ControlField(omega=1.0, delta_max=10.0)
        times = np.linspace(0.0, 1.0, 101)
        pulse = ContinuousPulse(times=times, deltas=3.0 * times, field=field)
        seq = discretize(pulse, 4)
        assert seq.dt == pytest.approx(0.25)
        assert np.allclose(seq.deltas, 3.0 * np.array([0.125, 0.375, 0.625, 0.875]))

    @given(alphas=alpha_lists)
    def test_bound_always_respected(self, alphas):
        """The stored delta_max must dominate every discretization."""
        field = ControlField(omega=1.0, delta_max=0.0)
        traj = series_theta(alphas, field)
        pulse = detuning_series_closed_form(traj, alphas)
        for n in (7, 100, 2000):
            seq = discretize(pulse, n)
            assert np.max(np.abs(seq.deltas)) <= pulse.field.delta_max * (1.0 + 1e-9)

    def test_rejects_zero_steps(self):
        field = ControlField(omega=1.0, delta_max=0.0)
        pulse = detuning_from_theta(flat_pi_trajectory(field))
        with pytest.raises(ValueError, match="at least 1"):
            discretize(pulse, 0)
