"""Inverse engineering of detuning pulses that drive the state angle theta from 0 to pi.

Both synthesis routes parametrize the dynamics by auxiliary angles (theta, beta)
obeying

    theta_dot = -Omega sin(beta)
    beta_dot  = Delta - Omega cot(theta) cos(beta)

so that choosing theta(t) (and a consistent beta branch) fixes the detuning

    Delta = -theta_ddot / (Omega cos(beta)) + Omega cot(theta) cos(beta).

The smooth-ansatz route picks a polynomial-plus-cosine theta(t) with flat
boundary derivatives; the series route expands the accumulated phase
eta(theta) = 2 theta + sum_n alpha_n sin(2 n theta), which fixes

    theta_dot = Omega / sqrt(Q),   Q = 1 + 4 M^2 sin^2(theta),
    M = 1 + sum_n n alpha_n cos(2 n theta),

and admits a closed-form detuning.  Free parameters (a, alpha_n) are later
tuned to cancel first-order sensitivity to systematic errors.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline

from .simulator import ControlField, PulseSequence, _freeze

ANSATZ_A_MIN = 2.0 - np.pi**2 / 6.0
# below this the interior minimum of theta(t) reaches 0: the trajectory leaves
# (0, pi) mid-pulse and the accumulated-phase integral diverges
ANSATZ_A_INTERIOR_MIN = 0.4266166516439091
_ANSATZ_A_CONST = np.pi**2 / 6.0 - 1.0

THETA_END_TOL = 1e-6
ETA_GAMMA_TOL = 1e-9
THETA_DOT_SLACK = 1e-12


@dataclasses.dataclass(frozen=True)
class AnsatzParameter:
    """Shape parameter of the smooth theta(t) ansatz; valid for a > 2 - pi^2/6."""

    a: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.a):
            raise ValueError("ansatz parameter must be finite")
        if self.a <= ANSATZ_A_MIN:
            raise ValueError(f"ansatz parameter must exceed 2 - pi^2/6 = {ANSATZ_A_MIN:.6f} for a positive duration")


@dataclasses.dataclass(frozen=True)
class SeriesCoefficients:
    """Expansion coefficients alpha_1..alpha_n of the accumulated phase; empty means eta = 2 theta."""

    alphas: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.alphas)
        if not all(np.isfinite(x) for x in a):
            raise ValueError("series coefficients must be finite")
        object.__setattr__(self, "alphas", a)

    def __len__(self) -> int:
        return len(self.alphas)

    @property
    def order(self) -> int:
        return len(self.alphas)


def as_series(alphas: "SeriesCoefficients | Sequence[float]") -> SeriesCoefficients:
    if isinstance(alphas, SeriesCoefficients):
        return alphas
    return SeriesCoefficients(tuple(float(x) for x in alphas))


def series_m(theta: np.ndarray, alphas: SeriesCoefficients) -> np.ndarray:
    """M(theta) = 1 + sum_n n alpha_n cos(2 n theta); equals (d eta / d theta) / 2."""
    theta = np.asarray(theta, dtype=float)
    m = np.ones_like(theta)
    for n, alpha in enumerate(alphas.alphas, start=1):
        m = m + n * alpha * np.cos(2.0 * n * theta)
    return m


def series_m_prime(theta: np.ndarray, alphas: SeriesCoefficients) -> np.ndarray:
    """dM/dtheta."""
    theta = np.asarray(theta, dtype=float)
    m = np.zeros_like(theta)
    for n, alpha in enumerate(alphas.alphas, start=1):
        m = m - 2.0 * n * n * alpha * np.sin(2.0 * n * theta)
    return m


def series_q(theta: np.ndarray, alphas: SeriesCoefficients) -> np.ndarray:
    """Q(theta) = 1 + 4 M^2 sin^2(theta); theta_dot = Omega / sqrt(Q)."""
    theta = np.asarray(theta, dtype=float)
    m = series_m(theta, alphas)
    return 1.0 + 4.0 * m * m * np.sin(theta) ** 2


def series_eta(theta: np.ndarray, alphas: SeriesCoefficients) -> np.ndarray:
    """Accumulated phase eta(theta) = 2 theta + sum_n alpha_n sin(2 n theta)."""
    theta = np.asarray(theta, dtype=float)
    eta = 2.0 * theta.copy()
    for n, alpha in enumerate(alphas.alphas, start=1):
        eta = eta + alpha * np.sin(2.0 * n * theta)
    return eta


@dataclasses.dataclass(frozen=True)
class AngleTrajectory:
    """Sampled auxiliary angles on a uniform time grid from 0 to T.

    theta runs from 0 to pi, |theta_dot| never exceeds Omega, and eta stays equal
    to twice the accumulated phase gamma_plus.  theta_ddot is carried along so the
    detuning can be evaluated without numerical differentiation.
    """

    times: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    gamma_plus: np.ndarray
    T: float
    field: ControlField

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("times", "theta", "theta_dot", "theta_ddot", "beta", "eta", "gamma_plus"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be 1-d")
            arrays[name] = arr
        n = arrays["times"].size
        if n < 3 or any(a.size != n for a in arrays.values()):
            raise ValueError("trajectory arrays must share one length of at least 3")
        if not all(np.all(np.isfinite(a)) for a in arrays.values()):
            raise ValueError("trajectory samples must be finite")
        if abs(arrays["theta"][0]) > 1e-9:
            raise ValueError("theta must start at 0")
        if abs(arrays["theta"][-1] - np.pi) > THETA_END_TOL:
            raise ValueError("theta must end at pi")
        omega = self.field.omega
        if np.max(np.abs(arrays["theta_dot"])) > omega * (1.0 + THETA_DOT_SLACK):
            raise ValueError("|theta_dot| must not exceed Omega")
        if np.max(np.abs(arrays["eta"] - 2.0 * arrays["gamma_plus"])) > ETA_GAMMA_TOL:
            raise ValueError("eta must equal 2 gamma_plus")
        for name, arr in arrays.items():
            object.__setattr__(self, name, _freeze(arr))

    def __len__(self) -> int:
        return int(self.times.size)


@dataclasses.dataclass(frozen=True)
class ContinuousPulse:
    """Densely sampled detuning waveform Delta(t) on the trajectory's time grid."""

    times: np.ndarray
    deltas: np.ndarray
    field: ControlField

    def __post_init__(self) -> None:
        t = np.array(self.times, dtype=float)
        d = np.array(self.deltas, dtype=float)
        if t.ndim != 1 or t.size < 4 or d.shape != t.shape:
            raise ValueError("pulse needs matching 1-d time and delta arrays of length >= 4")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(d))):
            raise ValueError("pulse samples must be finite")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ValueError("times must increase strictly from 0")
        object.__setattr__(self, "times", _freeze(t))
        object.__setattr__(self, "deltas", _freeze(d))

    @property
    def total_time(self) -> float:
        return float(self.times[-1])

    @property
    def max_abs_delta(self) -> float:
        return float(np.max(np.abs(self.deltas)))


def ansatz_duration(a: float, omega: float) -> float:
    """Closed-form duration T = pi a / (Omega (a - 2 + pi^2/6))."""
    return np.pi * a / (omega * (a - 2.0 + np.pi**2 / 6.0))


def _spline_max_abs(times: np.ndarray, deltas: np.ndarray) -> float:
    """Maximum of |spline(t)| for the cubic interpolant used by discretize.

    Sharp waveforms peak between samples, so the sample maximum alone would
    undershoot the bound seen by midpoint resampling.  A dense evaluation
    followed by a local polish pins the interpolant's true extremum.
    """
    from scipy.optimize import minimize_scalar

    spline = CubicSpline(times, deltas)
    dense = np.linspace(times[0], times[-1], 10 * times.size)
    values = np.abs(spline(dense))
    peak = float(np.max(np.abs(deltas)))
    i = int(np.argmax(values))
    lo = dense[max(i - 1, 0)]
    hi = dense[min(i + 1, dense.size - 1)]
    if hi > lo:
        result = minimize_scalar(
            lambda t: -abs(float(spline(t))), bounds=(lo, hi), method="bounded",
            options={"xatol": (times[-1] - times[0]) * 1e-12},
        )
        peak = max(peak, float(values[i]), -float(result.fun))
    return peak


def _quadratic_endpoint(x: np.ndarray, y: np.ndarray, x0: float) -> float:
    """Quadratic extrapolation to x0 from the three samples (x, y)."""
    return float(np.polyval(np.polyfit(x, y, 2), x0))


def ansatz_theta(a: "AnsatzParameter | float", field: ControlField, n_samples: int = 2001) -> AngleTrajectory:
    """Smooth-ansatz trajectory with theta_dot(0) = theta_dot(T) = Omega and flat curvature at the ends.

    theta(s) = (Omega T / a) [a s - (pi^2/2)(1-s)^2 + (pi^2/3)(1-s)^3 + cos(pi s) + pi^2/6 - 1],
    s = t / T.  The boundary slope equals Omega exactly, so beta(0) = beta(T) = -pi/2 and the
    detuning approaches finite values at both ends.
    """
    param = a if isinstance(a, AnsatzParameter) else AnsatzParameter(float(a))
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    a_val = param.a
    omega = field.omega
    T = ansatz_duration(a_val, omega)

    def shape(s: np.ndarray) -> np.ndarray:
        return (
            a_val * s
            - 0.5 * np.pi**2 * (1.0 - s) ** 2
            + (np.pi**2 / 3.0) * (1.0 - s) ** 3
            + np.cos(np.pi * s)
            + _ANSATZ_A_CONST
        )

    # interior dip check on a dense grid; below the critical a the angle leaves (0, pi)
    s_dense = np.linspace(0.0, 1.0, 4001)
    dip = float(np.min(shape(s_dense)[1:-1]))
    if dip <= 0.0:
        raise ValueError(
            f"theta dips to {dip * omega * T / a_val:.3e} rad mid-pulse for a = {a_val:.4f}; "
            f"the ansatz needs a > {ANSATZ_A_INTERIOR_MIN:.4f} to keep theta inside (0, pi)"
        )

    s = np.linspace(0.0, 1.0, n_samples)
    times = s * T
    theta = (omega * T / a_val) * shape(s)
    theta[0] = 0.0
    theta_dot = (omega / a_val) * (a_val + np.pi**2 * s * (1.0 - s) - np.pi * np.sin(np.pi * s))
    if np.max(np.abs(theta_dot)) > omega * (1.0 + THETA_DOT_SLACK):
        raise ValueError("|theta_dot| exceeds Omega; the ansatz is invalid for this a")
    theta_ddot = (omega * np.pi**2 / (a_val * T)) * (1.0 - 2.0 * s - np.cos(np.pi * s))

    # continuous branch through beta(0) = -pi/2 with cos(beta) <= 0
    beta = -np.pi + np.arcsin(np.clip(theta_dot / omega, -1.0, 1.0))
    cos_beta = np.cos(beta)

    # eta_dot = -Omega cos(beta) / sin(theta); both endpoint factors vanish, so
    # extrapolate the removable 0/0 values from the nearest interior samples
    eta_dot = np.empty(n_samples)
    eta_dot[1:-1] = -omega * cos_beta[1:-1] / np.sin(theta[1:-1])
    eta_dot[0] = _quadratic_endpoint(times[1:4], eta_dot[1:4], times[0])
    eta_dot[-1] = _quadratic_endpoint(times[-4:-1], eta_dot[-4:-1], times[-1])
    eta = cumulative_simpson(eta_dot, x=times, initial=0.0)
    gamma_plus = 0.5 * eta

    return AngleTrajectory(
        times=times,
        theta=theta,
        theta_dot=theta_dot,
        theta_ddot=theta_ddot,
        beta=beta,
        eta=eta,
        gamma_plus=gamma_plus,
        T=T,
        field=field,
    )


def series_duration_upper_bound(alphas: SeriesCoefficients) -> float:
    """Upper bound on Omega T: sqrt(Q) <= 1 + 2 max|M|."""
    m_max = 1.0 + sum(n * abs(x) for n, x in enumerate(alphas.alphas, start=1))
    return np.pi * (1.0 + 2.0 * m_max)


def series_theta(
    alphas: "SeriesCoefficients | Sequence[float]",
    field: ControlField,
    n_samples: int = 2001,
) -> AngleTrajectory:
    """Series-route trajectory: integrate theta_dot = Omega / sqrt(Q(theta)) until theta = pi.

    The arrival time T satisfies Omega T = integral of sqrt(Q) d(theta), which is the
    trajectory's speed-limit value; the two are compared in the test suite.
    """
    coeffs = as_series(alphas)
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    omega = field.omega

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return np.array([omega / np.sqrt(series_q(y[0], coeffs))])

    def arrival(_t: float, y: np.ndarray) -> float:
        return y[0] - np.pi

    arrival.terminal = True
    arrival.direction = 1.0

    t_limit = 1.05 * series_duration_upper_bound(coeffs) / omega
    sol = solve_ivp(
        rhs,
        (0.0, t_limit),
        np.array([0.0]),
        events=arrival,
        dense_output=True,
        rtol=1e-12,
        atol=1e-14,
        max_step=t_limit / 50.0,
    )
    if sol.t_events[0].size == 0:
        raise RuntimeError("theta failed to reach pi within the duration bound")
    T = float(sol.t_events[0][0])

    times = np.linspace(0.0, T, n_samples)
    theta = sol.sol(times)[0]
    theta[0] = 0.0
    theta = np.clip(theta, 0.0, np.pi)

    m = series_m(theta, coeffs)
    m_prime = series_m_prime(theta, coeffs)
    q = 1.0 + 4.0 * m * m * np.sin(theta) ** 2
    theta_dot = omega / np.sqrt(q)
    # theta_ddot = d(theta_dot)/dtheta * theta_dot; dQ/dtheta keeps an explicit factor of M
    q_prime = 8.0 * m * np.sin(theta) * (m_prime * np.sin(theta) + m * np.cos(theta))
    theta_ddot = -0.5 * omega**2 * q_prime / (q * q)

    sin_beta = -1.0 / np.sqrt(q)
    cos_beta = -2.0 * m * np.sin(theta) / np.sqrt(q)
    beta = np.arctan2(sin_beta, cos_beta)

    eta = series_eta(theta, coeffs)
    # gamma_plus = eta / 2 by definition; the independent quadrature of
    # gamma_dot = theta_dot M(theta) is exposed through lr_phase
    gamma_plus = 0.5 * eta

    return AngleTrajectory(
        times=times,
        theta=theta,
        theta_dot=theta_dot,
        theta_ddot=theta_ddot,
        beta=beta,
        eta=eta,
        gamma_plus=gamma_plus,
        T=T,
        field=field,
    )


def flat_pi_trajectory(field: ControlField, n_samples: int = 2001) -> AngleTrajectory:
    """Resonant flat drive: theta = Omega t over T = pi / Omega, beta = -pi/2, eta = 0."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    T = np.pi / field.omega
    times = np.linspace(0.0, T, n_samples)
    theta = field.omega * times
    zeros = np.zeros(n_samples)
    return AngleTrajectory(
        times=times,
        theta=theta,
        theta_dot=np.full(n_samples, field.omega),
        theta_ddot=zeros,
        beta=np.full(n_samples, -0.5 * np.pi),
        eta=zeros,
        gamma_plus=zeros,
        T=T,
        field=field,
    )


def detuning_from_theta(traj: AngleTrajectory) -> ContinuousPulse:
    """Detuning from the auxiliary equations: Delta = -theta_ddot/(Omega cos beta) + Omega cot(theta) cos(beta).

    Endpoint values are removable indeterminate forms and are filled by quadratic
    extrapolation from the three nearest interior samples.
    """
    omega = traj.field.omega
    if np.max(np.abs(traj.theta_dot)) > omega * (1.0 + THETA_DOT_SLACK):
        raise ValueError("|theta_dot| exceeds Omega")
    n = len(traj)
    theta_in = traj.theta[1:-1]
    sin_in = np.sin(theta_in)
    if np.any(sin_in <= 0.0):
        raise ValueError("theta must stay inside (0, pi) at interior samples")
    cos_beta_in = np.cos(traj.beta[1:-1])
    ddot_in = traj.theta_ddot[1:-1]
    singular = (cos_beta_in == 0.0) & (ddot_in != 0.0)
    if np.any(singular):
        raise ValueError("detuning is singular: theta_dot reaches Omega with nonzero curvature")

    curvature_term = np.zeros(n - 2)
    nz = cos_beta_in != 0.0
    curvature_term[nz] = -ddot_in[nz] / (omega * cos_beta_in[nz])
    deltas = np.empty(n)
    deltas[1:-1] = curvature_term + omega * (np.cos(theta_in) / sin_in) * cos_beta_in
    deltas[0] = _quadratic_endpoint(traj.times[1:4], deltas[1:4], traj.times[0])
    deltas[-1] = _quadratic_endpoint(traj.times[-4:-1], deltas[-4:-1], traj.times[-1])

    field = ControlField(omega=omega, delta_max=_spline_max_abs(traj.times, deltas))
    return ContinuousPulse(times=traj.times.copy(), deltas=deltas, field=field)


SERIES_MATCH_TOL = 1e-6


def detuning_series_closed_form(
    traj: AngleTrajectory,
    alphas: "SeriesCoefficients | Sequence[float]",
) -> ContinuousPulse:
    """Closed-form series detuning, independent of the stored beta branch and curvature:

    Delta = -2 theta_dot (M' sin(theta) + M cos(theta)) / Q - 2 M Omega cos(theta) / sqrt(Q).

    The trajectory must come from series_theta with the same coefficients; this is
    checked by comparing theta_dot against Omega / sqrt(Q(theta)).
    """
    coeffs = as_series(alphas)
    omega = traj.field.omega
    q = series_q(traj.theta, coeffs)
    expected_dot = omega / np.sqrt(q)
    if np.max(np.abs(traj.theta_dot - expected_dot)) > SERIES_MATCH_TOL * omega:
        raise ValueError("trajectory does not match the supplied series coefficients")

    m = series_m(traj.theta, coeffs)
    m_prime = series_m_prime(traj.theta, coeffs)
    sin_t = np.sin(traj.theta)
    cos_t = np.cos(traj.theta)
    deltas = (
        -2.0 * traj.theta_dot * (m_prime * sin_t + m * cos_t) / q
        - 2.0 * m * omega * cos_t / np.sqrt(q)
    )
    field = ControlField(omega=omega, delta_max=_spline_max_abs(traj.times, deltas))
    return ContinuousPulse(times=traj.times.copy(), deltas=deltas, field=field)


def lr_phase(traj: AngleTrajectory) -> np.ndarray:
    """Accumulated phase gamma_plus(t) = (1/2) integral of -Omega cos(beta)/sin(theta).

    Uses the trajectory's own samples; endpoint integrand values are extrapolated
    since both routes keep the integrand finite there.
    """
    omega = traj.field.omega
    n = len(traj)
    integrand = np.empty(n)
    sin_in = np.sin(traj.theta[1:-1])
    if np.any(sin_in <= 0.0):
        raise ValueError("theta must stay inside (0, pi) at interior samples")
    integrand[1:-1] = -omega * np.cos(traj.beta[1:-1]) / (2.0 * sin_in)
    integrand[0] = _quadratic_endpoint(traj.times[1:4], integrand[1:4], traj.times[0])
    integrand[-1] = _quadratic_endpoint(traj.times[-4:-1], integrand[-4:-1], traj.times[-1])
    return cumulative_simpson(integrand, x=traj.times, initial=0.0)


def discretize(pulse: ContinuousPulse, n_steps: int = 2000) -> PulseSequence:
    """Piecewise-constant sequence sampling the waveform at the midpoint of each of n_steps equal steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    dt = pulse.total_time / n_steps
    midpoints = (np.arange(n_steps) + 0.5) * dt
    values = CubicSpline(pulse.times, pulse.deltas)(midpoints)
    return PulseSequence(dt=dt, deltas=values, field=pulse.field)
