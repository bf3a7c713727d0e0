"""Speed limits for the flip: series-family durations and the two-state bound.

For the eta(theta) = 2 theta + sum_n alpha_n sin(2 n theta) family the flip
duration has the closed form Omega T = integral over (0, pi) of
sqrt(1 + 4 M^2 sin^2 theta) dtheta, bounded below by pi because the
integrand never drops below 1.  `minimize_qsl` searches coefficient space
order by order; the bound is approached but not attained at finite order.
`bang_off_bang_qsl` gives the unconstrained two-state minimum time for an
arbitrary pure-state pair under a resonant drive of fixed amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize, minimize_scalar

from .errors import NumericalFailure
from .synthesis import SeriesCoefficients, as_series, series_q

QSL_FLOOR = float(np.pi)
ALPHA1_SCAN = (-3.0, 3.0)
SCAN_SEEDS = 200
AMPLITUDE_NORM_TOL = 1e-9


def qsl_time(alphas: "SeriesCoefficients | Sequence[float]") -> float:
    """Dimensionless flip duration Omega T of the series trajectory.

    Omega T = integral over (0, pi) of sqrt(1 + 4 M^2 sin^2 theta) dtheta,
    evaluated by adaptive quadrature to 1e-10 absolute.  Always >= pi.
    """
    coeffs = as_series(alphas)

    def integrand(theta: float) -> float:
        return float(np.sqrt(series_q(theta, coeffs)))

    value, _ = quad(integrand, 0.0, np.pi, epsabs=1e-10, epsrel=1e-10, limit=200)
    return float(value)


@dataclass(frozen=True)
class QslMinimum:
    """Best coefficient vector found at a given series order."""

    coefficients: SeriesCoefficients
    omega_t: float
    converged: bool


def minimize_qsl(order: int) -> QslMinimum:
    """Coefficients minimizing qsl_time at the given order (1 <= order <= 10).

    Order 1 runs a 200-point seed scan of alpha_1 over [-3, 3] with bounded
    golden-section/Brent polish of every bracketed minimum.  Higher orders
    run Nelder-Mead restarted from the order-(n-1) solution padded with a
    zero, repeating until the improvement stalls.  Non-convergence is
    reported on the result rather than raised, keeping the best iterate
    available.
    """
    if not 1 <= order <= 10:
        raise ValueError(f"order must be in [1, 10], got {order}")
    return _minimize_qsl_cached(order)


@lru_cache(maxsize=None)
def _minimize_qsl_cached(order: int) -> QslMinimum:
    if order == 1:
        grid = np.linspace(*ALPHA1_SCAN, SCAN_SEEDS)
        values = np.array([qsl_time([a]) for a in grid])
        best_x = None
        best_f = np.inf
        for i in range(1, SCAN_SEEDS - 1):
            if values[i] <= values[i - 1] and values[i] <= values[i + 1]:
                result = minimize_scalar(
                    lambda a: qsl_time([a]),
                    bounds=(grid[i - 1], grid[i + 1]),
                    method="bounded",
                    options={"xatol": 1e-10},
                )
                if result.fun < best_f:
                    best_x = np.array([result.x])
                    best_f = float(result.fun)
        if best_x is None:
            raise NumericalFailure("no interior minimum on the alpha_1 seed scan")
        return QslMinimum(as_series(best_x), best_f, converged=True)

    previous = _minimize_qsl_cached(order - 1)
    x = np.append(np.asarray(previous.coefficients.alphas), 0.0)
    f = qsl_time(x)
    converged = True
    for _ in range(4):
        result = minimize(
            lambda a: qsl_time(a),
            x,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": 4000, "maxfev": 6000},
        )
        converged = bool(result.success)
        improved = f - float(result.fun)
        if result.fun < f:
            x = np.asarray(result.x)
            f = float(result.fun)
        if improved < 1e-10:
            break
    return QslMinimum(as_series(x), f, converged=converged)


def _check_amplitudes(name: str, amps: Sequence[complex]) -> np.ndarray:
    a = np.asarray(amps, dtype=complex)
    if a.shape != (2,):
        raise ValueError(f"{name} must be a pair of amplitudes, got shape {a.shape}")
    norm = float(np.sum(np.abs(a) ** 2))
    if abs(norm - 1.0) > AMPLITUDE_NORM_TOL:
        raise ValueError(f"{name} is not normalized: |{name}|^2 = {norm!r}")
    return a


def bang_off_bang_arccos(initial: Sequence[complex], final: Sequence[complex]) -> float:
    """Raw overlap angle arccos(|f0 i0| + |f1 i1|), in radians.

    Exposed separately because the half-versus-full rotation-angle
    convention differs between state-space and Bloch-sphere pictures;
    bang_off_bang_qsl applies the factor that reproduces Omega T = pi for
    the full flip.
    """
    i = _check_amplitudes("initial", initial)
    f = _check_amplitudes("final", final)
    overlap = abs(f[0]) * abs(i[0]) + abs(f[1]) * abs(i[1])
    return float(np.arccos(np.clip(overlap, -1.0, 1.0)))


def bang_off_bang_qsl(initial: Sequence[complex], final: Sequence[complex]) -> float:
    """Minimal dimensionless time Omega T connecting two pure states.

    The fastest fixed-amplitude protocol runs the detuning at its bang
    values only to reposition the rotation axis at zero time cost, so the
    duration is set by the polar-angle gap alone: Omega T equals the Bloch
    polar rotation 2 * arccos(|f0 i0| + |f1 i1|).  The full flip gives
    Omega T = pi; identical states give 0.
    """
    return 2.0 * bang_off_bang_arccos(initial, final)
