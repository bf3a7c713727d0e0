#!/usr/bin/env python3
"""Build the headline pulse set and 1-D robustness curves.

For each entry the script writes pulse.json plus a scan CSV per error axis
(relative offsets in [-0.1, 0.1]).  The two flat-top pulses should hold
population >= 0.99 across the axis they were shaped for; the flat pi pulse
is included for contrast.
"""

import argparse
from pathlib import Path

import numpy as np

from qsflip.simulator import ControlField, ErrorPair, scan_robustness
from qsflip.synthesis import (
    ansatz_theta,
    detuning_from_theta,
    detuning_series_closed_form,
    discretize,
    series_theta,
)
from qsflip.formats import write_pulse, write_scan
from qsflip.qsl import minimize_qsl
from qsflip.simulator import PulseSequence


def build_pulses(omega: float, n_steps: int) -> dict:
    field = ControlField(omega=omega, delta_max=0.0)
    pulses = {}
    for name, a in [("ansatz_0.604", 0.604), ("ansatz_0.728", 0.728)]:
        traj = ansatz_theta(a, field)
        pulses[name] = discretize(detuning_from_theta(traj), n_steps)
    for name, alphas in [("series_-1", [-1.0]), ("series_plain", [])]:
        traj = series_theta(alphas, field)
        pulses[name] = discretize(detuning_series_closed_form(traj, alphas), n_steps)
    qsl1 = minimize_qsl(1)
    alphas = list(qsl1.coefficients.alphas)
    traj = series_theta(alphas, field)
    pulses["series_qsl1"] = discretize(detuning_series_closed_form(traj, alphas), n_steps)
    # flat pi pulse: a single zero-detuning step of duration pi/Omega
    pulses["flat_pi"] = PulseSequence(
        dt=np.pi / omega,
        deltas=np.array([0.0]),
        field=ControlField(omega=omega, delta_max=0.0),
    )
    return pulses


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results/pulses")
    parser.add_argument("--omega-mhz", type=float, default=20.0)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--points", type=int, default=41)
    args = parser.parse_args()

    omega = 2.0 * np.pi * args.omega_mhz * 1e6
    axis = np.linspace(-0.1, 0.1, args.points)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for name, seq in build_pulses(omega, args.steps).items():
        write_pulse(out / f"{name}.json", seq, meta={"label": name})
        grids = {"omega": [ErrorPair(delta_omega=v, delta_delta=0.0) for v in axis]}
        if seq.field.delta_max > 0.0:
            grids["delta"] = [
                ErrorPair(delta_omega=0.0, delta_delta=v * seq.field.delta_max)
                for v in axis
            ]
        for axis_name, grid in grids.items():
            table = scan_robustness(seq, grid)
            write_scan(out / f"{name}_scan_{axis_name}.csv", table)
            print(
                f"{name:14s} {axis_name:5s} axis: min population "
                f"{table.population.min():.5f} at band edges "
                f"{table.population[0]:.5f}/{table.population[-1]:.5f}"
            )


if __name__ == "__main__":
    main()
