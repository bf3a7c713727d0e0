#!/usr/bin/env python3
"""Minimal arrival times by series order.

Prints Omega*T for the optimal coefficient vector at each order, the n=1
minimizer, and the walltime equivalent at a given Rabi frequency.  Values
shrink toward the unconstrained bound pi as the order grows.
"""

import argparse

import numpy as np

from qsflip.qsl import QSL_FLOOR, minimize_qsl


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-order", type=int, default=10)
    parser.add_argument("--omega-mhz", type=float, default=20.0)
    args = parser.parse_args()

    omega = 2.0 * np.pi * args.omega_mhz * 1e6
    print(f"unconstrained floor: Omega*T = pi = {QSL_FLOOR:.4f}")
    print(f"{'order':>5s} {'Omega*T':>9s} {'T [ns]':>8s}  leading coefficient")
    for order in range(1, args.max_order + 1):
        result = minimize_qsl(order)
        t_ns = result.omega_t / omega * 1e9
        lead = result.coefficients.alphas[0]
        flag = "" if result.converged else "  (not converged)"
        print(f"{order:5d} {result.omega_t:9.4f} {t_ns:8.2f}  {lead:+.4f}{flag}")


if __name__ == "__main__":
    main()
