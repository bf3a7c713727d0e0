"""Pulse synthesis and verification toolkit for fast, robust single-qubit flips.

The control problem: a fixed transverse drive of strength Omega and a tunable
longitudinal detuning Delta(t).  The package provides an exact two-level
simulator, invariant-based analytical pulse synthesis with error-sensitivity
optimization, quantum-speed-limit evaluation, a gradient-ascent baseline
optimizer, and a PPO agent that discovers digital pulses, all sharing one
propagator and one set of file formats.
"""

__version__ = "0.1.0"

from .simulator import (
    BlochVector,
    ControlField,
    DensityMatrix,
    ERROR_FREE,
    ErrorPair,
    PulseSequence,
    ScanTable,
    bloch_vector,
    evolve_pulse,
    final_population,
    population_excited,
    propagate_step,
    scan_robustness,
    step_unitary,
)

__all__ = [
    "__version__",
    "BlochVector",
    "ControlField",
    "DensityMatrix",
    "ERROR_FREE",
    "ErrorPair",
    "PulseSequence",
    "ScanTable",
    "bloch_vector",
    "evolve_pulse",
    "final_population",
    "population_excited",
    "propagate_step",
    "scan_robustness",
    "step_unitary",
]
