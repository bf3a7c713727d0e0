"""Stable on-disk formats: pulse JSON, scan CSV, reports, checkpoints.

All files store frequencies in rad/s; unit conversion happens at the
command line only.  Floats in JSON go through Python's shortest
round-trip repr, and CSV cells use 17 significant digits, so re-reading
reproduces the exact doubles and identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import torch

from .simulator import ControlField, PulseSequence, ScanTable

CSV_FORMAT = "%.17g"
CHECKPOINT_VERSION = 1

_PULSE_FIELDS = (
    "omega_rad_per_s",
    "delta_max_rad_per_s",
    "dt_s",
    "deltas_rad_per_s",
)


def write_pulse(path: "str | Path", pulse: PulseSequence, meta: "Mapping[str, Any] | None" = None) -> None:
    payload = {
        "omega_rad_per_s": pulse.field.omega,
        "delta_max_rad_per_s": pulse.field.delta_max,
        "dt_s": pulse.dt,
        "deltas_rad_per_s": [float(d) for d in pulse.deltas],
        "meta": dict(meta) if meta else {},
    }
    _write_json(path, payload)


def read_pulse(path: "str | Path") -> "tuple[PulseSequence, dict]":
    """Load a pulse file; raises ValueError naming any missing field."""
    with open(path) as fh:
        payload = json.load(fh)
    for name in _PULSE_FIELDS:
        if name not in payload:
            raise ValueError(f"pulse file {path} is missing field {name!r}")
    field = ControlField(
        omega=float(payload["omega_rad_per_s"]),
        delta_max=float(payload["delta_max_rad_per_s"]),
    )
    pulse = PulseSequence(
        dt=float(payload["dt_s"]),
        deltas=np.asarray(payload["deltas_rad_per_s"], dtype=float),
        field=field,
    )
    return pulse, dict(payload.get("meta", {}))


def write_scan(path: "str | Path", table: ScanTable) -> None:
    rows = np.column_stack(
        [table.delta_err_rel, table.omega_err_rel, table.population]
    )
    np.savetxt(
        path,
        rows,
        fmt=CSV_FORMAT,
        delimiter=",",
        header="delta_err_rel,omega_err_rel,population",
        comments="",
    )


def read_scan(path: "str | Path") -> ScanTable:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 3:
        raise ValueError(f"scan file {path} must have 3 columns, got {rows.shape[1]}")
    return ScanTable(
        delta_err_rel=rows[:, 0],
        omega_err_rel=rows[:, 1],
        population=rows[:, 2],
    )


def write_report(path: "str | Path", report: Mapping[str, Any]) -> None:
    _write_json(path, dict(report))


def read_report(path: "str | Path") -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_history(path: "str | Path", fidelities: np.ndarray) -> None:
    """Optimizer fidelity history as CSV: iteration,fidelity."""
    fidelities = np.asarray(fidelities, dtype=float)
    rows = np.column_stack([np.arange(fidelities.size, dtype=float), fidelities])
    np.savetxt(
        path,
        rows,
        fmt=("%d", CSV_FORMAT),
        delimiter=",",
        header="iteration,fidelity",
        comments="",
    )


def write_train_record_csv(path: "str | Path", episode_rewards: np.ndarray) -> None:
    """Per-episode training rewards as CSV: episode,total_reward."""
    episode_rewards = np.asarray(episode_rewards, dtype=float)
    rows = np.column_stack(
        [np.arange(episode_rewards.size, dtype=float), episode_rewards]
    )
    np.savetxt(
        path,
        rows,
        fmt=("%d", CSV_FORMAT),
        delimiter=",",
        header="episode,total_reward",
        comments="",
    )


def write_checkpoint(path: "str | Path", net: "torch.nn.Module", meta: "Mapping[str, Any] | None" = None) -> None:
    """Network parameters as versioned JSON of nested float lists."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "parameters": {
            name: tensor.detach().cpu().numpy().tolist()
            for name, tensor in net.state_dict().items()
        },
        "meta": dict(meta) if meta else {},
    }
    _write_json(path, payload)


def read_checkpoint(path: "str | Path", net: "torch.nn.Module") -> dict:
    """Load parameters into net (shapes must match); returns the meta dict."""
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r} in {path}")
    if "parameters" not in payload:
        raise ValueError(f"checkpoint file {path} is missing field 'parameters'")
    state = {
        name: torch.tensor(value, dtype=torch.float64)
        for name, value in payload["parameters"].items()
    }
    net.load_state_dict(state)
    return dict(payload.get("meta", {}))


def write_manifest(
    path: "str | Path",
    *,
    command: str,
    config: Mapping[str, Any],
    seed: "int | None",
    artifacts: "list[str]",
    timestamp: str,
    version: str,
) -> None:
    """Run manifest; the timestamp lives in its own field so all other
    content is reproducible byte for byte."""
    payload = {
        "command": command,
        "config": dict(config),
        "seed": seed,
        "artifacts": list(artifacts),
        "version": version,
        "timestamp": timestamp,
    }
    _write_json(path, payload)


def _write_json(path: "str | Path", payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
