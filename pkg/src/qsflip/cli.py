"""Command-line front end: synthesis, simulation, scans, training, ascent.

Frequencies are accepted in MHz on the command line (a value of 20 means
2*pi*20e6 rad/s) and converted once at this boundary; every file stores
rad/s.  Each command writes its artifacts plus a run manifest into
--out-dir.  Exit codes: 0 success, 1 domain or validation error, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields as dataclass_fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .errors import NumericalFailure
from .formats import (
    read_checkpoint,
    read_pulse,
    write_checkpoint,
    write_history,
    write_manifest,
    write_pulse,
    write_report,
    write_scan,
    write_train_record_csv,
)
from .grape import GrapeConfig, grape_optimize
from .qsl import minimize_qsl, qsl_time
from .rl import (
    EnvConfig,
    ErrorSampling,
    PPOConfig,
    PolicyNetwork,
    RewardSchedule,
    extract_pulse,
    train,
)
from .sensitivity import SensitivityTarget, optimize_sensitivity
from .simulator import ControlField, ErrorPair, PulseSequence, final_population, scan_robustness
from .synthesis import (
    ansatz_theta,
    detuning_from_theta,
    detuning_series_closed_form,
    discretize,
    series_theta,
)

DEFAULT_OMEGA_MHZ = 20.0
DEFAULT_STEPS = 2000

_TARGETS = {
    "delta": SensitivityTarget.DETUNING,
    "omega": SensitivityTarget.RABI,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this project reserves 2 for
    numerical failures, so usage problems exit 1 instead."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _mhz(value: float) -> float:
    return 2.0 * np.pi * value * 1e6


def _parse_alphas(text: str) -> "list[float]":
    text = text.strip()
    if not text:
        return []
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise ValueError(f"could not parse coefficient list {text!r}: {exc}") from None


def _parse_axis(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"axis spec must be min:max:count, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError(f"axis count must be >= 1, got {count}")
    return np.linspace(lo, hi, count)


def _manifest(args, out_dir: Path, command: str, config: dict, artifacts: "list[str]") -> None:
    write_manifest(
        out_dir / "run_manifest.json",
        command=command,
        config=config,
        seed=args.seed,
        artifacts=artifacts,
        timestamp=datetime.now(timezone.utc).isoformat(),
        version=__version__,
    )


def _write_sta_outputs(out_dir: Path, seq: PulseSequence, meta: dict, report: dict) -> "list[str]":
    pulse_path = out_dir / "pulse.json"
    report_path = out_dir / "report.json"
    write_pulse(pulse_path, seq, meta=meta)
    write_report(report_path, report)
    return [str(pulse_path), str(report_path)]


def _cmd_sta_ansatz(args, out_dir: Path) -> "list[str]":
    field = ControlField(omega=_mhz(args.omega_mhz), delta_max=0.0)
    traj = ansatz_theta(args.a, field)
    pulse = detuning_from_theta(traj)
    seq = discretize(pulse, args.steps)
    report = {
        "route": "ansatz",
        "parameter": args.a,
        "T_s": traj.T,
        "omega_t": traj.T * field.omega,
        "max_abs_delta_rad_per_s": seq.field.delta_max,
        "n_steps": args.steps,
    }
    meta = {"route": "ansatz", "a": args.a, "T_s": traj.T}
    return _write_sta_outputs(out_dir, seq, meta, report)


def _cmd_sta_series(args, out_dir: Path) -> "list[str]":
    alphas = _parse_alphas(args.alphas)
    field = ControlField(omega=_mhz(args.omega_mhz), delta_max=0.0)
    traj = series_theta(alphas, field)
    pulse = detuning_series_closed_form(traj, alphas)
    seq = discretize(pulse, args.steps)
    report = {
        "route": "series",
        "alphas": alphas,
        "T_s": traj.T,
        "omega_t": traj.T * field.omega,
        "max_abs_delta_rad_per_s": seq.field.delta_max,
        "n_steps": args.steps,
    }
    meta = {"route": "series", "alphas": alphas, "T_s": traj.T}
    return _write_sta_outputs(out_dir, seq, meta, report)


def _cmd_sta_optimize(args, out_dir: Path) -> "list[str]":
    field = ControlField(omega=_mhz(args.omega_mhz), delta_max=0.0)
    target = _TARGETS[args.target]
    optimum = optimize_sensitivity(args.route, target, field)
    if args.route == "ansatz":
        traj = ansatz_theta(optimum.parameter, field)
        pulse = detuning_from_theta(traj)
    else:
        traj = series_theta([optimum.parameter], field)
        pulse = detuning_series_closed_form(traj, [optimum.parameter])
    seq = discretize(pulse, args.steps)
    report = {
        "route": optimum.route,
        "target": target.value,
        "parameter": optimum.parameter,
        "residual": optimum.residual,
        "T_s": optimum.duration,
        "qsl_omega_T": optimum.omega_t,
    }
    meta = {"route": args.route, "target": target.value, "parameter": optimum.parameter}
    return _write_sta_outputs(out_dir, seq, meta, report)


def _cmd_qsl(args, out_dir: Path) -> "list[str]":
    omega = _mhz(args.omega_mhz)
    if (args.order is None) == (args.alphas is None):
        raise ValueError("exactly one of --order or --alphas is required")
    if args.order is not None:
        result = minimize_qsl(args.order)
        report = {
            "order": args.order,
            "alphas": list(result.coefficients.alphas),
            "omega_t": result.omega_t,
            "T_s": result.omega_t / omega,
            "converged": result.converged,
        }
    else:
        alphas = _parse_alphas(args.alphas)
        omega_t = qsl_time(alphas)
        report = {
            "alphas": alphas,
            "omega_t": omega_t,
            "T_s": omega_t / omega,
        }
    report_path = out_dir / "report.json"
    write_report(report_path, report)
    print(f"omega_t = {report['omega_t']:.6f}")
    return [str(report_path)]


def _error_pair(pulse: PulseSequence, delta_err_rel: float, omega_err_rel: float) -> ErrorPair:
    if delta_err_rel != 0.0 and pulse.field.delta_max == 0.0:
        raise ValueError(
            "pulse has zero detuning bound; a relative detuning error is undefined"
        )
    return ErrorPair(
        delta_omega=omega_err_rel,
        delta_delta=delta_err_rel * pulse.field.delta_max,
    )


def _cmd_sim(args, out_dir: Path) -> "list[str]":
    pulse, _ = read_pulse(args.pulse)
    err = _error_pair(pulse, args.delta_err, args.omega_err)
    population = final_population(pulse, err)
    report = {
        "pulse": str(args.pulse),
        "delta_err_rel": args.delta_err,
        "omega_err_rel": args.omega_err,
        "population": population,
    }
    report_path = out_dir / "report.json"
    write_report(report_path, report)
    print(f"population = {population:.12f}")
    return [str(report_path)]


def _cmd_scan(args, out_dir: Path) -> "list[str]":
    pulse, _ = read_pulse(args.pulse)
    delta_axis = _parse_axis(args.delta_err)
    omega_axis = _parse_axis(args.omega_err)
    if np.any(delta_axis != 0.0) and pulse.field.delta_max == 0.0:
        raise ValueError(
            "pulse has zero detuning bound; a relative detuning error is undefined"
        )
    grid = [
        ErrorPair(delta_omega=o, delta_delta=d * pulse.field.delta_max)
        for d in delta_axis
        for o in omega_axis
    ]
    table = scan_robustness(pulse, grid)
    scan_path = out_dir / "scan.csv"
    write_scan(scan_path, table)
    return [str(scan_path)]


_ENV_KEYS = {
    "omega_rad_per_s": float,
    "delta_max_rad_per_s": float,
    "n_steps": int,
    "total_time_s": float,
    "error_mode": str,
    "error_spread": float,
    "reward_kind": str,
    "reward_threshold": float,
    "reward_constant": float,
    "endpoint_bonus": bool,
    "seed": int,
}


def _load_env_config(path: str) -> EnvConfig:
    import json

    with open(path) as fh:
        payload = json.load(fh)
    unknown = set(payload) - set(_ENV_KEYS)
    if unknown:
        raise ValueError(f"unknown environment config keys: {sorted(unknown)}")
    for required in ("omega_rad_per_s", "delta_max_rad_per_s", "n_steps", "total_time_s"):
        if required not in payload:
            raise ValueError(f"environment config {path} is missing {required!r}")
    return EnvConfig(
        field=ControlField(
            omega=float(payload["omega_rad_per_s"]),
            delta_max=float(payload["delta_max_rad_per_s"]),
        ),
        n_steps=int(payload["n_steps"]),
        total_time=float(payload["total_time_s"]),
        error_sampling=ErrorSampling(
            mode=payload.get("error_mode", "none"),
            spread=float(payload.get("error_spread", 0.0)),
        ),
        reward_schedule=RewardSchedule(
            kind=payload.get("reward_kind", "trivial"),
            threshold=float(payload.get("reward_threshold", 0.997)),
            constant=float(payload.get("reward_constant", 1.0)),
            endpoint_bonus=bool(payload.get("endpoint_bonus", False)),
        ),
        seed=int(payload.get("seed", 0)),
    )


def _load_ppo_config(path: str) -> PPOConfig:
    import json

    with open(path) as fh:
        payload = json.load(fh)
    known = {f.name for f in dataclass_fields(PPOConfig)}
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown trainer config keys: {sorted(unknown)}")
    return PPOConfig(**payload)


def _with_seed(env_cfg: EnvConfig, ppo_cfg: PPOConfig, seed: "int | None"):
    if seed is None:
        return env_cfg, ppo_cfg
    from dataclasses import replace

    return replace(env_cfg, seed=seed), replace(ppo_cfg, seed=seed)


def _cmd_drl_train(args, out_dir: Path, phase: str) -> "list[str]":
    env_cfg = _load_env_config(args.env)
    ppo_cfg = _load_ppo_config(args.ppo)
    env_cfg, ppo_cfg = _with_seed(env_cfg, ppo_cfg, args.seed)
    init_net = None
    if args.checkpoint is not None:
        init_net = PolicyNetwork(ppo_cfg.seed)
        read_checkpoint(args.checkpoint, init_net)
    elif phase == "finetune" and not args.allow_fresh:
        raise ValueError("finetune requires --checkpoint (or --allow-fresh)")
    net, record = train(
        env_cfg, ppo_cfg, phase=phase, init_net=init_net, allow_fresh=args.allow_fresh
    )
    pulse = extract_pulse(net, env_cfg)
    nominal = final_population(pulse)

    checkpoint_path = out_dir / "checkpoint.json"
    record_path = out_dir / "train_record.csv"
    pulse_path = out_dir / "pulse.json"
    report_path = out_dir / "report.json"
    write_checkpoint(checkpoint_path, net, meta={"phase": phase, "seed": ppo_cfg.seed})
    write_train_record_csv(record_path, record.episode_rewards)
    write_pulse(pulse_path, pulse, meta={"phase": phase, "nominal_population": nominal})
    write_report(
        report_path,
        {
            "phase": phase,
            "episodes": int(record.episode_rewards.size),
            "stop_reason": record.stop_reason,
            "nominal_population": nominal,
            "final_eval_fidelity": float(record.eval_fidelities[-1])
            if record.eval_fidelities.size
            else None,
        },
    )
    artifacts = [str(checkpoint_path), str(record_path), str(pulse_path), str(report_path)]
    if record.stop_reason == "diverged":
        config = {"env": str(args.env), "ppo": str(args.ppo), "phase": phase}
        _manifest(args, out_dir, f"drl {phase}", config, artifacts)
        raise NumericalFailure(
            "training diverged; last good checkpoint retained in " + str(checkpoint_path)
        )
    return artifacts


def _cmd_drl_evaluate(args, out_dir: Path) -> "list[str]":
    env_cfg = _load_env_config(args.env)
    if args.seed is not None:
        from dataclasses import replace

        env_cfg = replace(env_cfg, seed=args.seed)
    net = PolicyNetwork(env_cfg.seed)
    read_checkpoint(args.checkpoint, net)
    pulse = extract_pulse(net, env_cfg)
    nominal = final_population(pulse)
    pulse_path = out_dir / "pulse.json"
    report_path = out_dir / "report.json"
    write_pulse(pulse_path, pulse, meta={"nominal_population": nominal})
    write_report(report_path, {"nominal_population": nominal})
    print(f"population = {nominal:.12f}")
    return [str(pulse_path), str(report_path)]


_GRAPE_KEYS = {
    "m_steps": int,
    "total_time_s": float,
    "omega_rad_per_s": float,
    "delta_max_rad_per_s": float,
    "learning_rate": float,
    "max_iterations": int,
    "fidelity_threshold": float,
    "init_kind": str,
    "init_peak_rad_per_s": float,
    "init_value_rad_per_s": float,
    "init_values_rad_per_s": list,
}


def _cmd_grape(args, out_dir: Path) -> "list[str]":
    import json

    with open(args.config) as fh:
        payload = json.load(fh)
    unknown = set(payload) - set(_GRAPE_KEYS)
    if unknown:
        raise ValueError(f"unknown gradient-ascent config keys: {sorted(unknown)}")
    for required in ("m_steps", "total_time_s", "omega_rad_per_s", "delta_max_rad_per_s"):
        if required not in payload:
            raise ValueError(f"config {args.config} is missing {required!r}")
    field = ControlField(
        omega=float(payload["omega_rad_per_s"]),
        delta_max=float(payload["delta_max_rad_per_s"]),
    )
    init_values = payload.get("init_values_rad_per_s")
    cfg = GrapeConfig(
        m_steps=int(payload["m_steps"]),
        total_time=float(payload["total_time_s"]),
        learning_rate=float(payload.get("learning_rate", 0.2)),
        max_iterations=int(payload.get("max_iterations", 2000)),
        fidelity_threshold=float(payload.get("fidelity_threshold", 0.999)),
        init_kind=payload.get("init_kind", "linear"),
        init_peak=float(payload.get("init_peak_rad_per_s", 0.0)),
        init_value=float(payload.get("init_value_rad_per_s", 0.0)),
        init_values=tuple(init_values) if init_values is not None else None,
    )
    result = grape_optimize(cfg, field)
    seq = PulseSequence(dt=cfg.dt, deltas=result.amplitudes, field=field)
    pulse_path = out_dir / "pulse.json"
    history_path = out_dir / "history.csv"
    report_path = out_dir / "report.json"
    write_pulse(pulse_path, seq, meta={"fidelity": result.fidelity})
    write_history(history_path, result.history)
    write_report(
        report_path,
        {
            "fidelity": result.fidelity,
            "iterations": result.iterations,
            "converged": result.converged,
        },
    )
    print(f"fidelity = {result.fidelity:.6f} after {result.iterations} iterations")
    return [str(pulse_path), str(history_path), str(report_path)]


def build_parser() -> _Parser:
    parser = _Parser(prog="qsflip", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override configured seeds")
    common.add_argument("--out-dir", type=str, default=".", help="artifact directory")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (falls back to QSF_THREADS, then 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sta = sub.add_parser("sta", parents=[common], help="synthesize flip pulses")
    sta_sub = sta.add_subparsers(dest="sta_command", required=True)
    p = sta_sub.add_parser("ansatz", parents=[common], help="polynomial-trajectory pulse")
    p.add_argument("--a", type=float, required=True, help="shape parameter")
    p.add_argument("--omega-mhz", type=float, default=DEFAULT_OMEGA_MHZ)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.set_defaults(handler=_cmd_sta_ansatz, command_name="sta ansatz")
    p = sta_sub.add_parser("series", parents=[common], help="phase-series pulse")
    p.add_argument("--alphas", type=str, required=True, help="comma-separated, may be empty")
    p.add_argument("--omega-mhz", type=float, default=DEFAULT_OMEGA_MHZ)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.set_defaults(handler=_cmd_sta_series, command_name="sta series")
    p = sta_sub.add_parser("optimize", parents=[common], help="flat-top member of a family")
    p.add_argument("--route", choices=("ansatz", "series"), required=True)
    p.add_argument("--target", choices=sorted(_TARGETS), required=True)
    p.add_argument("--omega-mhz", type=float, default=DEFAULT_OMEGA_MHZ)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.set_defaults(handler=_cmd_sta_optimize, command_name="sta optimize")

    p = sub.add_parser("qsl", parents=[common], help="speed-limit times")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--alphas", type=str, default=None)
    p.add_argument("--omega-mhz", type=float, default=DEFAULT_OMEGA_MHZ)
    p.set_defaults(handler=_cmd_qsl, command_name="qsl")

    p = sub.add_parser("sim", parents=[common], help="simulate one pulse file")
    p.add_argument("--pulse", type=str, required=True)
    p.add_argument("--delta-err", type=float, default=0.0, help="relative to delta_max")
    p.add_argument("--omega-err", type=float, default=0.0, help="relative amplitude error")
    p.set_defaults(handler=_cmd_sim, command_name="sim")

    p = sub.add_parser("scan", parents=[common], help="robustness scan over offsets")
    p.add_argument("--pulse", type=str, required=True)
    p.add_argument("--delta-err", type=str, default="0:0:1", help="min:max:count")
    p.add_argument("--omega-err", type=str, default="0:0:1", help="min:max:count")
    p.set_defaults(handler=_cmd_scan, command_name="scan")

    drl = sub.add_parser("drl", parents=[common], help="train or evaluate the agent")
    drl_sub = drl.add_subparsers(dest="drl_command", required=True)
    for phase in ("pretrain", "finetune"):
        p = drl_sub.add_parser(phase, parents=[common])
        p.add_argument("--env", type=str, required=True, help="environment config JSON")
        p.add_argument("--ppo", type=str, required=True, help="trainer config JSON")
        p.add_argument("--checkpoint", type=str, default=None, help="starting network")
        p.add_argument("--allow-fresh", action="store_true")
        p.set_defaults(
            handler=lambda a, d, _p=phase: _cmd_drl_train(a, d, _p),
            command_name=f"drl {phase}",
        )
    p = drl_sub.add_parser("evaluate", parents=[common])
    p.add_argument("--env", type=str, required=True)
    p.add_argument("--checkpoint", type=str, required=True)
    p.set_defaults(handler=_cmd_drl_evaluate, command_name="drl evaluate")

    p = sub.add_parser("grape", parents=[common], help="gradient-ascent baseline")
    p.add_argument("--config", type=str, required=True, help="run config JSON")
    p.set_defaults(handler=_cmd_grape, command_name="grape")
    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("QSF_THREADS", "1"))
    torch.set_num_threads(threads)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        artifacts = args.handler(args, out_dir)
        config = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items()
            if k not in ("handler", "command_name") and not callable(v)
        }
        _manifest(args, out_dir, args.command_name, config, artifacts)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
