"""Command-line entry point.

    weakcollapse run CONFIG [--out-dir DIR] [--seed N] [--threads N] [--quiet]
    weakcollapse validate CONFIG
    weakcollapse presets list
    weakcollapse presets show MODE
    weakcollapse sweep CONFIG --param feedback.gain --values 0,0.1,0.2

Exit codes: 0 success, 1 validation error, 2 runtime invariant breach, 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from typing import Optional, Sequence

from .config import MODES, ConfigError, config_from_dict, echo, load_config
from .ensemble import STRATEGY_KINDS
from .errors import InvariantBreach, QuantumStateError
from .io import emit_summary, ensure_dir
from .runner import execute, headline_metric, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

PRESETS = {
    "modes": list(MODES),
    "initial_state": ["basis", "plus", "bell", "diagonal", "ket", "matrix"],
    "projectors": ["z-basis", "jz-jz", "logical-error", "subspaces", "custom"],
    "hamiltonian": ["rabi-x", "matrix"],
    "lindblad": ["sigma-z", "projectors", "matrix"],
    "strategy": [k for k in STRATEGY_KINDS if k != "fixed-outcome"],
}

EXAMPLES = {
    "trajectory": {
        "mode": "trajectory",
        "initial_state": {"preset": "plus"},
        "projectors": {"preset": "z-basis", "dim": 2},
    },
    "ensemble": {
        "mode": "ensemble",
        "initial_state": {"preset": "ket", "amplitudes": [0.7745966692414834, 0.6324555320336759]},
        "projectors": {"preset": "z-basis", "dim": 2},
        "strategy": "frozen-born",
        "ensemble_size": 10000,
        "integrator": {"ds": 0.01, "duration": 10.0},
        "seed": 12345,
    },
    "lindblad": {
        "mode": "lindblad",
        "initial_state": {"preset": "plus"},
        "lindblad": [{"preset": "sigma-z", "rate": 1.0}],
        "integrator": {"ds": 0.001, "duration": 2.0},
    },
    "rabi-feedback": {
        "mode": "rabi-feedback",
        "feedback": {"omega": 1.0, "g": 0.1, "epsilon": 0.05, "gain": 0.2},
        "seed": 7,
    },
    "bell-jzjz": {
        "mode": "bell-jzjz",
        "feedback": {"omega": 1.0, "g": 0.1, "epsilon": 0.05, "gain": 0.2, "actuator": "joint"},
        "seed": 7,
    },
    "qec": {"mode": "qec", "qec": {"logical_weight": 0.7}},
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config_path", nargs="?", metavar="CONFIG", help="JSON experiment config")
    common.add_argument("--config", dest="config_flag", metavar="PATH", help="JSON experiment config")
    common.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = argparse.ArgumentParser(prog="weakcollapse", description="Collapse-dynamics simulations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run an experiment")
    sub.add_parser("validate", parents=[common], help="validate a config without running it")
    sw = sub.add_parser("sweep", parents=[common], help="run a config for several values of one parameter")
    sw.add_argument("--param", required=True, help="dotted config key, e.g. feedback.gain")
    sw.add_argument("--values", required=True, help="comma-separated values (parsed as JSON)")
    pr = sub.add_parser("presets", help="list presets or print an example config")
    pr.add_argument("action", choices=["list", "show"])
    pr.add_argument("mode", nargs="?", choices=list(EXAMPLES))
    return p


def _config_path(args) -> str:
    path = args.config_flag or args.config_path
    if not path:
        raise ConfigError(["no config given (positional CONFIG or --config PATH)"])
    return path


def _load(args):
    path = _config_path(args)
    try:
        return load_config(path, args.seed)
    except FileNotFoundError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc


def _set_dotted(raw: dict, key: str, value) -> None:
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError([f"{key}: {part} is not a config block"])
    node[parts[-1]] = value


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _cmd_run(args) -> int:
    cfg = _load(args)
    result = execute(cfg, threads=args.threads)
    paths = write_outputs(result, args.out_dir)
    _say(args, f"{cfg.mode}: wrote {', '.join(paths.values())}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args)
    _say(args, f"ok: {cfg.mode} config is valid")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    base = echo(_load(args))
    try:
        values = [json.loads(v) for v in args.values.split(",")]
    except json.JSONDecodeError as exc:
        raise ConfigError([f"--values: {exc}"]) from None
    table = []
    for value in values:
        raw = copy.deepcopy(base)
        _set_dotted(raw, args.param, value)
        cfg = config_from_dict(raw)
        result = execute(cfg, threads=args.threads)
        sub_dir = os.path.join(args.out_dir, f"{args.param}={value}")
        write_outputs(result, sub_dir)
        table.append({"value": value, "metric": headline_metric(result), "out_dir": sub_dir})
        _say(args, f"{args.param}={value}: {table[-1]['metric']}")
    ensure_dir(args.out_dir)
    emit_summary({"param": args.param, "results": table, "base_config": base},
                 os.path.join(args.out_dir, "sweep_summary.json"))
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for group, names in PRESETS.items():
            print(f"{group}: {', '.join(names)}")
        return EXIT_OK
    if args.mode is None:
        print("presets show needs a mode: " + ", ".join(EXAMPLES), file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(EXAMPLES[args.mode], indent=2))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "sweep": _cmd_sweep, "presets": _cmd_presets}
    try:
        return handler[args.command](args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantBreach, QuantumStateError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
