"""Command-line entry point.

Subcommands: ``simulate`` (single replication), ``montecarlo`` (full
experiment), ``metrics`` (re-aggregate an exported trajectory CSV), and
``presets`` (list the built-in parameter sets). Exit codes: 0 success,
2 invalid arguments, 3 config validation, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import csvio
from .experiments import (
    ConfigError,
    PRESET_NAMES,
    apply_overrides,
    config_from_mapping,
    load_config,
    mapping_from_config,
    parse_config_text,
    preset_config,
    run_experiment,
)
from .metrics import aggregate
from .model import ParameterError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4

OUT_DIR_ENV = "NETCREDIT_OUT"


def _add_run_options(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="flat key-value config file")
    source.add_argument("--preset", choices=PRESET_NAMES, help="built-in parameter set")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (applied after file parsing; unknown keys are errors)",
    )
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"output directory (default: ${OUT_DIR_ENV} or ./results)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netcredit",
        description="Credit scoring on dynamic homophily networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a single replication and export its trajectory")
    _add_run_options(sim)

    mc = sub.add_parser("montecarlo", help="run a full Monte Carlo experiment")
    _add_run_options(mc)
    mc.add_argument("--threads", type=int, default=1, help="cap on parallel replication workers")

    met = sub.add_parser("metrics", help="aggregate an exported trajectory CSV")
    met.add_argument("--in", dest="input", type=Path, required=True, help="trajectory CSV")
    met.add_argument("--out", dest="output", type=Path, required=True, help="summary CSV to write")
    met.add_argument("--estimator", help="estimator tag (default: inferred from the file name)")
    met.add_argument("--crlb-mode", choices=("mean", "harmonic"), default="mean")

    sub.add_parser("presets", help="list built-in parameter sets")
    return parser


def _resolve_out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUT_DIR_ENV)
    return Path(env) if env else Path("results")


def _build_config(args, out_dir: Path):
    if args.config is not None:
        cfg = load_config(args.config, out_dir=out_dir)
    else:
        cfg = preset_config(args.preset, out_dir=out_dir)
    if args.overrides:
        mapping = apply_overrides(mapping_from_config(cfg), args.overrides)
        cfg = config_from_mapping(mapping, out_dir=out_dir)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _cmd_simulate(args) -> int:
    out_dir = _resolve_out_dir(args)
    cfg = _build_config(args, out_dir)
    cfg = replace(cfg, replications=1)
    result = run_experiment(cfg)
    for name in sorted(result.files):
        print(f"{name}: {result.files[name]}")
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    out_dir = _resolve_out_dir(args)
    cfg = _build_config(args, out_dir)
    result = run_experiment(cfg, threads=args.threads)
    for name in sorted(result.files):
        print(f"{name}: {result.files[name]}")
    return EXIT_OK


def _infer_estimator(path: Path) -> str | None:
    stem = path.stem
    for tag in ("risk_prediction", "recursive_scoring"):
        if tag in stem:
            return tag
    return None


def _cmd_metrics(args) -> int:
    estimator = args.estimator or _infer_estimator(args.input)
    if estimator is None:
        raise ConfigError(
            f"cannot infer estimator tag from {args.input.name!r}; pass --estimator"
        )
    trajectories = csvio.read_trajectories(args.input)
    summary = aggregate(trajectories, estimator, crlb_mode=args.crlb_mode)
    path = csvio.write_summary(args.output, summary)
    print(f"summary: {path}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in PRESET_NAMES:
        cfg = preset_config(name)
        print(f"{name}:")
        for key, value in mapping_from_config(cfg).items():
            print(f"  {key} = {value}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "montecarlo": _cmd_montecarlo,
    "metrics": _cmd_metrics,
    "presets": _cmd_presets,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
