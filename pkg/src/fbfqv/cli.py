"""Command-line front end.

    fbfqv <experiment> --config path [--set key=value ...] [--seed u64] [--out dir]

The experiment name selects the driver; the JSON config file supplies
parameters (schema documented in fbfqv.experiments).  --set overrides
individual keys (dotted paths reach into caps), --seed replaces
master_seed, --out replaces output_dir.  Outputs land in the output
directory: rows.csv, report.json, and for verify-lemmas one
lemma_<id>.json per check.

Exit codes: 0 all checks in the run passed; 2 statistical rejection;
1 execution error (including invalid configuration).  The only
environment variable consulted is FBFQV_WORKERS (replicate worker
count, default 1); results are byte-identical for any value.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, FbfqvError
from .experiments import (
    EXPERIMENTS,
    apply_overrides,
    config_from_dict,
    exit_code,
    run_experiment,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbfqv",
        description="Squared-increment CLT experiments on Poisson-Delaunay vertex sets.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--config", required=True, help="path to the JSON configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable; dotted path for caps.*)",
    )
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override output_dir")
    return parser


def _load_config(args) -> "ExperimentConfig":
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {args.config!r} is not valid JSON: {exc}") from exc
    raw = apply_overrides(raw, args.overrides)
    stated = raw.get("experiment")
    if stated is not None and stated != args.experiment:
        raise ConfigError(
            f"config file says experiment={stated!r} but the command line says {args.experiment!r}"
        )
    raw["experiment"] = args.experiment
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    return config_from_dict(raw)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        report = run_experiment(cfg)
        report.write(cfg.output_dir)
    except FbfqvError as exc:
        print(f"fbfqv: error: {exc}", file=sys.stderr)
        return 1
    for check in report.checks:
        mark = "PASS" if check["passed"] else "FAIL"
        print(f"[{mark}] {check['name']}: {check['detail']}")
    for err in report.errors:
        print(f"[ERROR] replicate {err['replicate']}: {err['detail']}", file=sys.stderr)
    code = exit_code(report)
    print(f"wrote {cfg.output_dir} (rows={len(report.rows)}, exit={code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
