#!/usr/bin/env python3
"""Cross-validate the assembled V2 variance against an empirical reference.

Runs the importance-sampling variance experiment (sigma0 plus the four
shared-vertex components, assembled as (2/3) * sum + 2) and compares the
total against an empirical V2 variance: either a number passed with
--empirical, or one recomputed from a CLT ladder output directory's
rows.csv (the V2 rows of its largest run).

Example:
    python scripts/run_variance_crossval.py --outer 20000 --inner 200 \
        --seed 20260825 --ladder-dir runs/ladder/s90 --out runs/variance
"""

import argparse
import csv
import os
import sys

import numpy as np

from fbfqv.experiments import ExperimentConfig, run_experiment


def _empirical_v2_variance(ladder_dir: str) -> float:
    path = os.path.join(ladder_dir, "rows.csv")
    with open(path, newline="") as fh:
        vals = [float(r["value"]) for r in csv.DictReader(fh) if r["kind"] == "V2"]
    if len(vals) < 2:
        raise SystemExit(f"no V2 rows found in {path}")
    return float(np.var(vals, ddof=1))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hurst", type=float, default=0.25)
    ap.add_argument("--outer", type=int, default=20000)
    ap.add_argument("--inner", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20260825)
    ap.add_argument("--out", default="runs/variance")
    group = ap.add_mutually_exclusive_group()
    group.add_argument("--empirical", type=float, default=None, help="reference V2 variance")
    group.add_argument("--ladder-dir", default=None, help="CLT run directory with rows.csv")
    ap.add_argument("--tolerance", type=float, default=0.25, help="relative deviation gate")
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(
        experiment="variance",
        hurst=args.hurst,
        variance_outer=args.outer,
        variance_inner=args.inner,
        master_seed=args.seed,
    )
    rep = run_experiment(cfg)
    rep.write(args.out)
    for name in sorted(rep.summary):
        s = rep.summary[name]
        print(f"{name}: {s['value']:.5f} +- {s['std_error']:.5f}")
    total = rep.summary["total"]["value"]

    reference = args.empirical
    if args.ladder_dir is not None:
        reference = _empirical_v2_variance(args.ladder_dir)
        print(f"empirical V2 variance from {args.ladder_dir}: {reference:.5f}")
    if reference is None:
        print(f"wrote {args.out}; no empirical reference supplied")
        return 0
    rel = abs(total - reference) / reference
    ok = rel < args.tolerance
    print(f"relative deviation {rel:.2%} vs gate {args.tolerance:.0%}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
