#!/usr/bin/env python3
"""Run the joint V2/V3 CLT ladder over increasing window sides.

Each side runs the clt-v3 experiment (which reports both statistics from a
shared field draw), writes rows.csv/report.json under <out>/s<side>, and the
script closes with a gate table: mean deviation in standard errors, both
normality p-values per statistic, and the cross-side variance spread.

Example:
    python scripts/run_clt_ladder.py --sides 20 45 90 --replicates 500 \
        --seed 20260825 --out runs/ladder
"""

import argparse
import itertools
import math
import sys

from fbfqv.experiments import ExperimentConfig, exit_code, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sides", type=float, nargs="+", default=[20.0, 45.0, 90.0])
    ap.add_argument("--replicates", type=int, default=500)
    ap.add_argument("--hurst", type=float, default=0.25)
    ap.add_argument("--margin", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=20260825)
    ap.add_argument("--out", default="runs/ladder")
    args = ap.parse_args(argv)

    reports = {}
    worst_code = 0
    for side in args.sides:
        cfg = ExperimentConfig(
            experiment="clt-v3",
            hurst=args.hurst,
            anchor_side=side,
            margin=args.margin,
            replicates=args.replicates,
            master_seed=args.seed,
        )
        rep = run_experiment(cfg)
        out_dir = f"{args.out}/s{side:g}"
        rep.write(out_dir)
        reports[side] = rep
        worst_code = max(worst_code, exit_code(rep))
        print(f"side {side:g}: wrote {out_dir} ({len(rep.rows)} rows)")

    print(f"\n{'side':>6} {'kind':>4} {'mean/SE':>8} {'p(JB)':>8} {'p(KS)':>8} {'variance':>10}")
    for side, rep in reports.items():
        for kind in ("V2", "V3"):
            s = rep.summary[kind]
            dev = abs(s["mean"]) / math.sqrt(s["variance"] / s["n"])
            pj = rep.tests[kind]["jarque_bera"]["p_value"]
            pk = rep.tests[kind]["ks_fitted_normal"]["p_value"]
            print(f"{side:>6g} {kind:>4} {dev:>8.2f} {pj:>8.4f} {pk:>8.4f} {s['variance']:>10.4f}")
    for kind in ("V2", "V3"):
        vs = [reports[s].summary[kind]["variance"] for s in args.sides]
        if len(vs) > 1:
            spread = max(abs(a / b - 1.0) for a, b in itertools.permutations(vs, 2))
            print(f"{kind} cross-side variance spread: {spread:.1%}")
    return worst_code


if __name__ == "__main__":
    sys.exit(main())
