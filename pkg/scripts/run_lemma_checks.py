#!/usr/bin/env python3
"""Run the supporting-estimate checks and write one JSON report per check.

Covers the asymptotic-correlation comparison, the correlation envelope
stability check, the adjacency-probability bound sweep, and the
exponential-moment bound (the latter over a configurable alpha grid rather
than the single experiment alpha).

Example:
    python scripts/run_lemma_checks.py --alpha 0.5 --inner 200000 \
        --seed 20260825 --out runs/lemmas
"""

import argparse
import os
import sys

from fbfqv.streams import substream
from fbfqv.verify import (
    check_corr_asymptotics,
    check_corr_envelope,
    check_exp_moment_bound,
    check_p2n_bounds,
    write_lemma_json,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--inner", type=int, default=200000, help="bound-sweep Monte Carlo budget")
    ap.add_argument("--envelope-samples", type=int, default=20000)
    ap.add_argument(
        "--moment-alphas", type=float, nargs="+", default=[0.3, 0.5, 0.8],
        help="alpha grid for the exponential-moment bound",
    )
    ap.add_argument("--seed", type=int, default=20260825)
    ap.add_argument("--out", default="runs/lemmas")
    args = ap.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    reports = [
        check_corr_asymptotics(args.alpha),
        check_corr_envelope(
            args.alpha,
            sample_count=args.envelope_samples,
            rng=substream(args.seed, "lemma-env"),
        ),
        check_p2n_bounds(inner=args.inner, rng=substream(args.seed, "lemma-p2n")),
    ]
    for a in args.moment_alphas:
        rep = check_exp_moment_bound(a, 1.0, (1e3, 1e4, 1e6))
        reports.append(rep)
        path = os.path.join(args.out, f"lemma_{rep.lemma_id}_alpha{a:g}.json")
        write_lemma_json(rep, path)
        print(f"[{'PASS' if rep.passed else 'FAIL'}] {rep.lemma_id} (alpha={a:g}) -> {path}")
    for rep in reports[:3]:
        path = os.path.join(args.out, f"lemma_{rep.lemma_id}.json")
        write_lemma_json(rep, path)
        print(f"[{'PASS' if rep.passed else 'FAIL'}] {rep.lemma_id} ({len(rep.cases)} cases) -> {path}")
    return 0 if all(r.passed for r in reports) else 2


if __name__ == "__main__":
    sys.exit(main())
