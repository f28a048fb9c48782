#!/usr/bin/env python3
"""Run the synthetic KCDE-vs-staircase grid and print RE quartiles per cell.

    python scripts/run_benchmark.py --replicates 100 --jobs 4 --out rows.csv
"""

import argparse
import sys

from kcde.benchmark import ExperimentConfig, rows_to_csv, run_experiment, summarize


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--sizes", default="50,100,200,500,1000")
    ap.add_argument("--kernels", default="bitriangular")
    ap.add_argument("--bandwidth", default="bgk,normal_reference")
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="write per-replicate rows as CSV")
    args = ap.parse_args(argv)

    config = ExperimentConfig(
        sizes=tuple(int(s) for s in args.sizes.split(",")),
        replicates=args.replicates,
        kernels=tuple(args.kernels.split(",")),
        bandwidth_methods=tuple(args.bandwidth.split(",")),
        seed=args.seed,
    )
    rows = run_experiment(config, jobs=args.jobs)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rows_to_csv(rows))
    print(f"{'model':6} {'n':>5} {'kernel':13} {'bandwidth':17} {'q1':>7} {'median':>7} {'q3':>7} fails")
    for c in summarize(rows):
        print(f"{c['model']:6} {c['n']:5d} {c['kernel']:13} {c['bw_method']:17} "
              f"{c['q1']:7.3f} {c['median']:7.3f} {c['q3']:7.3f} {c['failures']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
