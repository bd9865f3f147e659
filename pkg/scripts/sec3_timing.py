"""Accumulation, assembly and solve times for the 3D experiment as the sample grows."""
import argparse

from momentpoly import FitConfig, fit_report
from momentpoly.metrics import evaluate_model
from momentpoly.synth import sample, sec3_spec, split_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[5_000, 10_000, 20_000, 40_000])
    ap.add_argument("--degree", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    spec = sec3_spec()
    tr_seed, te_seed = split_seed(args.seed, 2)
    print(f"{'n/class':>8} {'M':>5} {'accum s':>8} {'assem s':>8} {'solve s':>8} {'cond':>9} {'auc':>7} {'excess':>8}")
    for n in args.sizes:
        model, rep = fit_report(sample(spec, n, tr_seed), FitConfig(degree=args.degree))
        ev = evaluate_model(model, sample(spec, n, te_seed), spec)
        print(f"{n:>8} {rep['basis_size']:>5} {rep['accumulate_seconds']:8.2f} {rep['assemble_seconds']:8.2f} "
              f"{rep['solve_seconds']:8.2f} {rep['condition_estimate']:9.2e} {ev.auc:7.4f} {ev.isotonic_excess:8.4f}")


if __name__ == "__main__":
    main()
