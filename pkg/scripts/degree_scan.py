"""Test AUC against polynomial degree for either built-in experiment."""
import argparse

from momentpoly import FitConfig, fit
from momentpoly.metrics import evaluate_model
from momentpoly.synth import resolve_spec, sample, split_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", default="fig1")
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--max-degree", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.0)
    args = ap.parse_args()

    spec = resolve_spec(args.spec)
    tr_seed, te_seed = split_seed(args.seed, 2)
    train, test = sample(spec, args.n, tr_seed), sample(spec, args.n, te_seed)
    bayes = None
    for degree in range(args.max_degree + 1):
        rep = evaluate_model(fit(train, FitConfig(degree=degree, lam=args.lam)), test, spec)
        bayes = rep.bayes_auc
        print(f"degree {degree:>2}  auc {rep.auc:.4f}  rms {rep.rms_from_ideal:.4f}  spearman {rep.spearman:.4f}")
    print(f"Bayes AUC on this test set: {bayes:.4f}")


if __name__ == "__main__":
    main()
