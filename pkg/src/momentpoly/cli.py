"""Command-line interface: ``momentpoly {gen,train,eval,inspect,reproduce}``.

Exit codes: 0 success, 2 input/config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import InputError, MomentPolyError, SingularSystemError
from .events import read_csv, write_csv
from .metrics import evaluate_model, write_histogram_csv, write_purity_csv
from .model import PREPROC_MODES, FitConfig, PolyModel, fit_report
from .synth import resolve_spec, sample, split_seed

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("momentpoly")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")


def _config(args, *skip) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", *skip)}


def cmd_gen(args) -> int:
    spec = resolve_spec(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_seed, test_seed = split_seed(args.seed, 2)
    write_csv(sample(spec, args.n, train_seed), out / "train.csv")
    write_csv(sample(spec, args.n, test_seed), out / "test.csv")
    _write_json({"config": _config(args), "train_seed": train_seed, "test_seed": test_seed,
                 "spec": spec.to_dict()}, out / "gen.json")
    print(f"wrote {out / 'train.csv'} and {out / 'test.csv'} ({args.n} events per class each, d={spec.dim})")
    return EXIT_OK


def cmd_train(args) -> int:
    events = read_csv(args.data)
    t0 = time.perf_counter()
    cfg = FitConfig(degree=args.degree, lam=args.lam, preproc=args.preproc, mode=args.mode, seed=args.seed)
    model, report = fit_report(events, cfg)
    report["wall_seconds"] = time.perf_counter() - t0
    report["coefficients"] = [float(c) for c in model.coefficients] if model.basis.size <= 64 else None
    report["config"] = _config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    _write_json(report, report_path)
    summary = {k: report[k] for k in ("basis_size", "condition_estimate", "residual_norm", "lambda", "wall_seconds")}
    if report["coefficients"] is not None:
        summary["coefficients"] = report["coefficients"]
    print(json.dumps(_jsonable(summary)))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = PolyModel.load(args.model)
    events = read_csv(args.data)
    if events.dim != model.dim:
        raise _dim_error(model.dim, events.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if model.mode == "regression":
        resp = model.evaluate(events.x)
        mse = float(np.average((resp - events.label) ** 2, weights=events.weights))
        report = {"mse": mse, "n_events": len(events)}
    else:
        spec = resolve_spec(args.spec) if args.spec else None
        if spec is not None and spec.dim != model.dim:
            raise _dim_error(model.dim, spec.dim)
        rep = evaluate_model(model, events, spec, n_bins=args.bins, min_occupancy=args.min_occupancy)
        write_histogram_csv(rep.histogram, out / "histogram.csv")
        write_purity_csv(rep.curve, out / "purity.csv")
        report = rep.to_dict()
    report["config"] = _config(args)
    _write_json(report, out / "report.json")
    print(json.dumps(_jsonable({k: v for k, v in report.items() if k != "config"})))
    return EXIT_OK


def _dim_error(expected: int, got: int) -> InputError:
    return InputError(f"dimension mismatch: model has d={expected}, data has d={got}")


def _monomial_name(exps) -> str:
    parts = [f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e]
    return "*".join(parts) if parts else "1"


def cmd_inspect(args) -> int:
    model = PolyModel.load(args.model)
    c = model.coefficients
    exps = model.basis.exponents
    print(f"dimension:          {model.dim}")
    print(f"degree:             {model.degree}")
    print(f"basis size:         {model.basis.size}")
    print(f"mode:               {model.mode}")
    pp = model.preprocessor
    print(f"preprocessor:       {pp.mode} offsets={list(pp.offsets)} scales={list(pp.scales)}")
    for k, v in model.metadata.items():
        print(f"{k + ':':<20}{v}")
    nonzero = int(np.count_nonzero(c))
    print(f"nonzero coefficients: {nonzero}")
    top = np.argsort(-np.abs(c), kind="stable")[: args.top]
    print("largest |coefficient| monomials:")
    for i in top:
        if c[i] == 0 and nonzero:
            continue
        print(f"  {_monomial_name(exps[i]):<24} {float(c[i])!r}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .model import fit
    from .synth import BUILTIN_SPECS

    spec = BUILTIN_SPECS[args.experiment]()
    n = args.n or (10_000 if args.experiment == "fig1" else 40_000)
    train_seed, test_seed = split_seed(args.seed, 2)
    train, test = sample(spec, n, train_seed), sample(spec, n, test_seed)
    model, fit_rep = fit_report(train, FitConfig(degree=args.degree, lam=args.lam, seed=args.seed))
    rep = evaluate_model(model, test, spec, n_bins=args.bins)
    result = {"experiment": args.experiment, "n_per_class": n, "degree": args.degree,
              "training": fit_rep, "evaluation": rep.to_dict()}
    if args.scan:
        result["auc_by_degree"] = {
            d: evaluate_model(fit(train, FitConfig(degree=d, lam=args.lam)), test).auc
            for d in range(0, args.degree + 1)
        }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "model.json")
        write_histogram_csv(rep.histogram, out / "histogram.csv")
        write_purity_csv(rep.curve, out / "purity.csv")
        result["config"] = _config(args)
        _write_json(result, out / "report.json")
    print(json.dumps(_jsonable(result), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momentpoly", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate seeded train/test event CSVs")
    g.add_argument("--spec", default="fig1", help="built-in spec (fig1, sec3) or a spec JSON file")
    g.add_argument("--n", type=int, default=10_000, help="events per class in each file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="fit a polynomial response from an event CSV")
    t.add_argument("data")
    t.add_argument("--degree", type=int, required=True)
    t.add_argument("--lambda", dest="lam", type=float, default=0.0, help="ridge term added to the moment matrix")
    t.add_argument("--preproc", choices=PREPROC_MODES, default="affine")
    t.add_argument("--mode", choices=("binary", "regression"), default="binary")
    t.add_argument("--seed", type=int, default=None, help="recorded in model metadata")
    t.add_argument("--out", default="model.json")
    t.add_argument("--report", default=None, help="training report path (default: <out>.report.json)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a model on an event CSV")
    e.add_argument("--model", required=True)
    e.add_argument("data")
    e.add_argument("--spec", default=None, help="mixture spec for the Bayes-optimal comparison")
    e.add_argument("--bins", type=int, default=20)
    e.add_argument("--min-occupancy", type=int, default=25)
    e.add_argument("--out", default="eval")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="summarize a model document")
    i.add_argument("model")
    i.add_argument("--top", type=int, default=10)
    i.set_defaults(func=cmd_inspect)

    r = sub.add_parser("reproduce", help="run one of the built-in experiments end to end")
    r.add_argument("experiment", choices=("fig1", "sec3"))
    r.add_argument("--degree", type=int, default=20)
    r.add_argument("--n", type=int, default=None, help="events per class (default 1e4 fig1, 4e4 sec3)")
    r.add_argument("--seed", type=int, default=7)
    r.add_argument("--lambda", dest="lam", type=float, default=0.0)
    r.add_argument("--bins", type=int, default=20)
    r.add_argument("--scan", action="store_true", help="also report test AUC for every degree up to --degree")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SingularSystemError as exc:
        print(f"error: {exc} (pass --lambda)", file=sys.stderr)
        return EXIT_NUMERIC
    except (MomentPolyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
