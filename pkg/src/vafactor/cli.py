"""Command-line pipeline: simulate -> train -> predict -> evaluate -> benchmark.

Every command reads and writes plain files (CSV, JSON, the binary posterior
container) and drops rendered figures next to each delimited report. Exit
codes: 0 on success, 1 for usage errors, 2 for runtime failures with a
one-line diagnostic on stderr. All randomness flows from --seed flags.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, figures, io, predict
from .data import fit_scales
from .gibbs import ChainConfig, run_chain, shrinkage_diagnostic
from .metrics import acc1, acc_csmf, ccc
from .model import Hyperparameters
from .simulate import PRESETS, generate_dataset, preset, split_train_test

PRESET_NAMES = tuple(sorted(PRESETS))


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _derived(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(path.stem + suffix)


# ------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(args.seed)
    schema_path = out_dir / f"{args.preset}.schema"
    written = []
    for index, child in enumerate(root.spawn(args.n_datasets)):
        words = child.generate_state(2, dtype=np.uint32)
        sim = preset(args.preset, n=args.n, n_symptoms=args.symptoms,
                     n_causes=args.causes, seed=int(words[0]))
        data, _ = generate_dataset(sim)
        if index == 0:
            io.write_schema(schema_path, data.specs_raw, data.n_causes)
        split = split_train_test(data, args.test_fraction, seed=int(words[1]))
        stem = f"{args.preset}-{index}"
        io.write_dataset(out_dir / f"{stem}-train.csv", split.train)
        io.write_dataset(out_dir / f"{stem}-test.csv", split.test)
        io.write_truth(out_dir / f"{stem}-truth.json", split.test.ids,
                       split.test_labels, data.n_causes)
        written.append(stem)
    print(f"wrote {len(written)} datasets under {out_dir} "
          f"(schema: {schema_path.name})")
    return 0


# ---------------------------------------------------------------- train

def _select_covariates(data, available, wanted):
    """Keep the intercept plus the requested covariate columns, in order."""
    names = [w[2:] if w.startswith("x_") else w for w in wanted]
    missing = [n for n in names if n not in available]
    if missing:
        raise ValueError(f"covariate columns not in the data file: {missing}")
    keep = [0] + [1 + available.index(n) for n in names]
    return replace(data, x=data.x[:, keep]), tuple(names)


def cmd_train(args) -> int:
    data = io.read_dataset(args.data, args.schema)
    available = list(io.dataset_covariate_names(args.data))
    data, covariates = _select_covariates(data, available, args.covariates)
    if not np.any(data.y >= 0):
        raise ValueError("training file has no labeled rows")
    data = data.with_scales(fit_scales(data))
    hyper = Hyperparameters.defaults(
        n_symptoms=data.n_symptoms, n_causes=data.n_causes,
        n_covariates=data.n_covariates, n_factors=args.k, n_basis=args.l)
    config = ChainConfig(iterations=args.iters, burn_in=args.burn,
                         thinning=args.thin, seed=args.seed)
    samples = run_chain(data, hyper, config, progress=args.progress)
    out = Path(args.out) if args.out else Path(args.data).with_suffix(".post")
    io.write_posterior(out, samples, data.specs_raw, data.n_causes,
                       covariates, data.scales)
    norms = shrinkage_diagnostic(samples)
    shrink_csv = _derived(out, "-shrinkage.csv")
    with open(shrink_csv, "w") as fh:
        fh.write("basis_column,posterior_mean_norm\n")
        for col, norm in enumerate(norms, start=1):
            fh.write(f"{col},{norm!r}\n")
    figures.save_shrinkage_profile(_derived(out, "-shrinkage.png"), norms)
    figures.save_mixture_trace(_derived(out, "-pi-trace.png"), samples.pi)
    baseline_x = np.zeros(data.n_covariates)
    baseline_x[0] = 1.0
    for cause in range(data.n_causes):
        summary = predict.posterior_latent_summaries(samples, cause, baseline_x)
        figures.save_latent_summary(_derived(out, f"-latent-c{cause + 1}.png"),
                                    summary.mean, summary.mean_lo,
                                    summary.mean_hi, summary.cov, cause)
    print(f"retained {samples.n_snapshots} snapshots -> {out}")
    return 0


# -------------------------------------------------------------- predict

def cmd_predict(args) -> int:
    pf = io.read_posterior(args.posterior)
    test = io.read_dataset_using(args.test_data, pf.specs, pf.n_causes)
    available = list(io.dataset_covariate_names(args.test_data))
    test, _ = _select_covariates(test, available, pf.covariates)
    test = test.with_scales(pf.scales)
    rng = np.random.default_rng(args.seed)
    per_snapshot = predict.snapshot_cause_posteriors(pf.samples, test,
                                                     args.n_mc, rng)
    cod = predict.cod_posterior(pf.samples, test, per_snapshot=per_snapshot)
    labels = predict.sample_test_labels(pf.samples, test, rng=rng,
                                        per_snapshot=per_snapshot)
    csmf = predict.estimate_csmf(labels, pf.n_causes)
    ids = test.ids or tuple(f"r{i:04d}" for i in range(test.n))
    io.write_predictions(args.out_predictions, ids, cod.probs, cod.top)
    io.write_csmf(args.out_csmf, csmf.mean, csmf.lo, csmf.hi)
    figures.save_csmf_intervals(_derived(args.out_csmf, ".png"),
                                csmf.mean, csmf.lo, csmf.hi)
    print(f"scored {test.n} decedents -> {args.out_predictions}, {args.out_csmf}")
    return 0


# ------------------------------------------------------------- evaluate

def cmd_evaluate(args) -> int:
    ids, probs, top = io.read_predictions(args.predictions)
    truth, n_causes = io.read_truth(args.truth)
    if set(ids) != set(truth):
        raise ValueError("prediction and truth row ids do not match")
    true_labels = np.array([truth[rid] for rid in ids])
    true_csmf = np.bincount(true_labels, minlength=n_causes) / len(true_labels)
    if args.csmf:
        pred_csmf, _, _ = io.read_csmf(args.csmf)
    else:
        pred_csmf = np.bincount(top, minlength=n_causes) / len(top)
    hit = acc1(true_labels, top)
    values = {"acc1": hit, "acc_csmf": acc_csmf(true_csmf, pred_csmf),
              "ccc": ccc(hit, n_causes)}
    io.write_metrics(args.out, values)
    figures.save_confusion(_derived(args.out, "-confusion.png"),
                           true_labels, top, n_causes)
    print(" ".join(f"{key}={values[key]:.4f}" for key in ("acc1", "acc_csmf", "ccc")))
    return 0


# ------------------------------------------------------------ benchmark

def cmd_benchmark(args) -> int:
    config = bench.BenchConfig(
        preset_name=args.preset, n_datasets=args.n_datasets,
        models=tuple(args.models), seed=args.seed, n=args.n,
        n_symptoms=args.symptoms, n_causes=args.causes,
        test_fraction=args.test_fraction, iterations=args.iters,
        burn_in=args.burn, thinning=args.thin, n_factors=args.k,
        n_basis=args.l, jobs=args.jobs)
    result = bench.run_benchmark(config, progress=args.progress)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bench.write_scores(out_dir / "scores.csv", result)
    summary = bench.format_summary(result)
    (out_dir / "summary.txt").write_text(summary + "\n")
    for metric in bench.METRICS:
        figures.save_benchmark_strip(
            out_dir / f"{metric}.png",
            {model: result.per_model(model, metric) for model in config.models},
            metric)
    print(summary)
    return 0


# ----------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="vafactor",
                     description="Covariate-dependent latent factor models "
                                 "for cause-of-death classification.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    sim = sub.add_parser("simulate",
                         help="generate benchmark datasets")
    sim.add_argument("preset", choices=PRESET_NAMES)
    sim.add_argument("out_dir")
    sim.add_argument("--n-datasets", type=int, default=1)
    sim.add_argument("--n", type=int, default=928)
    sim.add_argument("--symptoms", type=int, default=21)
    sim.add_argument("--causes", type=int, default=4)
    sim.add_argument("--test-fraction", type=float, default=0.25)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    train = sub.add_parser("train", help="fit one chain")
    train.add_argument("data")
    train.add_argument("schema")
    train.add_argument("--out", default=None)
    train.add_argument("--k", type=int, default=6, help="number of factors")
    train.add_argument("--l", type=int, default=5, help="number of basis columns")
    train.add_argument("--iters", type=int, default=2000)
    train.add_argument("--burn", type=int, default=1000)
    train.add_argument("--thin", type=int, default=10)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--covariates", nargs="*", default=[],
                       help="x_ columns to regress on (default: intercept only)")
    train.add_argument("--progress", action="store_true")
    train.set_defaults(func=cmd_train)

    pred = sub.add_parser("predict",
                          help="score new decedents against a posterior")
    pred.add_argument("posterior")
    pred.add_argument("test_data")
    pred.add_argument("--n-mc", type=int, default=200)
    pred.add_argument("--seed", type=int, default=0)
    pred.add_argument("--out-predictions", default="predictions.csv")
    pred.add_argument("--out-csmf", default="csmf.csv")
    pred.set_defaults(func=cmd_predict)

    ev = sub.add_parser("evaluate",
                        help="score predictions against held-out truth")
    ev.add_argument("predictions")
    ev.add_argument("truth")
    ev.add_argument("--csmf", default=None,
                    help="CSMF estimate file (default: top-cause frequencies)")
    ev.add_argument("--out", default="metrics.json")
    ev.set_defaults(func=cmd_evaluate)

    bm = sub.add_parser("benchmark",
                        help="simulate, fit, and score many datasets")
    bm.add_argument("preset", choices=PRESET_NAMES)
    bm.add_argument("--n-datasets", type=int, default=10)
    bm.add_argument("--models", nargs="+", default=list(bench.MODELS),
                    choices=bench.MODELS)
    bm.add_argument("--seed", type=int, default=0)
    bm.add_argument("--n", type=int, default=928)
    bm.add_argument("--symptoms", type=int, default=21)
    bm.add_argument("--causes", type=int, default=4)
    bm.add_argument("--test-fraction", type=float, default=0.25)
    bm.add_argument("--iters", type=int, default=2000)
    bm.add_argument("--burn", type=int, default=1000)
    bm.add_argument("--thin", type=int, default=10)
    bm.add_argument("--k", type=int, default=6)
    bm.add_argument("--l", type=int, default=8)
    bm.add_argument("--jobs", type=int, default=1)
    bm.add_argument("--out-dir", default="benchmark")
    bm.add_argument("--progress", action="store_true")
    bm.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"vafactor: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
