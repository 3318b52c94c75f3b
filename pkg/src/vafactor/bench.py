"""Benchmark harness: many simulated datasets, several models, one table.

Each dataset job is self-contained: it draws the dataset from a per-dataset
seed spawned off the master seed, splits off a test set, fits every requested
model, and scores top-cause accuracy, CSMF accuracy, and chance-corrected
concordance against the held-out labels. Jobs can run across a process pool;
because every stream is derived from the master seed up front, results do not
depend on the worker count.

The factor models fit one chain on the labeled training rows and score the
held-out rows by Monte-Carlo posterior prediction: per-snapshot cause
posteriors give the top-cause call, and labels sampled from them give the
CSMF estimate. (Reading off labels imputed in-chain is tempting but sticky —
each row's latent scores carry the imprint of its previous label — and it
scores several points below posterior prediction from the very same chain.)
The covariate-suppressed variant refits after dropping every covariate
column, and the naive Bayes baseline trains on the same labeled rows.
"""
from __future__ import annotations

import csv
import sys
import time
from dataclasses import dataclass

import numpy as np

from .data import fit_scales
from .gibbs import ChainConfig, run_chain
from .metrics import acc1, acc_csmf, ccc
from .model import Hyperparameters
from .nbc import nbc_fit, nbc_predict_dataset
from .predict import (cod_posterior, estimate_csmf, sample_test_labels,
                      snapshot_cause_posteriors)
from .samplers import default_rng
from .simulate import SimConfig, generate_dataset, preset, split_train_test

MODELS = ("farva", "farva-nocov", "nbc")
METRICS = ("acc1", "acc_csmf", "ccc")


@dataclass(frozen=True)
class BenchConfig:
    """Settings for one benchmark run."""

    preset_name: str
    n_datasets: int
    models: tuple[str, ...] = MODELS
    seed: int = 0
    n: int = 928
    n_symptoms: int = 21
    n_causes: int = 4
    test_fraction: float = 0.25
    iterations: int = 2000
    burn_in: int = 1000
    thinning: int = 10
    n_factors: int = 6
    n_basis: int = 8
    jobs: int = 1

    def __post_init__(self):
        if self.n_datasets < 1:
            raise ValueError("n_datasets must be >= 1")
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        preset(self.preset_name)    # validates the name eagerly


@dataclass(frozen=True)
class _Task:
    config: BenchConfig
    index: int
    data_seed: int
    split_seed: int
    chain_seed: int
    predict_seed: int


@dataclass(frozen=True)
class BenchmarkResult:
    config: BenchConfig
    scores: tuple[dict, ...]    # one {model: {metric: value}} per dataset

    def per_model(self, model: str, metric: str) -> np.ndarray:
        return np.array([s[model][metric] for s in self.scores])

    def summary(self) -> dict[str, dict[str, tuple[float, float]]]:
        """model -> metric -> (mean, SD) across datasets."""
        out: dict[str, dict[str, tuple[float, float]]] = {}
        for model in self.config.models:
            out[model] = {}
            for metric in METRICS:
                vals = self.per_model(model, metric)
                out[model][metric] = (float(vals.mean()), float(vals.std()))
        return out


_N_MC = 200    # Monte-Carlo draws per (snapshot, cause) when scoring test rows


def _score(true_labels: np.ndarray, top: np.ndarray, pred_csmf: np.ndarray,
           n_causes: int) -> dict[str, float]:
    true_csmf = np.bincount(true_labels, minlength=n_causes) / len(true_labels)
    hit = acc1(true_labels, top)
    return {"acc1": hit,
            "acc_csmf": acc_csmf(true_csmf, pred_csmf),
            "ccc": ccc(hit, n_causes)}


def _score_dataset(task: _Task) -> dict:
    cfg = task.config
    sim = preset(cfg.preset_name, n=cfg.n, n_symptoms=cfg.n_symptoms,
                 n_causes=cfg.n_causes, seed=task.data_seed)
    data, _ = generate_dataset(sim)
    split = split_train_test(data, cfg.test_fraction, seed=task.split_seed)
    truth = split.test_labels
    train = split.train.with_scales(fit_scales(split.train))
    test = split.test.with_scales(train.scales)
    out: dict[str, dict[str, float]] = {}
    for model in cfg.models:
        if model == "nbc":
            probs = nbc_predict_dataset(nbc_fit(train), test)
            out[model] = _score(truth, np.argmax(probs, axis=1),
                                probs.mean(axis=0), cfg.n_causes)
            continue
        fit_data = train if model == "farva" else train.with_intercept_only()
        score_data = test if model == "farva" else test.with_intercept_only()
        hyper = Hyperparameters.defaults(
            n_symptoms=fit_data.n_symptoms, n_causes=cfg.n_causes,
            n_covariates=fit_data.n_covariates, n_factors=cfg.n_factors,
            n_basis=cfg.n_basis)
        chain = ChainConfig(iterations=cfg.iterations, burn_in=cfg.burn_in,
                            thinning=cfg.thinning, seed=task.chain_seed)
        samples = run_chain(fit_data, hyper, chain)
        rng = default_rng(task.predict_seed)
        per_snapshot = snapshot_cause_posteriors(samples, score_data, _N_MC, rng)
        posterior = cod_posterior(samples, score_data, per_snapshot=per_snapshot)
        labels = sample_test_labels(samples, score_data, rng=rng,
                                    per_snapshot=per_snapshot)
        csmf = estimate_csmf(labels, cfg.n_causes)
        out[model] = _score(truth, posterior.top, csmf.mean, cfg.n_causes)
    return out


def _tasks(config: BenchConfig) -> list[_Task]:
    root = np.random.SeedSequence(config.seed)
    tasks = []
    for index, child in enumerate(root.spawn(config.n_datasets)):
        words = child.generate_state(4, dtype=np.uint32)
        tasks.append(_Task(config=config, index=index,
                           data_seed=int(words[0]), split_seed=int(words[1]),
                           chain_seed=int(words[2]), predict_seed=int(words[3])))
    return tasks


def run_benchmark(config: BenchConfig, progress: bool = False) -> BenchmarkResult:
    tasks = _tasks(config)
    t0 = time.time()
    if config.jobs == 1:
        scores = []
        for task in tasks:
            scores.append(_score_dataset(task))
            if progress:
                print(f"dataset {task.index + 1}/{len(tasks)} scored "
                      f"({time.time() - t0:.0f}s elapsed)", file=sys.stderr)
    else:
        import multiprocessing

        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(processes=config.jobs) as pool:
            scores = pool.map(_score_dataset, tasks)
        if progress:
            print(f"{len(tasks)} datasets scored ({time.time() - t0:.0f}s elapsed)",
                  file=sys.stderr)
    return BenchmarkResult(config=config, scores=tuple(scores))


def write_scores(path, result: BenchmarkResult) -> None:
    """Per-dataset scores as CSV: preset, dataset, model, then metrics."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["preset", "dataset", "model"] + list(METRICS))
        for index, entry in enumerate(result.scores):
            for model in result.config.models:
                writer.writerow([result.config.preset_name, str(index), model]
                                + [repr(entry[model][m]) for m in METRICS])


def format_summary(result: BenchmarkResult) -> str:
    """Aligned mean (SD) table, one row per model, one column per metric."""
    summary = result.summary()
    width = max(len(m) for m in result.config.models)
    header = "model".ljust(width) + "".join(f"  {m:>16}" for m in METRICS)
    lines = [header]
    for model in result.config.models:
        cells = "".join(f"  {summary[model][m][0]:.3f} ({summary[model][m][1]:.3f})"
                        .rjust(18) for m in METRICS)
        lines.append(model.ljust(width) + cells)
    return "\n".join(lines)
