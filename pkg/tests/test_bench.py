"""Tests for the benchmark harness on deliberately tiny problems."""
import numpy as np
import pytest

from vafactor import bench
from vafactor.data import fit_scales
from vafactor.gibbs import ChainConfig, run_chain
from vafactor.metrics import acc1, acc_csmf
from vafactor.model import Hyperparameters
from vafactor.predict import (cod_posterior, estimate_csmf, sample_test_labels,
                              snapshot_cause_posteriors)
from vafactor.samplers import default_rng
from vafactor.simulate import generate_dataset, preset, split_train_test

TINY = dict(n=60, n_symptoms=4, n_causes=2, iterations=60, burn_in=30,
            thinning=3, n_factors=2, n_basis=2)


def test_benchmark_scores_every_model_and_metric():
    config = bench.BenchConfig(preset_name="a", n_datasets=2, seed=3, **TINY)
    result = bench.run_benchmark(config)
    assert len(result.scores) == 2
    for entry in result.scores:
        assert set(entry) == set(bench.MODELS)
        for model in bench.MODELS:
            assert set(entry[model]) == set(bench.METRICS)
            assert 0.0 <= entry[model]["acc1"] <= 1.0
            assert entry[model]["acc_csmf"] <= 1.0
            assert -1.0 <= entry[model]["ccc"] <= 1.0


def test_benchmark_is_deterministic_and_job_count_invariant():
    config = bench.BenchConfig(preset_name="a", n_datasets=2, seed=11,
                               models=("farva", "nbc"), **TINY)
    serial = bench.run_benchmark(config)
    repeat = bench.run_benchmark(config)
    assert serial.scores == repeat.scores
    pooled = bench.run_benchmark(bench.BenchConfig(
        preset_name="a", n_datasets=2, seed=11, models=("farva", "nbc"),
        jobs=2, **TINY))
    assert serial.scores == pooled.scores


def test_single_dataset_summary_has_zero_sd():
    config = bench.BenchConfig(preset_name="a", n_datasets=1, seed=5,
                               models=("nbc",), **TINY)
    result = bench.run_benchmark(config)
    summary = result.summary()
    for metric in bench.METRICS:
        assert summary["nbc"][metric][1] == 0.0
    text = bench.format_summary(result)
    assert "nbc" in text and "(0.000)" in text
    assert text.splitlines()[0].startswith("model")


def test_scores_file_layout(tmp_path):
    config = bench.BenchConfig(preset_name="a", n_datasets=2, seed=7,
                               models=("nbc",), **TINY)
    result = bench.run_benchmark(config)
    path = tmp_path / "scores.csv"
    bench.write_scores(path, result)
    lines = path.read_text().splitlines()
    assert lines[0] == "preset,dataset,model,acc1,acc_csmf,ccc"
    assert len(lines) == 1 + 2 * 1
    assert lines[1].startswith("a,0,nbc,")


def test_config_validation():
    with pytest.raises(ValueError, match="unknown models"):
        bench.BenchConfig(preset_name="a", n_datasets=1, models=("svm",))
    with pytest.raises(ValueError, match="unknown preset"):
        bench.BenchConfig(preset_name="z", n_datasets=1)
    with pytest.raises(ValueError):
        bench.BenchConfig(preset_name="a", n_datasets=0)
    with pytest.raises(ValueError):
        bench.BenchConfig(preset_name="a", n_datasets=1, jobs=0)


def test_farva_scores_match_direct_prediction_pipeline():
    """The harness must reproduce the chain+prediction pipeline run by hand."""
    config = bench.BenchConfig(preset_name="a", n_datasets=1, seed=13,
                               models=("farva",), **TINY)
    result = bench.run_benchmark(config)
    task = bench._tasks(config)[0]

    data, _ = generate_dataset(preset("a", n=60, n_symptoms=4, n_causes=2,
                                      seed=task.data_seed))
    split = split_train_test(data, 0.25, seed=task.split_seed)
    train = split.train.with_scales(fit_scales(split.train))
    test = split.test.with_scales(train.scales)
    hyper = Hyperparameters.defaults(n_symptoms=4, n_causes=2, n_covariates=1,
                                     n_factors=2, n_basis=2)
    samples = run_chain(train, hyper, ChainConfig(iterations=60, burn_in=30,
                                                  thinning=3,
                                                  seed=task.chain_seed))
    rng = default_rng(task.predict_seed)
    per_snapshot = snapshot_cause_posteriors(samples, test, 200, rng)
    posterior = cod_posterior(samples, test, per_snapshot=per_snapshot)
    labels = sample_test_labels(samples, test, rng=rng,
                                per_snapshot=per_snapshot)
    truth = split.test_labels
    true_csmf = np.bincount(truth, minlength=2) / len(truth)
    assert result.scores[0]["farva"]["acc1"] == acc1(truth, posterior.top)
    assert result.scores[0]["farva"]["acc_csmf"] == acc_csmf(
        true_csmf, estimate_csmf(labels, 2).mean)
