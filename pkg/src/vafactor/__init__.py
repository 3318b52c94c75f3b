"""Covariate-dependent latent factor model for cause-of-death assignment.

The package fits a hierarchical Bayesian factor model in which both the
latent factor loadings and the factor means vary with a cause label and
observed covariates, links mixed binary/count/continuous/categorical
questionnaire answers to the latent Gaussian layer, and classifies deaths
with unknown causes semi-supervised. It ships a Gibbs sampler, Monte-Carlo
out-of-sample prediction, cause-specific mortality fraction estimation, a
simulation suite, evaluation metrics, a naive Bayes baseline, and a CLI.
"""

from .bench import BenchConfig, BenchmarkResult, run_benchmark
from .data import Dataset, SymptomSpec, compile_constraints, fit_scales
from .gibbs import ChainConfig, run_chain, shrinkage_diagnostic
from .metrics import acc1, acc_csmf, ccc, yules_q
from .model import Hyperparameters, ModelState, PosteriorSamples, marginal_moments
from .nbc import NbcModel, nbc_fit, nbc_predict, nbc_predict_dataset
from .predict import (CodPosterior, CsmfEstimate, cod_posterior, estimate_csmf,
                      posterior_latent_summaries, sample_test_labels)
from .simulate import PRESETS, SimConfig, generate_dataset, preset, split_train_test

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "BenchmarkResult", "run_benchmark",
    "Dataset", "SymptomSpec", "compile_constraints", "fit_scales",
    "ChainConfig", "run_chain", "shrinkage_diagnostic",
    "acc1", "acc_csmf", "ccc", "yules_q",
    "Hyperparameters", "ModelState", "PosteriorSamples", "marginal_moments",
    "NbcModel", "nbc_fit", "nbc_predict", "nbc_predict_dataset",
    "CodPosterior", "CsmfEstimate", "cod_posterior", "estimate_csmf",
    "posterior_latent_summaries", "sample_test_labels",
    "PRESETS", "SimConfig", "generate_dataset", "preset", "split_train_test",
    "__version__",
]
