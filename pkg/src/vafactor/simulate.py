"""Synthetic verbal-autopsy generators and train/test splitting.

Nine named presets (a through g3) cross three axes: whether the latent mean
and covariance are shared across causes or cause-specific, whether either
depends on a binary covariate, and whether the observed columns are binary,
mixed, or continuous. The generator draws everything structural before the
link step, so presets that differ only in data type (the g triplet) share
identical latent data at a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, SymptomSpec
from .samplers import default_rng

MEAN_STRUCTURES = ("cause-specific", "common")
COV_STRUCTURES = ("cause-specific", "common")
COV_DEPENDENCE = ("independent", "dependent")
DATA_TYPES = ("binary", "mixed", "continuous")

_COV_RANK = 3          # factors behind each dependent covariance draw
_COV_NOISE = 0.5       # diagonal bump before normalizing to unit variance
_MEAN_SD = 0.35        # sd of the latent symptom means
_SHIFT_SD = 0.8        # sd of the additive covariate mean shift


@dataclass(frozen=True)
class SimConfig:
    """Flags and scale for one synthetic-data configuration."""

    mean_structure: str       # "cause-specific" or "common"
    mean_covariate: bool      # mean shifts with the binary covariate
    cov_structure: str        # "cause-specific" or "common"
    cov_dependence: str       # "independent" or "dependent"
    cov_covariate: bool       # covariance redrawn per covariate level
    data_type: str            # "binary", "mixed", or "continuous"
    n: int = 928
    n_symptoms: int = 21
    n_causes: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.mean_structure not in MEAN_STRUCTURES:
            raise ValueError(f"mean_structure must be one of {MEAN_STRUCTURES}")
        if self.cov_structure not in COV_STRUCTURES:
            raise ValueError(f"cov_structure must be one of {COV_STRUCTURES}")
        if self.cov_dependence not in COV_DEPENDENCE:
            raise ValueError(f"cov_dependence must be one of {COV_DEPENDENCE}")
        if self.data_type not in DATA_TYPES:
            raise ValueError(f"data_type must be one of {DATA_TYPES}")
        if self.cov_dependence == "independent" and self.cov_covariate:
            raise ValueError("an independent covariance cannot vary with the covariate")
        if self.n < 1 or self.n_symptoms < 1 or self.n_causes < 1:
            raise ValueError("n, n_symptoms, and n_causes must be positive")

    @property
    def has_covariate(self) -> bool:
        return self.mean_covariate or self.cov_covariate

    @property
    def n_levels(self) -> int:
        return 2 if self.has_covariate else 1


def _flags(mean, mean_v, cov, dep, cov_v, data):
    return dict(mean_structure=mean, mean_covariate=mean_v, cov_structure=cov,
                cov_dependence=dep, cov_covariate=cov_v, data_type=data)


PRESETS = {
    "a": _flags("cause-specific", False, "common", "independent", False, "binary"),
    "b": _flags("cause-specific", False, "common", "dependent", False, "binary"),
    "c": _flags("common", False, "cause-specific", "dependent", False, "binary"),
    "d": _flags("cause-specific", False, "cause-specific", "dependent", False, "binary"),
    "e": _flags("cause-specific", True, "common", "independent", False, "binary"),
    "f": _flags("common", False, "cause-specific", "dependent", True, "binary"),
    "g1": _flags("cause-specific", True, "cause-specific", "dependent", True, "binary"),
    "g2": _flags("cause-specific", True, "cause-specific", "dependent", True, "mixed"),
    "g3": _flags("cause-specific", True, "cause-specific", "dependent", True, "continuous"),
}


def preset(name: str, n: int = 928, n_symptoms: int = 21, n_causes: int = 4,
           seed: int = 0) -> SimConfig:
    """Named configuration from the preset table, at the requested scale."""
    if name not in PRESETS:
        known = ", ".join(PRESETS)
        raise ValueError(f"unknown preset {name!r} (expected one of: {known})")
    return SimConfig(n=n, n_symptoms=n_symptoms, n_causes=n_causes, seed=seed,
                     **PRESETS[name])


@dataclass(frozen=True)
class GroundTruth:
    """Generating parameters kept alongside a synthetic dataset."""

    means: np.ndarray    # (n_levels, C, P) latent means
    covs: np.ndarray     # (n_levels, C, P, P) latent covariances, unit diagonal
    latent: np.ndarray   # (n, P) latent draws before the observation link


def _draw_covariances(config: SimConfig, rng) -> np.ndarray:
    """Latent covariances as (n_levels, C, P, P), unit diagonal throughout.

    A dependent draw is a rank-_COV_RANK factor covariance rescaled to unit
    variances, so only the correlation pattern distinguishes causes; this
    keeps single-symptom margins comparable across presets.
    """
    p = config.n_symptoms
    c = config.n_causes
    if config.cov_dependence == "independent":
        eye = np.eye(p)
        return np.broadcast_to(eye, (config.n_levels, c, p, p)).copy()
    n_groups = c if config.cov_structure == "cause-specific" else 1
    n_draws = config.n_levels if config.cov_covariate else 1
    covs = np.empty((n_draws, n_groups, p, p))
    for level in range(n_draws):
        for g in range(n_groups):
            lam = rng.standard_normal((p, _COV_RANK))
            raw = lam @ lam.T + _COV_NOISE * np.eye(p)
            d = np.sqrt(np.diag(raw))
            covs[level, g] = raw / np.outer(d, d)
    out = np.empty((config.n_levels, c, p, p))
    for level in range(config.n_levels):
        for cause in range(c):
            out[level, cause] = covs[level if config.cov_covariate else 0,
                                     cause if n_groups == c else 0]
    return out


def _draw_means(config: SimConfig, rng) -> np.ndarray:
    p, c = config.n_symptoms, config.n_causes
    if config.mean_structure == "common":
        base = np.tile(_MEAN_SD * rng.standard_normal(p), (c, 1))
    else:
        base = _MEAN_SD * rng.standard_normal((c, p))
    means = np.empty((config.n_levels, c, p))
    means[0] = base
    if config.n_levels == 2:
        shift = rng.normal(0.0, _SHIFT_SD, size=(c, p)) if config.mean_covariate else 0.0
        means[1] = base + shift
    return means


def _symptom_specs(config: SimConfig) -> tuple[SymptomSpec, ...]:
    p = config.n_symptoms
    if config.data_type == "binary":
        kinds = ["binary"] * p
    elif config.data_type == "continuous":
        kinds = ["continuous-identity"] * p
    else:
        n_binary = math.ceil(p / 2)
        kinds = ["binary"] * n_binary + ["continuous-identity"] * (p - n_binary)
    return tuple(SymptomSpec(f"s{j + 1:02d}", kind) for j, kind in enumerate(kinds))


def generate_dataset(config: SimConfig,
                     rng: np.random.Generator | None = None,
                     ) -> tuple[Dataset, GroundTruth]:
    """One fully labeled synthetic dataset plus its generating parameters.

    Draw order is fixed and independent of data_type: covariate, causes,
    means, covariances, then the standard-normal innovations behind the
    latent table. The observation link is applied last.
    """
    if rng is None:
        rng = default_rng(config.seed)
    n, p, c = config.n, config.n_symptoms, config.n_causes

    if config.has_covariate:
        level = rng.integers(0, 2, size=n)
        x = np.column_stack([np.ones(n), level.astype(float)])
    else:
        level = np.zeros(n, dtype=int)
        x = np.ones((n, 1))
    y = rng.integers(0, c, size=n)

    means = _draw_means(config, rng)
    covs = _draw_covariances(config, rng)
    chols = np.linalg.cholesky(covs)

    eps = rng.standard_normal((n, p))
    latent = means[level, y] + (chols[level, y] @ eps[:, :, None])[..., 0]

    specs = _symptom_specs(config)
    values = latent.copy()
    for j, spec in enumerate(specs):
        if spec.kind == "binary":
            values[:, j] = (latent[:, j] > 0.0).astype(float)

    data = Dataset(specs, values, x, y, n_causes=c,
                   ids=tuple(f"r{i:04d}" for i in range(n)))
    return data, GroundTruth(means=means, covs=covs, latent=latent)


@dataclass(frozen=True)
class SplitResult:
    """Disjoint train/test partition with the test labels held out."""

    train: Dataset
    test: Dataset              # labels hidden (-1 everywhere)
    test_labels: np.ndarray    # true labels of the test rows, for scoring


def _take_rows(data: Dataset, rows: np.ndarray) -> Dataset:
    ids = None if data.ids is None else tuple(data.ids[i] for i in rows)
    return replace(data, values=data.values[rows], x=data.x[rows],
                   y=data.y[rows], ids=ids)


def split_train_test(data: Dataset, test_fraction: float,
                     rng: np.random.Generator | None = None,
                     seed: int = 0) -> SplitResult:
    """Random row partition; the test split is ceil(n * test_fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    if rng is None:
        rng = default_rng(seed)
    n = data.n
    n_test = math.ceil(n * test_fraction)
    if n_test >= n:
        raise ValueError("test_fraction leaves no training rows")
    perm = rng.permutation(n)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    test = _take_rows(data, test_rows)
    return SplitResult(train=_take_rows(data, train_rows),
                       test=test.with_labels_hidden(),
                       test_labels=test.y.copy())
