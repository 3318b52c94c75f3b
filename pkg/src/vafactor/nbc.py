"""Naive Bayes baseline over the binary symptom columns.

Fits Laplace-smoothed per-cause Bernoulli rates from the labeled rows and
scores test rows in log space, skipping missing cells. Non-binary columns are
ignored entirely; this matches the constraint that the comparison baseline
can use only binary data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class NbcModel:
    """Fitted rate table with the dataset columns it applies to."""

    rates: np.ndarray         # (C, J) smoothed P(s_j = 1 | cause)
    prior: np.ndarray         # (C,) labeled-row cause frequencies
    columns: tuple[int, ...]  # expanded-column indices of the binary symptoms

    @property
    def n_causes(self) -> int:
        return self.prior.shape[0]


def binary_columns(data: Dataset) -> tuple[int, ...]:
    return tuple(j for j, spec in enumerate(data.specs) if spec.kind == "binary")


def nbc_fit(train: Dataset, smoothing: float = 1.0) -> NbcModel:
    """Estimate per-cause symptom rates and prior cause frequencies.

    rate[c, j] = (ones + smoothing) / (observed + 2 smoothing) over labeled
    rows of cause c, so rates stay strictly inside (0, 1).
    """
    if smoothing <= 0.0:
        raise ValueError("smoothing must be positive")
    labeled = train.y >= 0
    if not np.any(labeled):
        raise ValueError("naive Bayes needs at least one labeled row")
    cols = binary_columns(train)
    values = train.values[np.ix_(labeled, np.array(cols, dtype=int))] \
        if cols else np.empty((int(labeled.sum()), 0))
    y = train.y[labeled]
    n_causes = train.n_causes
    observed = ~np.isnan(values)
    ones = np.where(observed, values, 0.0)
    rates = np.empty((n_causes, len(cols)))
    prior = np.empty(n_causes)
    for c in range(n_causes):
        rows = y == c
        prior[c] = rows.mean()
        n_obs = observed[rows].sum(axis=0)
        n_one = ones[rows].sum(axis=0)
        rates[c] = (n_one + smoothing) / (n_obs + 2.0 * smoothing)
    return NbcModel(rates=rates, prior=prior, columns=cols)


def nbc_predict(model: NbcModel, rows: np.ndarray) -> np.ndarray:
    """Posterior cause simplices for binary rows with NaN marking missing.

    rows holds just the binary columns, in model.columns order; a single
    (J,) row returns a (C,) simplex.
    """
    rows = np.asarray(rows, dtype=float)
    single = rows.ndim == 1
    if single:
        rows = rows[None, :]
    if rows.shape[1] != model.rates.shape[1]:
        raise ValueError("row width does not match the fitted symptom count")
    observed = ~np.isnan(rows)
    ones = np.where(observed, rows, 0.0)
    zeros = np.where(observed, 1.0 - rows, 0.0)
    with np.errstate(divide="ignore"):
        logpost = np.log(model.prior) + ones @ np.log(model.rates).T \
            + zeros @ np.log(1.0 - model.rates).T
    logpost -= logpost.max(axis=1, keepdims=True)
    probs = np.exp(logpost)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def nbc_predict_dataset(model: NbcModel, test: Dataset) -> np.ndarray:
    """Posterior simplices for every row of a dataset, shape (m, C)."""
    cols = np.array(model.columns, dtype=int)
    rows = test.values[:, cols] if cols.size else np.empty((test.n, 0))
    return nbc_predict(model, rows)
