"""Accuracy and association metrics for cause-of-death predictions.

Individual-level accuracy is the top-cause hit rate, with a chance-corrected
variant that rescales so uniform guessing scores zero. Population-level
accuracy compares cause-fraction vectors, normalized so that putting all
predicted mass on the rarest true cause scores exactly zero. Yule's Q scores
the association in a 2x2 symptom co-occurrence table.
"""
from __future__ import annotations

import numpy as np

SIMPLEX_TOL = 1e-6


def _as_simplex(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"{name} must be a vector of at least two fractions")
    if np.any(v < -SIMPLEX_TOL) or abs(v.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{name} must lie on the probability simplex")
    v = np.clip(v, 0.0, None)
    return v / v.sum()


def acc1(true_labels, predicted) -> float:
    """Fraction of decedents whose top predicted cause is the true one."""
    true_labels = np.asarray(true_labels)
    predicted = np.asarray(predicted)
    if true_labels.shape != predicted.shape or true_labels.ndim != 1:
        raise ValueError("label vectors must share one nonempty shape")
    if true_labels.size == 0:
        raise ValueError("no labels to score")
    return float(np.mean(true_labels == predicted))


def acc_csmf(true_csmf, pred_csmf) -> float:
    """CSMF accuracy: 1 - total variation error over its worst-case value.

    The worst case puts all predicted mass on the least common true cause,
    giving an absolute-error sum of 2(1 - min(true)); that scenario scores 0
    and a perfect match scores 1.
    """
    t = _as_simplex(true_csmf, "true_csmf")
    p = _as_simplex(pred_csmf, "pred_csmf")
    if t.shape != p.shape:
        raise ValueError("fraction vectors must have equal length")
    worst = 2.0 * (1.0 - t.min())
    if worst <= 0.0:
        raise ValueError("true fractions concentrate on one cause; accuracy undefined")
    return float(1.0 - np.abs(t - p).sum() / worst)


def ccc(acc1_value: float, n_causes: int) -> float:
    """Chance-corrected accuracy: 0 at uniform guessing, 1 when perfect."""
    if n_causes < 2:
        raise ValueError("chance correction needs at least two causes")
    chance = 1.0 / n_causes
    return (acc1_value - chance) / (1.0 - chance)


def yules_q(a: float, b: float, c: float, d: float) -> float:
    """Yule's Q association for the 2x2 table [[a, b], [c, d]]."""
    if min(a, b, c, d) < 0:
        raise ValueError("table counts must be nonnegative")
    concordant = a * d
    discordant = b * c
    if concordant + discordant == 0:
        raise ValueError("Yule's Q undefined when both diagonals vanish")
    return (concordant - discordant) / (concordant + discordant)
