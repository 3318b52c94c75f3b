"""Tests for the scoring metrics."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vafactor import metrics


def test_acc1_counts_exact_matches():
    assert metrics.acc1([0, 1, 2, 3], [0, 1, 2, 3]) == 1.0
    assert metrics.acc1([0, 1, 2, 3], [0, 1, 0, 0]) == 0.5
    assert metrics.acc1([1], [0]) == 0.0


def test_acc1_chance_level_on_permuted_labels():
    rng = np.random.default_rng(0)
    true = np.repeat(np.arange(4), 500)
    hits = [metrics.acc1(true, rng.permutation(true)) for _ in range(50)]
    assert abs(np.mean(hits) - 0.25) < 0.01


def test_acc1_rejects_bad_shapes():
    with pytest.raises(ValueError):
        metrics.acc1([0, 1], [0])
    with pytest.raises(ValueError):
        metrics.acc1([], [])


def test_acc_csmf_hand_values():
    assert metrics.acc_csmf([0.5, 0.3, 0.2], [0.5, 0.3, 0.2]) == 1.0
    got = metrics.acc_csmf([0.5, 0.3, 0.2], [0.2, 0.3, 0.5])
    assert np.isclose(got, 0.625)
    worst = metrics.acc_csmf([0.5, 0.3, 0.2], [0.0, 0.0, 1.0])
    assert np.isclose(worst, 0.0)


def test_acc_csmf_validation():
    with pytest.raises(ValueError):
        metrics.acc_csmf([0.7, 0.7], [0.5, 0.5])
    with pytest.raises(ValueError):
        metrics.acc_csmf([0.5, 0.5], [0.6, 0.3])
    with pytest.raises(ValueError):
        metrics.acc_csmf([0.5, 0.3, 0.2], [0.5, 0.5])
    assert np.isclose(metrics.acc_csmf([1.0, 0.0], [0.5, 0.5]), 0.5)
    # rounding within tolerance is renormalized, not rejected
    assert metrics.acc_csmf([0.5, 0.5 + 5e-7], [0.5, 0.5]) > 0.999


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
       st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
       st.randoms(use_true_random=False))
def test_acc_csmf_permutation_invariance_and_self_score(raw_t, raw_p, pyrandom):
    size = min(len(raw_t), len(raw_p))
    t = np.array(raw_t[:size]) / np.sum(raw_t[:size])
    p = np.array(raw_p[:size]) / np.sum(raw_p[:size])
    perm = np.arange(size)
    pyrandom.shuffle(perm)
    assert np.isclose(metrics.acc_csmf(t[perm], p[perm]), metrics.acc_csmf(t, p))
    assert np.isclose(metrics.acc_csmf(t, t), 1.0)


def test_ccc_values():
    assert metrics.ccc(0.25, 4) == 0.0
    assert metrics.ccc(1.0, 4) == 1.0
    assert np.isclose(metrics.ccc(0.5, 4), 1.0 / 3.0)
    assert metrics.ccc(0.0, 2) == -1.0
    with pytest.raises(ValueError):
        metrics.ccc(0.5, 1)


def test_yules_q_values():
    assert metrics.yules_q(5, 0, 3, 2) == 1.0
    assert metrics.yules_q(5, 2, 0, 3) == 1.0
    assert metrics.yules_q(2, 4, 1, 2) == 0.0
    assert np.isclose(metrics.yules_q(30, 10, 10, 30), 0.8)
    with pytest.raises(ValueError):
        metrics.yules_q(1, 0, 0, 0)
    with pytest.raises(ValueError):
        metrics.yules_q(-1, 1, 1, 1)


@given(st.tuples(st.integers(0, 50), st.integers(1, 50),
                 st.integers(1, 50), st.integers(0, 50)))
def test_yules_q_column_swap_flips_sign(table):
    a, b, c, d = table
    assert np.isclose(metrics.yules_q(a, b, c, d), -metrics.yules_q(b, a, d, c))
    assert -1.0 <= metrics.yules_q(a, b, c, d) <= 1.0
