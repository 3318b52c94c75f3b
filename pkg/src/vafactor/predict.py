"""Out-of-sample cause posteriors, CSMF estimation, and latent summaries.

Prediction marginalizes the latent factors by Monte Carlo: for each retained
snapshot and candidate cause c, draw eta ~ N(psi(c, x), I_K) and average the
per-draw observation likelihood prod_j P(s_j | eta). Binary and count cells
contribute normal-CDF interval masses, continuous cells a normal density at
the encoded point, and missing cells a factor of one. Everything runs in log
space so long symptom rows cannot underflow.

Per-decedent cause probabilities average the normalized per-snapshot
posteriors, which has lower variance than sampling one label per snapshot.
The sampled-label path is kept separately because the CSMF estimator is
defined over imputed label draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .data import Dataset, LatentBounds, compile_constraints
from .model import PosteriorSamples, marginal_moments

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class CodPosterior:
    """Per-decedent cause-of-death posterior."""

    probs: np.ndarray  # (m, C) rows on the simplex
    top: np.ndarray    # (m,) argmax cause, ties resolved to the lowest index


@dataclass(frozen=True)
class CsmfEstimate:
    """Posterior summary of the cause-specific mortality fractions."""

    mean: np.ndarray  # (C,) across-snapshot mean of empirical fractions
    lo: np.ndarray    # (C,) 2.5th percentile
    hi: np.ndarray    # (C,) 97.5th percentile


@dataclass(frozen=True)
class LatentSummaries:
    """Posterior mean and 95% band for E[z] and Cov(z) at one (cause, x)."""

    mean: np.ndarray     # (P,)
    mean_lo: np.ndarray  # (P,)
    mean_hi: np.ndarray  # (P,)
    cov: np.ndarray      # (P, P)
    cov_lo: np.ndarray   # (P, P)
    cov_hi: np.ndarray   # (P, P)


def log_observation_factors(means: np.ndarray, sigma: np.ndarray,
                            lo: np.ndarray, hi: np.ndarray,
                            is_point: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Log P(cell | latent mean) for every entry of a means array.

    means carries the per-draw latent location (..., P); the constraint
    arrays broadcast against it. Interval cells get the normal mass between
    their bounds (one-sided for binary, two-sided for positive counts, the
    full line for missing cells), point cells the normal density.
    """
    with np.errstate(invalid="ignore"):
        sa = (lo - means) / sigma
        sb = (hi - means) / sigma
        # Evaluate two-sided masses on whichever tail is smaller so the
        # log-CDF difference stays accurate far from the mean.
        flip = (sa + sb) > 0.0
    a = np.where(flip, -sb, sa)
    b = np.where(flip, -sa, sb)
    la = log_ndtr(a)
    lb = log_ndtr(b)
    gap = np.minimum(la - lb, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        interval = lb + np.log1p(-np.exp(gap))
        resid = (point - means) / sigma
    density = -0.5 * resid * resid - np.log(sigma) - _LOG_SQRT_2PI
    return np.where(is_point, density, interval)


def log_cause_likelihood(params, bounds: LatentBounds, x: np.ndarray, cause: int,
                         n_mc: int, rng: np.random.Generator) -> np.ndarray:
    """Per-row log estimate of P(symptom row | cause) for one snapshot.

    Averages the observation likelihood over n_mc factor draws per decedent,
    in log space: logsumexp over draws minus log(n_mc).
    """
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    m, p = bounds.lo.shape
    l, k, b = params.beta.shape[1:]
    xi = (params.beta[cause].reshape(l * k, b) @ x.T).T.reshape(m, l, k)
    lam = params.theta[cause] @ xi                       # (m, P, K)
    psi = x @ params.alpha[cause].T                      # (m, K)
    eta = psi[:, None, :] + rng.standard_normal((m, n_mc, k))
    locs = eta @ np.swapaxes(lam, 1, 2)                  # (m, n_mc, P)
    sigma = np.sqrt(params.sigma2)
    factors = log_observation_factors(locs, sigma, bounds.lo[:, None, :],
                                      bounds.hi[:, None, :],
                                      bounds.is_point[:, None, :],
                                      bounds.point[:, None, :])
    return logsumexp(factors.sum(axis=2), axis=1) - math.log(n_mc)


def _normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    """Rows of exp(logw) normalized to the simplex, underflow-safe."""
    shift = logw.max(axis=1, keepdims=True)
    safe = np.where(np.isfinite(shift), shift, 0.0)
    w = np.exp(logw - safe)
    sums = w.sum(axis=1, keepdims=True)
    # A row whose every cause underflowed to zero likelihood carries no
    # information; fall back to a flat posterior there.
    dead = sums[:, 0] == 0.0
    if np.any(dead):
        w[dead] = 1.0
        sums = w.sum(axis=1, keepdims=True)
    return w / sums


def snapshot_cause_posteriors(samples: PosteriorSamples, test: Dataset,
                              n_mc: int, rng: np.random.Generator) -> np.ndarray:
    """Per-snapshot cause posteriors for every test decedent, shape (T, m, C).

    Snapshot t weighs each cause by pi_c times the Monte-Carlo symptom
    likelihood and normalizes over causes.
    """
    if samples.n_snapshots < 1:
        raise ValueError("no posterior snapshots")
    if test.n < 1:
        raise ValueError("no test decedents")
    bounds = compile_constraints(test)
    n_causes = samples.pi.shape[1]
    out = np.empty((samples.n_snapshots, test.n, n_causes))
    for t in range(samples.n_snapshots):
        params = samples.params_at(t)
        with np.errstate(divide="ignore"):
            logpi = np.log(params.pi)
        logw = np.empty((test.n, n_causes))
        for c in range(n_causes):
            loglik = log_cause_likelihood(params, bounds, test.x, c, n_mc, rng)
            logw[:, c] = logpi[c] + loglik
        out[t] = _normalize_log_weights(logw)
    return out


def cod_posterior(samples: PosteriorSamples, test: Dataset, n_mc: int = 200,
                  rng: np.random.Generator | None = None,
                  per_snapshot: np.ndarray | None = None) -> CodPosterior:
    """Cause-of-death posterior averaged over retained snapshots."""
    if per_snapshot is None:
        if rng is None:
            rng = np.random.default_rng(0)
        per_snapshot = snapshot_cause_posteriors(samples, test, n_mc, rng)
    probs = per_snapshot.mean(axis=0)
    probs = probs / probs.sum(axis=1, keepdims=True)
    return CodPosterior(probs=probs, top=np.argmax(probs, axis=1))


def sample_test_labels(samples: PosteriorSamples, test: Dataset, n_mc: int = 200,
                       rng: np.random.Generator | None = None,
                       per_snapshot: np.ndarray | None = None) -> np.ndarray:
    """One imputed label per (snapshot, decedent), shape (T, m)."""
    if rng is None:
        rng = np.random.default_rng(0)
    if per_snapshot is None:
        per_snapshot = snapshot_cause_posteriors(samples, test, n_mc, rng)
    cdf = np.cumsum(per_snapshot, axis=2)
    u = rng.random(per_snapshot.shape[:2] + (1,))
    labels = (u > cdf).sum(axis=2)
    return np.minimum(labels, per_snapshot.shape[2] - 1)


def estimate_csmf(labels: np.ndarray, n_causes: int) -> CsmfEstimate:
    """CSMF posterior from imputed labels, one row per snapshot.

    Each snapshot contributes the empirical cause-fraction vector of its
    labels; the estimate reports the across-snapshot mean and the equal-tailed
    95% interval (widened to contain the mean in degenerate corner cases).
    """
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 2 or labels.size == 0:
        raise ValueError("labels must be a nonempty (snapshots, decedents) array")
    if labels.min() < 0 or labels.max() >= n_causes:
        raise ValueError("labels out of range")
    t, m = labels.shape
    fractions = np.empty((t, n_causes))
    for i in range(t):
        fractions[i] = np.bincount(labels[i], minlength=n_causes) / m
    mean = fractions.mean(axis=0)
    lo, hi = np.percentile(fractions, [2.5, 97.5], axis=0)
    return CsmfEstimate(mean=mean, lo=np.minimum(lo, mean), hi=np.maximum(hi, mean))


def posterior_latent_summaries(samples: PosteriorSamples, cause: int,
                               x: np.ndarray) -> LatentSummaries:
    """Posterior mean and 95% band of the latent moments at (cause, x)."""
    n_causes = samples.pi.shape[1]
    if not 0 <= cause < n_causes:
        raise ValueError(f"cause must be in [0, {n_causes})")
    x = np.asarray(x, dtype=float)
    means, covs = [], []
    for t in range(samples.n_snapshots):
        mu, cov = marginal_moments(samples.params_at(t), cause, x)
        means.append(mu)
        covs.append(cov)
    means = np.stack(means)
    covs = np.stack(covs)
    m_lo, m_hi = np.percentile(means, [2.5, 97.5], axis=0)
    c_lo, c_hi = np.percentile(covs, [2.5, 97.5], axis=0)
    return LatentSummaries(mean=means.mean(axis=0), mean_lo=m_lo, mean_hi=m_hi,
                           cov=covs.mean(axis=0), cov_lo=c_lo, cov_hi=c_hi)
