"""Seeded sampling primitives and stable density helpers.

Everything here is deterministic given a Generator: the same seed yields the
same draw sequence, and spawned child generators give independent streams.
All other modules draw randomness through these wrappers.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp
from scipy.stats import invwishart

# Floor applied to sampled variances and precisions so downstream divides and
# cholesky factorizations stay finite.
VAR_FLOOR = 1e-12

# Absolute jitter ramp tried on the diagonal when a covariance cholesky fails.
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

_LOG_2PI = float(np.log(2.0 * np.pi))


def default_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """n independent child generators (stream split, not state copies)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return list(rng.spawn(n))


def sample_gamma(shape, rate, rng: np.random.Generator):
    """Gamma draw in shape/rate parameterization, floored away from zero."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0.0) or np.any(rate <= 0.0):
        raise ValueError("gamma shape and rate must be positive")
    draw = rng.gamma(shape, 1.0 / rate)
    return np.maximum(draw, VAR_FLOOR)


def sample_dirichlet(alpha, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draw; concentration entries must be positive."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1:
        raise ValueError("alpha must be a nonempty 1-d vector")
    if np.any(alpha <= 0.0):
        raise ValueError("dirichlet concentration entries must be positive")
    if alpha.size == 1:
        return np.ones(1)
    w = rng.dirichlet(alpha)
    w = np.maximum(w, 0.0)
    return w / w.sum()


def sample_truncated_normal(mean, sd, lo, hi, rng: np.random.Generator):
    """Draw from N(mean, sd^2) restricted to (lo, hi).

    Inverse-CDF sampling. Intervals that sit entirely in one tail are handled
    on the log scale (log_ndtr / ndtri_exp), so bounds tens of standard
    deviations out still produce finite in-range draws. Bounds may be +-inf.
    Shapes broadcast; scalar inputs return a scalar.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(sd <= 0.0):
        raise ValueError("sd must be positive")
    if np.any(~(lo < hi)):
        raise ValueError("require lo < hi for every cell")

    scalar = max(mean.ndim, sd.ndim, lo.ndim, hi.ndim) == 0
    mean, sd, lo, hi = np.broadcast_arrays(mean, sd, lo, hi)
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    # u in (0, 1]: keeps the log argument strictly positive in the tail path.
    u = 1.0 - rng.random(a.shape)

    z = np.empty(a.shape)
    upper = a >= 0.0          # interval in the upper tail
    lower = b <= 0.0          # interval in the lower tail
    mid = ~(upper | lower)    # interval straddles the mean

    if np.any(upper):
        z[upper] = _tail_draw(a[upper], b[upper], u[upper])
    if np.any(lower):
        z[lower] = -_tail_draw(-b[lower], -a[lower], u[lower])
    if np.any(mid):
        fa = ndtr(a[mid])
        fb = ndtr(b[mid])
        z[mid] = ndtri(fa + u[mid] * (fb - fa))

    # Clamp rounding spills back into the open interval.
    finite_hi = np.isfinite(b)
    z[finite_hi] = np.minimum(z[finite_hi], np.nextafter(b[finite_hi], -np.inf))
    finite_lo = np.isfinite(a)
    z[finite_lo] = np.maximum(z[finite_lo], np.nextafter(a[finite_lo], np.inf))

    out = mean + sd * z
    out = np.where(np.isfinite(lo), np.maximum(out, np.nextafter(lo, np.inf)), out)
    out = np.where(np.isfinite(hi), np.minimum(out, np.nextafter(hi, -np.inf)), out)
    return float(out) if scalar else out


def _tail_draw(a, b, u):
    # Standardized draw on (a, b) with 0 <= a < b, done via survival functions:
    # S(z) uniform on (S(b), S(a)].
    log_sa = log_ndtr(-a)
    with np.errstate(invalid="ignore"):
        ratio = np.where(np.isinf(b), 0.0, np.exp(log_ndtr(-b) - log_sa))
    return -ndtri_exp(log_sa + np.log(ratio + u * (1.0 - ratio)))


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower cholesky factor, retrying with a small diagonal jitter ramp."""
    for jitter in _JITTERS:
        try:
            if jitter == 0.0:
                return np.linalg.cholesky(cov)
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise ValueError("covariance is not positive semidefinite (jitter ramp exhausted)")


def _check_cov(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-8):
        raise ValueError("covariance must be symmetric")
    return cov


def sample_mvn(mean, cov, rng: np.random.Generator) -> np.ndarray:
    """Multivariate normal draw via cholesky; exact mean for a zero covariance."""
    mean = np.asarray(mean, dtype=float)
    cov = _check_cov(cov)
    if mean.shape != (cov.shape[0],):
        raise ValueError("mean length must match covariance dimension")
    if not np.any(cov):
        return mean.copy()
    chol = cholesky_with_jitter(cov)
    return mean + chol @ rng.standard_normal(mean.shape[0])


def sample_inverse_wishart(df: float, scale, rng: np.random.Generator) -> np.ndarray:
    """Inverse-Wishart draw (df, scale), returned symmetrized as (p, p)."""
    scale = _check_cov(scale)
    p = scale.shape[0]
    if df <= p - 1:
        raise ValueError(f"inverse-wishart df must exceed p - 1 = {p - 1}")
    if p == 1:
        # 1x1 case collapses to an inverse-gamma with shape df/2, rate s/2.
        s = float(scale[0, 0])
        if s <= 0.0:
            raise ValueError("scale matrix must be positive definite")
        return np.array([[s / (2.0 * sample_gamma(df / 2.0, 1.0, rng))]])
    cholesky_with_jitter(scale)  # reject non-PD scale matrices up front
    draw = np.asarray(invwishart.rvs(df, scale, random_state=rng), dtype=float)
    draw = draw.reshape(p, p)
    return (draw + draw.T) / 2.0


def mvn_logpdf(x, mean, cov):
    """Log density of N(mean, cov) at x; x may be (p,) or a batch (m, p)."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = _check_cov(cov)
    p = cov.shape[0]
    chol = cholesky_with_jitter(cov)
    dev = np.atleast_2d(x) - mean          # (m, p)
    w = solve_triangular(chol, dev.T, lower=True)
    quad = np.sum(w * w, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    out = -0.5 * (p * _LOG_2PI + logdet + quad)
    return float(out[0]) if x.ndim == 1 else out


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise categorical draws from an (m, C) matrix of probabilities."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2:
        raise ValueError("probs must be (m, C)")
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    idx = np.sum(u[:, None] >= cum, axis=1)
    return np.minimum(idx, probs.shape[1] - 1)
