"""Model containers and covariate-dependent factor algebra.

For cause c and covariate vector x the latent row follows

    z = lam(c, x) @ eta + noise,   eta ~ N(psi(c, x), I_K)

with lam(c, x) = theta[c] @ xi(c, x). The (L, K) basis matrix xi and the
(K,) factor mean psi are linear in x: xi[l, k] = beta[c, l, k] . x and
psi[k] = alpha[c, k] . x. Rows of theta shrink toward a shared delta under a
per-element gamma / multiplicative-gamma precision ladder, which orders the
basis columns by relevance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import samplers
from .data import Dataset, LatentBounds, compile_constraints


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed prior settings for one model fit."""

    cause_conc: np.ndarray        # (C,) dirichlet concentration over causes
    n_factors: int                # K
    n_basis: int                  # L
    phi_gamma: float              # phi_jl ~ Ga(g/2, g/2)
    mgp_a1: float                 # first column multiplier shape, Ga(a1, 1)
    mgp_a2: float                 # later column multiplier shapes, Ga(a2, 1), > 1
    coef_mean0: np.ndarray        # (B,) prior mean of mu_beta
    coef_mean_cov0: np.ndarray    # (B, B)
    coef_iw_df: float             # df of IW prior on sigma_beta
    coef_iw_scale: np.ndarray     # (B, B)
    factor_mean0: np.ndarray      # (B,) prior mean of mu_alpha
    factor_mean_cov0: np.ndarray  # (B, B)
    factor_iw_df: float
    factor_iw_scale: np.ndarray
    noise_shape: float = 1.0      # sigma_j^2 ~ InvGamma(shape, rate), free columns
    noise_rate: float = 1.0

    def __post_init__(self):
        conc = np.asarray(self.cause_conc, dtype=float)
        if conc.ndim != 1 or conc.size < 1 or np.any(conc <= 0.0):
            raise ValueError("cause_conc must be a positive vector")
        if self.n_factors < 1 or self.n_basis < 1:
            raise ValueError("n_factors and n_basis must be >= 1")
        if self.phi_gamma <= 0.0 or self.mgp_a1 <= 0.0:
            raise ValueError("phi_gamma and mgp_a1 must be positive")
        if self.mgp_a2 <= 1.0:
            raise ValueError("mgp_a2 must exceed 1 so later columns shrink harder")
        if self.noise_shape <= 0.0 or self.noise_rate <= 0.0:
            raise ValueError("noise prior parameters must be positive")
        b = np.asarray(self.coef_mean0, dtype=float).shape[0]
        for name in ("coef_mean_cov0", "coef_iw_scale", "factor_mean_cov0", "factor_iw_scale"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (b, b):
                raise ValueError(f"{name} must be ({b}, {b})")
            if not np.allclose(m, m.T):
                raise ValueError(f"{name} must be symmetric")
        if self.coef_iw_df <= b - 1 or self.factor_iw_df <= b - 1:
            raise ValueError(f"inverse-wishart dfs must exceed B - 1 = {b - 1}")
        object.__setattr__(self, "cause_conc", conc)

    @property
    def n_causes(self) -> int:
        return self.cause_conc.shape[0]

    @property
    def n_covariates(self) -> int:
        return np.asarray(self.coef_mean0).shape[0]

    @classmethod
    def defaults(cls, n_symptoms: int, n_causes: int, n_covariates: int = 1,
                 n_factors: int | None = None, n_basis: int | None = None,
                 ) -> "Hyperparameters":
        """Weakly-informative default prior for a P-column, C-cause problem."""
        b = n_covariates
        return cls(
            cause_conc=np.full(n_causes, 1.0 / n_causes),
            n_factors=n_factors if n_factors is not None else min(15, n_symptoms),
            n_basis=n_basis if n_basis is not None else min(10, n_symptoms),
            phi_gamma=3.0,
            mgp_a1=2.0,
            mgp_a2=3.0,
            coef_mean0=np.zeros(b),
            coef_mean_cov0=np.eye(b),
            coef_iw_df=float(b + 2),
            coef_iw_scale=np.eye(b),
            factor_mean0=np.zeros(b),
            factor_mean_cov0=np.eye(b),
            factor_iw_df=float(b + 2),
            factor_iw_scale=np.eye(b),
            noise_shape=1.0,
            noise_rate=1.0,
        )


@dataclass
class ModelState:
    """Mutable sampler state for one chain."""

    theta: np.ndarray        # (C, P, L) basis-to-symptom weights
    delta: np.ndarray        # (P, L) shared shrinkage target of theta
    phi: np.ndarray          # (P, L) elementwise precisions
    mgp: np.ndarray          # (L,) multiplicative gamma increments
    tau: np.ndarray          # (L,) cumulative precisions, cumprod(mgp)
    beta: np.ndarray         # (C, L, K, B) basis regression coefficients
    mu_beta: np.ndarray      # (L, K, B)
    sigma_beta: np.ndarray   # (L, K, B, B)
    alpha: np.ndarray        # (C, K, B) factor-mean regression coefficients
    mu_alpha: np.ndarray     # (K, B)
    sigma_alpha: np.ndarray  # (K, B, B)
    sigma2: np.ndarray       # (P,) latent noise variances
    pi: np.ndarray           # (C,) cause fractions
    z: np.ndarray            # (n, P) latent observations
    eta: np.ndarray          # (n, K) latent factors
    y: np.ndarray            # (n,) current labels, unknown rows hold imputations

    @property
    def shapes(self) -> tuple[int, int, int, int, int, int]:
        c, p, l = self.theta.shape
        k = self.eta.shape[1]
        b = self.beta.shape[3]
        return self.z.shape[0], p, c, k, l, b

    def params(self) -> "SnapshotParams":
        return SnapshotParams(theta=self.theta, beta=self.beta, alpha=self.alpha,
                              sigma2=self.sigma2, pi=self.pi)


@dataclass(frozen=True)
class SnapshotParams:
    """The parameter subset prediction needs from one retained draw."""

    theta: np.ndarray   # (C, P, L)
    beta: np.ndarray    # (C, L, K, B)
    alpha: np.ndarray   # (C, K, B)
    sigma2: np.ndarray  # (P,)
    pi: np.ndarray      # (C,)


# ------------------------------------------------------------- algebra

def basis_matrix(params, cause: int, x: np.ndarray) -> np.ndarray:
    """xi(cause, x): the (L, K) covariate-dependent basis weights."""
    x = np.asarray(x, dtype=float)
    return np.einsum("lkb,b->lk", params.beta[cause], x)


def factor_mean(params, cause: int, x: np.ndarray) -> np.ndarray:
    """psi(cause, x): the (K,) prior mean of the latent factors."""
    x = np.asarray(x, dtype=float)
    return params.alpha[cause] @ x


def loadings(params, cause: int, x: np.ndarray) -> np.ndarray:
    """lam(cause, x) = theta[cause] @ xi(cause, x), shape (P, K)."""
    return params.theta[cause] @ basis_matrix(params, cause, x)


def marginal_moments(params, cause: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of a latent row with eta integrated out.

    mean = lam psi, cov = lam lam' + diag(sigma2); cov - diag(sigma2) has rank
    at most K.
    """
    lam = loadings(params, cause, x)
    mean = lam @ factor_mean(params, cause, x)
    cov = lam @ lam.T + np.diag(params.sigma2)
    return mean, cov


def row_fitted_means(state: ModelState, x: np.ndarray, rows=None) -> np.ndarray:
    """Per-row fitted latent means lam(y_i, x_i) @ eta_i, vectorized."""
    if rows is None:
        rows = slice(None)
    y = state.y[rows]
    xr = x[rows]
    eta = state.eta[rows]
    be = state.beta[y]            # (m, L, K, B)
    th = state.theta[y]           # (m, P, L)
    m, l, k, b = be.shape
    xi = (be.reshape(m, l * k, b) @ xr[:, :, None]).reshape(m, l, k)
    w = (xi @ eta[:, :, None])[..., 0]                        # (m, L)
    return (th @ w[:, :, None])[..., 0]


# ------------------------------------------------------------ initialization

def init_state(data: Dataset, hyper: Hyperparameters, rng: np.random.Generator,
               bounds: LatentBounds | None = None) -> ModelState:
    """Draw every parameter from its prior; z honors each cell's constraint."""
    if hyper.n_causes < data.n_causes:
        raise ValueError("hyperparameters cover fewer causes than the dataset")
    if hyper.n_covariates != data.n_covariates:
        raise ValueError("covariate dimension mismatch between data and hyperparameters")
    if bounds is None:
        bounds = compile_constraints(data)
    n, p = data.values.shape
    c, k, l, b = hyper.n_causes, hyper.n_factors, hyper.n_basis, hyper.n_covariates

    mgp = np.empty(l)
    mgp[0] = samplers.sample_gamma(hyper.mgp_a1, 1.0, rng)
    for h in range(1, l):
        mgp[h] = samplers.sample_gamma(hyper.mgp_a2, 1.0, rng)
    tau = np.cumprod(mgp)

    g = hyper.phi_gamma
    phi = samplers.sample_gamma(np.full((p, l), g / 2.0), np.full((p, l), g / 2.0), rng)
    sd = 1.0 / np.sqrt(phi * tau)
    delta = rng.standard_normal((p, l)) * sd
    theta = delta + rng.standard_normal((c, p, l)) * sd

    sigma_beta = np.empty((l, k, b, b))
    mu_beta = np.empty((l, k, b))
    beta = np.empty((c, l, k, b))
    for li in range(l):
        for ki in range(k):
            sigma_beta[li, ki] = samplers.sample_inverse_wishart(
                hyper.coef_iw_df, hyper.coef_iw_scale, rng)
            mu_beta[li, ki] = samplers.sample_mvn(
                hyper.coef_mean0, hyper.coef_mean_cov0, rng)
            for ci in range(c):
                beta[ci, li, ki] = samplers.sample_mvn(
                    mu_beta[li, ki], sigma_beta[li, ki], rng)

    sigma_alpha = np.empty((k, b, b))
    mu_alpha = np.empty((k, b))
    alpha = np.empty((c, k, b))
    for ki in range(k):
        sigma_alpha[ki] = samplers.sample_inverse_wishart(
            hyper.factor_iw_df, hyper.factor_iw_scale, rng)
        mu_alpha[ki] = samplers.sample_mvn(
            hyper.factor_mean0, hyper.factor_mean_cov0, rng)
        for ci in range(c):
            alpha[ci, ki] = samplers.sample_mvn(mu_alpha[ki], sigma_alpha[ki], rng)

    sigma2 = np.ones(p)
    free = ~bounds.fixed_noise
    if np.any(free):
        m = int(free.sum())
        sigma2[free] = 1.0 / samplers.sample_gamma(
            np.full(m, hyper.noise_shape), np.full(m, hyper.noise_rate), rng)

    pi = samplers.sample_dirichlet(hyper.cause_conc, rng)

    y = data.y.copy()
    unknown = y < 0
    if np.any(unknown):
        y[unknown] = rng.integers(0, c, size=int(unknown.sum()))

    psi = np.einsum("nkb,nb->nk", alpha[y], data.x)
    eta = psi + rng.standard_normal((n, k))

    state = ModelState(theta=theta, delta=delta, phi=phi, mgp=mgp, tau=tau,
                       beta=beta, mu_beta=mu_beta, sigma_beta=sigma_beta,
                       alpha=alpha, mu_alpha=mu_alpha, sigma_alpha=sigma_alpha,
                       sigma2=sigma2, pi=pi, z=np.zeros((n, p)), eta=eta, y=y)

    mean = row_fitted_means(state, data.x)
    sdmat = np.broadcast_to(np.sqrt(sigma2), (n, p))
    z = np.where(bounds.is_point, bounds.point, 0.0)
    draw_mask = ~bounds.is_point
    if np.any(draw_mask):
        z[draw_mask] = samplers.sample_truncated_normal(
            mean[draw_mask], sdmat[draw_mask],
            bounds.lo[draw_mask], bounds.hi[draw_mask], rng)
    state.z = z
    return state


# ------------------------------------------------------------ chain output

@dataclass(frozen=True)
class ChainMeta:
    iterations: int
    burn_in: int
    thinning: int
    seed: int


@dataclass
class PosteriorSamples:
    """Retained snapshots of one chain, stacked along the first axis."""

    theta: np.ndarray    # (T, C, P, L)
    delta: np.ndarray    # (T, P, L)
    tau: np.ndarray      # (T, L)
    beta: np.ndarray     # (T, C, L, K, B)
    alpha: np.ndarray    # (T, C, K, B)
    sigma2: np.ndarray   # (T, P)
    pi: np.ndarray       # (T, C)
    z: np.ndarray        # (T, n, P)
    eta: np.ndarray      # (T, n, K)
    y: np.ndarray        # (T, n)
    meta: ChainMeta

    ARRAY_FIELDS = ("theta", "delta", "tau", "beta", "alpha",
                    "sigma2", "pi", "z", "eta", "y")

    @property
    def n_snapshots(self) -> int:
        return self.theta.shape[0]

    def params_at(self, t: int) -> SnapshotParams:
        return SnapshotParams(theta=self.theta[t], beta=self.beta[t],
                              alpha=self.alpha[t], sigma2=self.sigma2[t],
                              pi=self.pi[t])

    @classmethod
    def stack(cls, states: list[ModelState], meta: ChainMeta) -> "PosteriorSamples":
        if not states:
            raise ValueError("no retained snapshots")
        return cls(
            theta=np.stack([s.theta for s in states]),
            delta=np.stack([s.delta for s in states]),
            tau=np.stack([s.tau for s in states]),
            beta=np.stack([s.beta for s in states]),
            alpha=np.stack([s.alpha for s in states]),
            sigma2=np.stack([s.sigma2 for s in states]),
            pi=np.stack([s.pi for s in states]),
            z=np.stack([s.z for s in states]),
            eta=np.stack([s.eta for s in states]),
            y=np.stack([s.y for s in states]),
            meta=meta,
        )
