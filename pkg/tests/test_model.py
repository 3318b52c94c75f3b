"""Container and factor-algebra tests."""
from __future__ import annotations

import numpy as np
import pytest

from vafactor import data, model, samplers


def tiny_dataset(n=6, seed=0):
    rng = samplers.default_rng(seed)
    specs = (data.SymptomSpec("s1", "binary"),
             data.SymptomSpec("s2", "binary"),
             data.SymptomSpec("s3", "count"),
             data.SymptomSpec("s4", "continuous-identity"))
    values = np.column_stack([
        rng.integers(0, 2, n).astype(float),
        rng.integers(0, 2, n).astype(float),
        rng.integers(0, 4, n).astype(float),
        rng.standard_normal(n),
    ])
    values[0, 1] = np.nan
    x = np.column_stack([np.ones(n), rng.integers(0, 2, n).astype(float)])
    y = rng.integers(0, 3, n)
    y[1] = -1
    return data.Dataset(specs, values, x, y, n_causes=3)


def manual_params(theta, beta, alpha, sigma2, pi):
    return model.SnapshotParams(theta=np.asarray(theta, float),
                                beta=np.asarray(beta, float),
                                alpha=np.asarray(alpha, float),
                                sigma2=np.asarray(sigma2, float),
                                pi=np.asarray(pi, float))


# ------------------------------------------------------------ hyperparameters

def test_defaults_follow_problem_size():
    h = model.Hyperparameters.defaults(21, 4, 2)
    assert h.n_factors == 15 and h.n_basis == 10
    assert h.n_causes == 4 and h.n_covariates == 2
    np.testing.assert_allclose(h.cause_conc, 0.25)
    assert h.coef_iw_df == 4.0 and h.factor_iw_df == 4.0
    small = model.Hyperparameters.defaults(5, 2, 1)
    assert small.n_factors == 5 and small.n_basis == 5


def test_hyperparameter_validation():
    h = model.Hyperparameters.defaults(4, 2, 1)
    with pytest.raises(ValueError):
        model.Hyperparameters.defaults(4, 2, 1, n_factors=0)
    bad = dict(cause_conc=h.cause_conc, n_factors=2, n_basis=2, phi_gamma=3.0,
               mgp_a1=2.0, mgp_a2=1.0,  # must exceed 1
               coef_mean0=h.coef_mean0, coef_mean_cov0=h.coef_mean_cov0,
               coef_iw_df=h.coef_iw_df, coef_iw_scale=h.coef_iw_scale,
               factor_mean0=h.factor_mean0, factor_mean_cov0=h.factor_mean_cov0,
               factor_iw_df=h.factor_iw_df, factor_iw_scale=h.factor_iw_scale)
    with pytest.raises(ValueError):
        model.Hyperparameters(**bad)
    with pytest.raises(ValueError):
        model.Hyperparameters(**{**bad, "mgp_a2": 3.0, "cause_conc": np.array([1.0, 0.0])})


# ----------------------------------------------------------------- algebra

def test_basis_matrix_intercept_only():
    beta = np.zeros((1, 2, 3, 1))
    beta[0, :, :, 0] = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
    p = manual_params(np.zeros((1, 4, 2)), beta, np.zeros((1, 3, 1)), np.ones(4), [1.0])
    xi = model.basis_matrix(p, 0, np.array([1.0]))
    np.testing.assert_allclose(xi, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])


def test_basis_matrix_covariate_dot():
    beta = np.zeros((1, 1, 1, 2))
    beta[0, 0, 0] = [2.0, -1.0]
    p = manual_params(np.zeros((1, 2, 1)), beta, np.zeros((1, 1, 2)), np.ones(2), [1.0])
    assert model.basis_matrix(p, 0, np.array([1.0, 2.0]))[0, 0] == 0.0
    assert model.basis_matrix(p, 0, np.array([1.0, 0.0]))[0, 0] == 2.0


def test_factor_mean_linear():
    alpha = np.zeros((2, 2, 2))
    alpha[1] = [[0.5, 1.0], [2.0, 0.0]]
    p = manual_params(np.zeros((2, 3, 1)), np.zeros((2, 1, 2, 2)), alpha, np.ones(3), [0.5, 0.5])
    np.testing.assert_allclose(model.factor_mean(p, 1, np.array([1.0, 2.0])), [2.5, 2.0])
    np.testing.assert_allclose(model.factor_mean(p, 0, np.array([1.0, 2.0])), [0.0, 0.0])


def test_loadings_hand_product():
    # P=2, L=1, K=1: theta column (1, 2)', basis scalar 3 -> loadings (3, 6)'
    theta = np.array([[[1.0], [2.0]]])
    beta = np.zeros((1, 1, 1, 1))
    beta[0, 0, 0, 0] = 3.0
    p = manual_params(theta, beta, np.zeros((1, 1, 1)), np.ones(2), [1.0])
    np.testing.assert_allclose(model.loadings(p, 0, np.array([1.0])), [[3.0], [6.0]])


def test_loadings_identity_basis_returns_theta():
    rng = samplers.default_rng(1)
    theta = rng.standard_normal((1, 4, 3))
    beta = np.zeros((1, 3, 3, 1))
    beta[0, :, :, 0] = np.eye(3)
    p = manual_params(theta, beta, np.zeros((1, 3, 1)), np.ones(4), [1.0])
    np.testing.assert_allclose(model.loadings(p, 0, np.array([1.0])), theta[0])


def test_loadings_linear_in_x():
    rng = samplers.default_rng(2)
    beta = rng.standard_normal((1, 3, 2, 2))
    theta = rng.standard_normal((1, 5, 3))
    p = manual_params(theta, beta, np.zeros((1, 2, 2)), np.ones(5), [1.0])
    x1 = np.array([1.0, 0.5])
    x2 = np.array([0.0, 2.0])
    np.testing.assert_allclose(
        model.loadings(p, 0, x1 + x2),
        model.loadings(p, 0, x1) + model.loadings(p, 0, x2), atol=1e-12)


def test_marginal_moments_zero_loadings():
    p = manual_params(np.zeros((1, 3, 2)), np.zeros((1, 2, 2, 1)),
                      np.ones((1, 2, 1)), np.array([1.0, 2.0, 3.0]), [1.0])
    mean, cov = model.marginal_moments(p, 0, np.array([1.0]))
    np.testing.assert_allclose(mean, 0.0)
    np.testing.assert_allclose(cov, np.diag([1.0, 2.0, 3.0]))


def test_marginal_moments_rank_one_plus_noise():
    # K=1, loadings all ones: cov = ones matrix + I
    pdim = 4
    theta = np.ones((1, pdim, 1))
    beta = np.zeros((1, 1, 1, 1))
    beta[0, 0, 0, 0] = 1.0
    alpha = np.full((1, 1, 1), 2.0)
    p = manual_params(theta, beta, alpha, np.ones(pdim), [1.0])
    mean, cov = model.marginal_moments(p, 0, np.array([1.0]))
    np.testing.assert_allclose(mean, 2.0)
    np.testing.assert_allclose(cov, np.ones((pdim, pdim)) + np.eye(pdim))


def test_marginal_cov_low_rank_structure():
    rng = samplers.default_rng(3)
    k = 2
    theta = rng.standard_normal((1, 6, 3))
    beta = rng.standard_normal((1, 3, k, 1))
    p = manual_params(theta, beta, rng.standard_normal((1, k, 1)),
                      np.full(6, 0.5), [1.0])
    _, cov = model.marginal_moments(p, 0, np.array([1.0]))
    core = cov - 0.5 * np.eye(6)
    eigs = np.sort(np.linalg.eigvalsh(core))
    assert np.all(np.abs(eigs[:-k]) < 1e-9)       # rank <= K
    assert np.all(eigs >= -1e-9)                  # PSD


# ------------------------------------------------------------- init_state

def test_init_state_shapes_and_constraints():
    ds = tiny_dataset()
    hyper = model.Hyperparameters.defaults(4, 3, 2, n_factors=2, n_basis=3)
    st = model.init_state(ds, hyper, samplers.default_rng(7))
    n, p, c, k, l, b = st.shapes
    assert (n, p, c, k, l, b) == (6, 4, 3, 2, 3, 2)
    bounds = data.compile_constraints(ds)
    assert bounds.satisfied(st.z).all()
    # noise variance pinned at one for the binary columns
    assert st.sigma2[0] == 1.0 and st.sigma2[1] == 1.0
    np.testing.assert_allclose(st.tau, np.cumprod(st.mgp))
    # observed labels kept, unknown imputed into range
    assert np.array_equal(st.y[ds.y >= 0], ds.y[ds.y >= 0])
    assert np.all((st.y >= 0) & (st.y < 3))


def test_init_state_deterministic():
    ds = tiny_dataset()
    hyper = model.Hyperparameters.defaults(4, 3, 2, n_factors=2, n_basis=2)
    a = model.init_state(ds, hyper, samplers.default_rng(11))
    b = model.init_state(ds, hyper, samplers.default_rng(11))
    for name in ("theta", "delta", "phi", "beta", "alpha", "sigma2", "pi", "z", "eta", "y"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


def test_init_state_dimension_mismatch():
    ds = tiny_dataset()
    hyper = model.Hyperparameters.defaults(4, 3, 1)  # data has B=2
    with pytest.raises(ValueError):
        model.init_state(ds, hyper, samplers.default_rng(0))


def test_init_state_prior_center():
    # delta is centered at zero under the prior
    ds = tiny_dataset()
    hyper = model.Hyperparameters.defaults(4, 3, 2, n_factors=1, n_basis=1)
    draws = np.array([
        model.init_state(ds, hyper, samplers.default_rng(1000 + i)).delta.ravel()
        for i in range(800)
    ])
    se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0)) < 4 * se)


# ------------------------------------------------------- posterior samples

def test_posterior_samples_stack_and_params():
    ds = tiny_dataset()
    hyper = model.Hyperparameters.defaults(4, 3, 2, n_factors=2, n_basis=2)
    states = [model.init_state(ds, hyper, samplers.default_rng(s)) for s in (1, 2, 3)]
    meta = model.ChainMeta(iterations=3, burn_in=0, thinning=1, seed=1)
    samples = model.PosteriorSamples.stack(states, meta)
    assert samples.n_snapshots == 3
    assert samples.theta.shape == (3, 3, 4, 2)
    assert samples.z.shape == (3, 6, 4)
    p1 = samples.params_at(1)
    np.testing.assert_array_equal(p1.theta, states[1].theta)
    np.testing.assert_array_equal(p1.pi, states[1].pi)
    with pytest.raises(ValueError):
        model.PosteriorSamples.stack([], meta)
