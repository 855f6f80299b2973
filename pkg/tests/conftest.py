"""Shared helpers for building random test instances."""

import numpy as np
import pytest

from plspb import CompositionMatrix, fit_on_balances, pca_pb, pls_pb, rmsep
from plspb.latent import pls_regression, predict_components
from plspb.modelsel import PCA_PB, PLS_PB


def random_composition(rng, n, d, spread=1.0):
    """Lognormal part table, strictly positive by construction."""
    return CompositionMatrix(np.exp(spread * rng.standard_normal((n, d))))


def random_instance(rng, n, d, noise=0.5):
    """Composition plus a response driven by a random zero-sum logcontrast."""
    X = random_composition(rng, n, d)
    a = rng.standard_normal(d)
    a -= a.mean()
    y = np.log(X.values) @ a + noise * rng.standard_normal(n)
    return X, y


def loo_oracle(X, y, method, max_k):
    """Brute-force leave-one-out cross-validation, one fit per held-out row."""
    n = X.n_samples
    predictions = np.empty((n, max_k))
    for i in range(n):
        train = np.array([j for j in range(n) if j != i])
        X_train = X.take_samples(train)
        if method == PLS_PB:
            basis = pls_pb(X_train, y[train])
        elif method == PCA_PB:
            basis = pca_pb(X_train)
        else:
            model = pls_regression(X_train, y[train], max_k)
            for k in range(1, max_k + 1):
                predictions[i, k - 1] = predict_components(model, X, k)[i]
            continue
        for k in range(1, max_k + 1):
            fit = fit_on_balances(X_train, y[train], basis, k)
            predictions[i, k - 1] = fit.predict(X)[i]
    return np.array([rmsep(y, predictions[:, k - 1]) for k in range(1, max_k + 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
