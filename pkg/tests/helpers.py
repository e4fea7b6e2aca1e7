"""Shared constructors for the test suite."""

import numpy as np

from msrisk import FitResult, MsTModel, MvtParams, PredictiveMixture
from msrisk.markov import forward_loglik, smooth


def random_pd(rng, k, scale=1.0):
    """Random well-conditioned positive-definite k x k matrix."""
    a = rng.normal(size=(k, k))
    return scale**2 * (a @ a.T + k * np.eye(k))


def random_mvt(rng, k, nu=None, scale=1.0):
    if nu is None:
        nu = float(rng.uniform(3.0, 20.0))
    return MvtParams(rng.normal(size=k) * scale, random_pd(rng, k, scale), nu)


def random_model(rng, L, p, scale=1.0):
    regimes = [random_mvt(rng, p, scale=scale) for _ in range(L)]
    q = rng.uniform(0.2, 1.0, size=(L, L))
    q /= q.sum(axis=1, keepdims=True)
    delta = rng.uniform(0.2, 1.0, size=L)
    delta /= delta.sum()
    return MsTModel(regimes, q, delta)


def random_mixture(rng, L, p, scale=0.02, nu_range=(4.0, 20.0)):
    comps = [
        MvtParams(
            rng.normal(scale=scale, size=p),
            random_pd(rng, p, scale),
            float(rng.uniform(*nu_range)),
        )
        for _ in range(L)
    ]
    w = rng.uniform(0.2, 1.0, size=L)
    w /= w.sum()
    return PredictiveMixture(weights=w, components=comps, horizon=1, as_of=0)


def fit_from_model(model, panel):
    """FitResult wrapper around a known model (no estimation)."""
    smoothed, _, filtered = smooth(model, panel)
    return FitResult(
        model=model,
        loglik=forward_loglik(model, panel),
        iterations=0,
        converged=True,
        smoothed=smoothed,
        filtered=filtered,
    )


def shift_mixture(mix, i, c):
    """New mixture with constant c added to coordinate i."""
    comps = []
    for comp in mix.components:
        mu = comp.mu.copy()
        mu[i] += c
        comps.append(MvtParams(mu, comp.sigma, comp.nu))
    return PredictiveMixture(
        weights=mix.weights, components=comps, horizon=mix.horizon, as_of=mix.as_of
    )


def scale_mixture(mix, c):
    """New mixture with every coordinate multiplied by c > 0."""
    comps = [
        MvtParams(c * comp.mu, c * c * comp.sigma, comp.nu) for comp in mix.components
    ]
    return PredictiveMixture(
        weights=mix.weights, components=comps, horizon=mix.horizon, as_of=mix.as_of
    )
