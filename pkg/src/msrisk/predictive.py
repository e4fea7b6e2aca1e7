"""h-step-ahead predictive mixture of a fitted Markov-switching model.

The predictive density at time t is a finite mixture of the regime
emissions, weighted by the hidden chain propagated h steps from the
filtered (by default) state probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import FitResult


@dataclass(frozen=True)
class PredictiveMixture:
    """Mixture weights plus component parameters for p(y_{t+h} | I_t)."""

    weights: np.ndarray
    components: tuple
    horizon: int
    as_of: int

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        comps = tuple(self.components)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)
        if w.shape != (len(comps),):
            raise ValueError("one weight per component required")
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must lie on the simplex within 1e-12")
        if len({c.dim for c in comps}) != 1:
            raise ValueError("components disagree in dimension")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def dim(self) -> int:
        return self.components[0].dim


def predictive_weights(filtered_t, transition, h: int) -> np.ndarray:
    """Propagate filtered state probabilities h steps through the chain.

    With rows of the transition matrix indexing the from-state this is
    filtered_t @ transition^h; the matrix power uses repeated squaring.
    """
    if h < 1:
        raise ValueError("horizon must be >= 1")
    pi = np.atleast_1d(np.asarray(filtered_t, dtype=float))
    q = np.atleast_2d(np.asarray(transition, dtype=float))
    if np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-10:
        raise ValueError("filtered probabilities must lie on the simplex")
    w = pi @ np.linalg.matrix_power(q, h)
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def build_predictive(fit: FitResult, t: int, h: int = 1, probs: str = "filtered") -> PredictiveMixture:
    """Predictive mixture as of time index t.

    probs selects the state probabilities used as the chain's starting
    point: 'filtered' conditions on I_t (the definitional choice);
    'smoothed' is exposed for full-sample reproduction studies.
    """
    if probs not in ("filtered", "smoothed"):
        raise ValueError("probs must be 'filtered' or 'smoothed'")
    source = fit.filtered if probs == "filtered" else fit.smoothed
    if not 0 <= t < source.shape[0]:
        raise IndexError(f"time index {t} outside sample of length {source.shape[0]}")
    weights = predictive_weights(source[t], fit.model.transition, h)
    return PredictiveMixture(
        weights=weights, components=fit.model.regimes, horizon=h, as_of=t
    )
