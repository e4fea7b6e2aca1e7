"""Multivariate and univariate Student-t kernel.

Log-densities, tail probabilities, quantiles, Expected Shortfall and exact
conditional/marginal distributions, plus quantile and ES computation for
finite mixtures of univariate t components.  All density work is done in
log space with Cholesky-based quadratic forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, optimize, special, stats


class BracketingError(RuntimeError):
    """The mixture quantile root could not be bracketed.

    Signals pathological parameters (e.g. absurd scales or weights)."""


@dataclass(frozen=True)
class MvtParams:
    """Parameters of one multivariate Student-t distribution.

    mu    : location vector, shape (k,)
    sigma : symmetric positive-definite scale matrix, shape (k, k)
    nu    : degrees of freedom, > 0
    """

    mu: np.ndarray
    sigma: np.ndarray
    nu: float

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nu", float(self.nu))
        if mu.ndim != 1:
            raise ValueError("mu must be a vector")
        k = mu.size
        if sigma.shape != (k, k):
            raise ValueError(f"sigma must be {k}x{k}, got {sigma.shape}")
        if not np.isfinite(self.nu) or self.nu <= 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        scale = max(1.0, float(np.max(np.abs(sigma))))
        if np.max(np.abs(sigma - sigma.T)) > 1e-12 * scale:
            raise ValueError("sigma is not symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma is not positive definite") from exc
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of the scale matrix."""
        return self._chol


def mvt_mahalanobis(x, p: MvtParams):
    """Quadratic form (x - mu)' sigma^{-1} (x - mu), batched over leading axes."""
    x = np.asarray(x, dtype=float)
    dev = np.atleast_2d(x).reshape(-1, p.dim) - p.mu
    sol = linalg.solve_triangular(p.chol, dev.T, lower=True)
    maha = np.sum(sol * sol, axis=0)
    return maha[0] if x.ndim == 1 else maha.reshape(x.shape[:-1])


def mvt_logpdf(x, p: MvtParams):
    """Log-density of the multivariate Student-t.

    Accepts a single vector of length k or an array of shape (..., k);
    returns a scalar or an array of the leading shape respectively.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (p.dim,):
        raise ValueError(f"x has dimension {x.shape[-1:]}, expected {p.dim}")
    k, nu = p.dim, p.nu
    maha = mvt_mahalanobis(x, p)
    logdet = 2.0 * np.sum(np.log(np.diag(p.chol)))
    const = (
        special.gammaln(0.5 * (nu + k))
        - special.gammaln(0.5 * nu)
        - 0.5 * k * np.log(nu * np.pi)
        - 0.5 * logdet
    )
    return const - 0.5 * (nu + k) * np.log1p(maha / nu)


def t_cdf(z, nu):
    """CDF of the standardized univariate Student-t."""
    if np.any(np.asarray(nu) <= 0):
        raise ValueError("nu must be positive")
    return stats.t.cdf(z, df=nu)


def t_quantile(tau, nu):
    """Quantile of the standardized univariate Student-t."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0) or np.any(tau >= 1.0):
        raise ValueError("tau must lie strictly in (0, 1)")
    if np.any(np.asarray(nu) <= 0):
        raise ValueError("nu must be positive")
    q = stats.t.ppf(tau, df=nu)
    return float(q) if q.ndim == 0 else q


def t_lower_partial(z, nu):
    """Lower partial expectation of the standardized t: int_{-inf}^{z} u f(u) du.

    Closed form -f(z) * (nu + z^2) / (nu - 1); requires nu > 1.
    """
    if np.any(np.asarray(nu) <= 1.0):
        raise ValueError("partial expectation requires nu > 1")
    z = np.asarray(z, dtype=float)
    return -stats.t.pdf(z, df=nu) * (nu + z * z) / (nu - 1.0)


def t_es(tau, nu):
    """Lower-tail Expected Shortfall of the standardized t at level tau.

    ES_tau = E[Z | Z <= q_tau] = -f(q_tau)/tau * (nu + q_tau^2)/(nu - 1).
    Defined for nu > 1 only.
    """
    if nu <= 1.0:
        raise ValueError("ES of the Student-t requires nu > 1")
    q = t_quantile(tau, nu)
    return float(t_lower_partial(q, nu) / tau)


def marginal_mvt(p: MvtParams, keep_idx) -> MvtParams:
    """Marginal of a multivariate t on the given coordinates (nu unchanged)."""
    keep = np.atleast_1d(np.asarray(keep_idx, dtype=int))
    if keep.size == 0:
        raise ValueError("keep_idx must be nonempty")
    if np.any(keep < 0) or np.any(keep >= p.dim) or len(set(keep.tolist())) != keep.size:
        raise ValueError("keep_idx must be distinct valid coordinates")
    return MvtParams(p.mu[keep], p.sigma[np.ix_(keep, keep)], p.nu)


def condition_mvt(p: MvtParams, cond_idx, cond_values) -> MvtParams:
    """Exact conditional of a multivariate t given a point on a coordinate block.

    For conditioning block of size d with Mahalanobis form q of the observed
    values, the conditional of the remaining coordinates is Student-t with

        nu_c    = nu + d
        mu_c    = mu_1 + S12 S22^{-1} (y_2 - mu_2)
        sigma_c = (nu + q) / (nu + d) * (S11 - S12 S22^{-1} S21)

    The remaining coordinates keep their original relative order.
    """
    cond = np.atleast_1d(np.asarray(cond_idx, dtype=int))
    values = np.atleast_1d(np.asarray(cond_values, dtype=float))
    if cond.size == 0 or cond.size >= p.dim:
        raise ValueError("cond_idx must be a proper nonempty subset of coordinates")
    if len(set(cond.tolist())) != cond.size:
        raise ValueError("cond_idx contains duplicates")
    if values.shape != cond.shape:
        raise ValueError("cond_values must match cond_idx in length")
    keep = np.array([i for i in range(p.dim) if i not in set(cond.tolist())])
    d = cond.size

    s11 = p.sigma[np.ix_(keep, keep)]
    s12 = p.sigma[np.ix_(keep, cond)]
    s22 = p.sigma[np.ix_(cond, cond)]
    dev = values - p.mu[cond]
    try:
        c22 = linalg.cho_factor(s22, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular conditioning block") from exc
    sol = linalg.cho_solve(c22, dev)
    q = float(dev @ sol)
    mu_c = p.mu[keep] + s12 @ sol
    schur = s11 - s12 @ linalg.cho_solve(c22, s12.T)
    sigma_c = (p.nu + q) / (p.nu + d) * schur
    sigma_c = 0.5 * (sigma_c + sigma_c.T)
    return MvtParams(mu_c, sigma_c, p.nu + d)


def univariate(p: MvtParams):
    """(mu, scale, nu) triple of a one-dimensional MvtParams."""
    if p.dim != 1:
        raise ValueError("expected a univariate distribution")
    return float(p.mu[0]), float(np.sqrt(p.sigma[0, 0])), p.nu


def _mixture_arrays(weights, comps):
    w = np.asarray(weights, dtype=float)
    comps = [(float(m), float(s), float(n)) for (m, s, n) in comps]
    mus = np.array([c[0] for c in comps])
    sigmas = np.array([c[1] for c in comps])
    nus = np.array([c[2] for c in comps])
    if w.shape != mus.shape:
        raise ValueError("weights and components disagree in length")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-10:
        raise ValueError("weights must be nonnegative and sum to 1 within 1e-10")
    if np.any(sigmas <= 0.0) or np.any(nus <= 0.0):
        raise ValueError("component scales and degrees of freedom must be positive")
    return w, mus, sigmas, nus


def mixture_cdf(x, weights, comps):
    """CDF of a finite mixture of univariate t components at x."""
    w, mus, sigmas, nus = _mixture_arrays(weights, comps)
    return float(np.sum(w * stats.t.cdf((x - mus) / sigmas, df=nus)))


def mixture_quantile(weights, comps, tau) -> float:
    """tau-quantile of a finite mixture of univariate t components.

    Solves sum_l w_l F_l((x - mu_l)/sigma_l) = tau by bracketed root search.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly in (0, 1)")
    w, mus, sigmas, nus = _mixture_arrays(weights, comps)

    def f(x):
        return float(np.sum(w * stats.t.cdf((x - mus) / sigmas, df=nus))) - tau

    # Heavy-tail-aware bracket: +-50 max-scale units scaled by the worst
    # component's tau-quantile magnitude, expanded geometrically on failure.
    tail = min(tau, 1.0 - tau)
    unit = max(1.0, abs(float(stats.t.ppf(tail, df=nus.min()))))
    half = 50.0 * max(sigmas.max(), 1e-300) * unit
    lo, hi = mus.min() - half, mus.max() + half
    for _ in range(60):
        if f(lo) < 0.0 < f(hi):
            return float(optimize.brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16))
        half *= 4.0
        lo, hi = mus.min() - half, mus.max() + half
    raise BracketingError("failed to bracket the mixture quantile")


def mixture_truncated_mean(weights, comps, cutoff) -> float:
    """E[X | X <= cutoff] for a finite mixture of univariate t components.

    Uses the closed-form lower partial expectation of each component.
    Requires every component nu > 1.
    """
    w, mus, sigmas, nus = _mixture_arrays(weights, comps)
    if np.any(nus <= 1.0):
        raise ValueError("truncated mean requires every component nu > 1")
    z = (cutoff - mus) / sigmas
    partial = mus * stats.t.cdf(z, df=nus) + sigmas * t_lower_partial(z, nus)
    mass = float(np.sum(w * stats.t.cdf(z, df=nus)))
    if mass <= 0.0:
        raise ValueError("no probability mass below the cutoff")
    return float(np.sum(w * partial) / mass)


def mixture_es(weights, comps, tau) -> float:
    """Lower-tail Expected Shortfall of a univariate t mixture at level tau.

    The truncation point is the mixture's own tau-quantile, so the mass
    below it is exactly tau.
    """
    q = mixture_quantile(weights, comps, tau)
    return mixture_truncated_mean(weights, comps, q)
