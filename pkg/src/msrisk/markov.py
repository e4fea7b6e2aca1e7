"""L-state multivariate Student-t Markov-switching model.

Log-space forward-backward recursions, ECM estimation with per-observation
gamma-scale weights, information-criterion state-count selection, and JSON
serialization of fitted models.

Transition-matrix orientation: rows index the from-state and columns the
to-state, i.e. transition[i, j] = P(S_t = j | S_{t-1} = i).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special
from scipy.special import logsumexp

from .panel import ReturnPanel
from .studentt import MvtParams, mvt_logpdf, mvt_mahalanobis

NU_MIN = 2.1
NU_MAX = 200.0


class RegimeCollapseError(RuntimeError):
    """A regime lost essentially all posterior mass during estimation."""


@dataclass(frozen=True)
class MsTModel:
    """Regime parameters plus hidden-chain transition matrix and initial law."""

    regimes: tuple
    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        regimes = tuple(self.regimes)
        q = np.atleast_2d(np.asarray(self.transition, dtype=float))
        delta = np.atleast_1d(np.asarray(self.initial, dtype=float))
        object.__setattr__(self, "regimes", regimes)
        object.__setattr__(self, "transition", q)
        object.__setattr__(self, "initial", delta)
        L = len(regimes)
        if L == 0:
            raise ValueError("at least one regime required")
        dims = {r.dim for r in regimes}
        if len(dims) != 1:
            raise ValueError("regimes disagree in dimension")
        for l, r in enumerate(regimes):
            if r.nu < NU_MIN:
                raise ValueError(f"regime {l} has nu={r.nu} < {NU_MIN}")
        if q.shape != (L, L):
            raise ValueError(f"transition matrix must be {L}x{L}")
        if np.any(q < 0.0) or np.any(q > 1.0):
            raise ValueError("transition probabilities outside [0, 1]")
        if np.max(np.abs(q.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1 within 1e-12")
        if delta.shape != (L,) or np.any(delta < 0.0) or abs(delta.sum() - 1.0) > 1e-12:
            raise ValueError("initial distribution must lie on the simplex")

    @property
    def n_states(self) -> int:
        return len(self.regimes)

    @property
    def dim(self) -> int:
        return self.regimes[0].dim


@dataclass
class FitResult:
    """Estimation output: model, likelihood path and state probabilities."""

    model: MsTModel
    loglik: float
    iterations: int
    converged: bool
    smoothed: np.ndarray
    filtered: np.ndarray
    loglik_path: np.ndarray = field(default_factory=lambda: np.array([]))


@dataclass
class SelectionRow:
    L: int
    loglik: float
    k: int
    aic: float
    bic: float
    error: str = ""


@dataclass
class SelectionTable:
    rows: list
    chosen: int
    criterion: str


def _observations(panel) -> np.ndarray:
    y = panel.returns if isinstance(panel, ReturnPanel) else np.asarray(panel, float)
    return np.atleast_2d(y)


def _log_emissions(model: MsTModel, y: np.ndarray) -> np.ndarray:
    return np.column_stack([mvt_logpdf(y, r) for r in model.regimes])


def _lse(v, axis):
    """Inline log-sum-exp; cheaper than scipy's inside the T-step loops."""
    m = np.max(v, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis=axis) + np.log(
        np.sum(np.exp(v - m), axis=axis)
    )


def _forward(log_b, log_q, log_delta):
    t_len, n = log_b.shape
    log_alpha = np.empty((t_len, n))
    log_alpha[0] = log_delta + log_b[0]
    for t in range(1, t_len):
        log_alpha[t] = log_b[t] + _lse(log_alpha[t - 1][:, None] + log_q, axis=0)
    return log_alpha


def _backward(log_b, log_q):
    t_len, n = log_b.shape
    log_beta = np.zeros((t_len, n))
    for t in range(t_len - 2, -1, -1):
        log_beta[t] = _lse(log_q + (log_b[t + 1] + log_beta[t + 1])[None, :], axis=1)
    return log_beta


def forward_loglik(model: MsTModel, panel) -> float:
    """Log-likelihood via the log-sum-exp stabilized forward recursion."""
    y = _observations(panel)
    if y.shape[1] != model.dim:
        raise ValueError(f"panel dimension {y.shape[1]} != model dimension {model.dim}")
    with np.errstate(divide="ignore"):
        log_alpha = _forward(
            _log_emissions(model, y),
            np.log(model.transition),
            np.log(model.initial),
        )
    return float(logsumexp(log_alpha[-1]))


def _e_step(model: MsTModel, y: np.ndarray):
    """One forward-backward pass: (loglik, smoothed, pairwise, filtered).

    Underflow control: per-time max shift of the log emissions plus
    per-step renormalization of the forward/backward variables (the
    rescaled equivalent of the log-sum-exp recursion, but with cheap
    small-matrix arithmetic in the T-loop).
    """
    log_b = _log_emissions(model, y)
    t_len, n = log_b.shape
    shift = log_b.max(axis=1)
    b = np.exp(log_b - shift[:, None])
    q = model.transition

    alpha = np.empty((t_len, n))
    scale = np.empty(t_len)
    a = model.initial * b[0]
    scale[0] = a.sum()
    alpha[0] = a / scale[0]
    for t in range(1, t_len):
        a = (alpha[t - 1] @ q) * b[t]
        scale[t] = a.sum()
        alpha[t] = a / scale[t]
    loglik = float(np.sum(np.log(scale)) + np.sum(shift))

    beta = np.empty((t_len, n))
    beta[-1] = 1.0
    for t in range(t_len - 2, -1, -1):
        beta[t] = (q @ (b[t + 1] * beta[t + 1])) / scale[t + 1]

    post = alpha * beta
    smoothed = post / post.sum(axis=1, keepdims=True)
    pairwise = (
        alpha[:-1, :, None]
        * q[None, :, :]
        * (b[1:] * beta[1:])[:, None, :]
        / scale[1:, None, None]
    )
    return loglik, smoothed, pairwise, alpha


def smooth(model: MsTModel, panel):
    """Forward-backward state inference.

    Returns (smoothed, pairwise, filtered):
      smoothed  T x L    P(S_t = l | I_T)
      pairwise  (T-1) x L x L   P(S_t = i, S_{t+1} = j | I_T)
      filtered  T x L    P(S_t = l | I_t)
    """
    y = _observations(panel)
    if y.shape[1] != model.dim:
        raise ValueError(f"panel dimension {y.shape[1]} != model dimension {model.dim}")
    _, smoothed, pairwise, filtered = _e_step(model, y)
    return smoothed, pairwise, filtered


def param_count(L: int, p: int) -> int:
    """Free parameters: L regimes (mu, sigma, nu) + transitions + initial law."""
    return L * (p + p * (p + 1) // 2 + 1) + L * (L - 1) + (L - 1)


def information_criteria(loglik: float, k: int, t_len: int):
    """(AIC, BIC) = (-2 ll + 2k, -2 ll + k ln T)."""
    if t_len <= k:
        warnings.warn(
            f"sample size T={t_len} does not exceed parameter count k={k}",
            stacklevel=2,
        )
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + k * np.log(t_len)


def decompose_sigma(sigma):
    """Split a PD scale matrix into diagonal scales and a correlation matrix.

    Returns (lam, omega) with sigma = lam @ omega @ lam, lam diagonal.
    """
    sigma = np.asarray(sigma, dtype=float)
    sd = np.sqrt(np.diag(sigma))
    lam = np.diag(sd)
    omega = sigma / np.outer(sd, sd)
    np.fill_diagonal(omega, 1.0)
    return lam, omega


# --- estimation ---------------------------------------------------------


def _block_moments(y, members, p):
    block = y[members]
    mu = block.mean(axis=0)
    sigma = np.cov(block, rowvar=False)
    sigma = np.atleast_2d(sigma)
    sigma += (1e-6 * np.trace(sigma) / p + 1e-10) * np.eye(p)
    return mu, 0.5 * (sigma + sigma.T)


def _uniformish_transition(L, diag=0.9):
    if L == 1:
        return np.array([[1.0]])
    q = np.full((L, L), (1.0 - diag) / (L - 1))
    np.fill_diagonal(q, diag)
    return q


def _initial_model(y, L, init, seed) -> MsTModel:
    t_len, p = y.shape
    if init == "pca":
        # Quantile blocks of the first principal component's scores give
        # deterministic, regime-ordered starting values.
        centered = y - y.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        scores = centered @ vt[0]
        order = np.argsort(scores)
        blocks = np.array_split(order, L)
    elif init == "random":
        rng = np.random.default_rng(seed)
        centers = y[rng.choice(t_len, size=L, replace=False)]
        dist = np.linalg.norm(y[:, None, :] - centers[None, :, :], axis=2)
        assign = np.argmin(dist, axis=1)
        blocks = [np.flatnonzero(assign == l) for l in range(L)]
        if any(b.size < p + 2 for b in blocks):
            blocks = np.array_split(rng.permutation(t_len), L)
    else:
        raise ValueError(f"unknown init {init!r}")
    regimes = [MvtParams(*_block_moments(y, b, p), 8.0) for b in blocks]
    return MsTModel(regimes, _uniformish_transition(L), np.full(L, 1.0 / L))


def _solve_nu(c, nu_old, p):
    """Root of the weighted digamma stationarity equation on [NU_MIN, NU_MAX]."""

    def g(nu):
        half = 0.5 * nu
        return (
            -special.digamma(half)
            + np.log(half)
            + 1.0
            + c
            + special.digamma(0.5 * (nu_old + p))
            - np.log(0.5 * (nu_old + p))
        )

    g_lo, g_hi = g(NU_MIN), g(NU_MAX)
    if g_lo <= 0.0:
        return NU_MIN
    if g_hi >= 0.0:
        return NU_MAX
    return float(optimize.brentq(g, NU_MIN, NU_MAX, xtol=1e-10))


def _m_step(y, model, smoothed, pairwise):
    t_len, p = y.shape
    L = model.n_states
    regimes = []
    for l in range(L):
        reg = model.regimes[l]
        gam = smoothed[:, l]
        n_l = gam.sum()
        if n_l < p + 2:
            raise RegimeCollapseError(
                f"regime {l} holds mass {n_l:.2f} < {p + 2} observations"
            )
        maha = mvt_mahalanobis(y, reg)
        u = (reg.nu + p) / (reg.nu + maha)
        w = gam * u
        mu = (w[:, None] * y).sum(axis=0) / w.sum()
        dev = y - mu
        sigma = (w[:, None] * dev).T @ dev / n_l
        sigma = 0.5 * (sigma + sigma.T)
        if np.linalg.cond(sigma) > 1e12:
            sigma += (1e-8 * np.trace(sigma) / p) * np.eye(p)
        c = float(np.sum(gam * (np.log(u) - u)) / n_l)
        nu = _solve_nu(c, reg.nu, p)
        regimes.append(MvtParams(mu, sigma, nu))

    if L == 1:
        q = np.array([[1.0]])
    else:
        counts = pairwise.sum(axis=0)
        rows = counts.sum(axis=1, keepdims=True)
        rows[rows <= 0.0] = 1.0
        q = counts / rows
        q = np.clip(q, 0.0, 1.0)
        q /= q.sum(axis=1, keepdims=True)
    delta = np.clip(smoothed[0], 0.0, 1.0)
    delta /= delta.sum()
    return MsTModel(regimes, q, delta)


def _relabel(model, smoothed, filtered):
    """Sort states by regime mean of the first series, descending."""
    order = np.argsort([-r.mu[0] for r in model.regimes], kind="stable")
    model = MsTModel(
        [model.regimes[i] for i in order],
        model.transition[np.ix_(order, order)],
        model.initial[order],
    )
    return model, smoothed[:, order], filtered[:, order]


def em_fit(panel, L, *, init="pca", seed=None, tol=1e-8, max_iter=2000) -> FitResult:
    """ECM estimation of the L-state Student-t Markov-switching model.

    E-step: exact forward-backward state posteriors plus per-(t, l)
    gamma-scale weights u = (nu + p) / (nu + mahalanobis).  M-step:
    doubly-weighted moments for (mu, sigma), expected-count updates for the
    chain, then a one-dimensional root solve for each nu on
    [2.1, 200].  The log-likelihood is asserted nondecreasing each
    iteration (1e-8 relative slack) and iteration stops when its relative
    change drops below tol.
    """
    y = _observations(panel)
    t_len, p = y.shape
    if L < 1:
        raise ValueError("L must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if t_len < 10 * p:
        raise ValueError(f"fitting guard: T={t_len} < 10 p={10 * p}")

    model = _initial_model(y, L, init, seed)
    path = []
    prev = -np.inf
    converged = False
    iterations = 0
    for it in range(max_iter):
        loglik, smoothed, pairwise, filtered = _e_step(model, y)
        slack = 1e-8 * (1.0 + abs(prev))
        if loglik < prev - slack:
            raise RuntimeError(
                f"log-likelihood decreased at iteration {it}: {prev} -> {loglik}"
            )
        path.append(loglik)
        iterations = it
        if it > 0 and abs(loglik - prev) <= tol * (1.0 + abs(loglik)):
            converged = True
            break
        prev = loglik
        model = _m_step(y, model, smoothed, pairwise)
    else:
        # max_iter exhausted after an M-step: resynchronize posteriors.
        loglik, smoothed, pairwise, filtered = _e_step(model, y)
        path.append(loglik)
        iterations = max_iter

    model, smoothed, filtered = _relabel(model, smoothed, filtered)
    return FitResult(
        model=model,
        loglik=float(loglik),
        iterations=iterations,
        converged=converged,
        smoothed=smoothed,
        filtered=filtered,
        loglik_path=np.array(path),
    )


def fit_restarts(panel, L, n_restarts=1, seed=0, *, tol=1e-8, max_iter=2000) -> FitResult:
    """Best-of-n estimation across deterministic-seeded initializations.

    The first start is the deterministic PCA-block initialization; later
    starts use seeded nearest-center assignments.  Collapsed or failed
    starts are skipped; if every start fails the last error is re-raised.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    best = None
    last_error = None
    for r in range(n_restarts):
        init = "pca" if r == 0 else "random"
        try:
            fit = em_fit(
                panel, L, init=init, seed=seed + r, tol=tol, max_iter=max_iter
            )
        except (RegimeCollapseError, np.linalg.LinAlgError, ValueError) as exc:
            last_error = exc
            continue
        if best is None or fit.loglik > best.loglik:
            best = fit
    if best is None:
        raise RuntimeError(f"all {n_restarts} restarts failed: {last_error}")
    return best


def select_L(panel, L_range, criterion="aic", *, n_restarts=3, seed=0, tol=1e-8,
             max_iter=2000) -> SelectionTable:
    """Fit each candidate state count and pick the criterion minimizer.

    Fit failures are recorded per row and excluded from the choice instead
    of aborting the sweep.
    """
    L_range = list(L_range)
    if not L_range:
        raise ValueError("empty L range")
    if criterion not in ("aic", "bic"):
        raise ValueError("criterion must be 'aic' or 'bic'")
    y = _observations(panel)
    t_len, p = y.shape
    rows = []
    for L in L_range:
        k = param_count(L, p)
        try:
            fit = fit_restarts(
                panel, L, n_restarts=n_restarts, seed=seed, tol=tol, max_iter=max_iter
            )
        except (RuntimeError, ValueError) as exc:
            rows.append(SelectionRow(L, np.nan, k, np.nan, np.nan, error=str(exc)))
            continue
        aic, bic = information_criteria(fit.loglik, k, t_len)
        rows.append(SelectionRow(L, fit.loglik, k, aic, bic))
    usable = [r for r in rows if not r.error]
    if not usable:
        raise RuntimeError("every candidate L failed to fit")
    chosen = min(usable, key=lambda r: getattr(r, criterion)).L
    return SelectionTable(rows=rows, chosen=chosen, criterion=criterion)


# --- serialization ------------------------------------------------------

SCHEMA = "msrisk/1"


def model_to_dict(model: MsTModel, *, labels=None, loglik=None, t_len=None) -> dict:
    p = model.dim
    L = model.n_states
    return {
        "schema": SCHEMA,
        "L": L,
        "p": p,
        "regimes": [
            {
                "mu": r.mu.tolist(),
                "sigma": r.sigma.reshape(-1).tolist(),
                "nu": r.nu,
            }
            for r in model.regimes
        ],
        "Q": model.transition.reshape(-1).tolist(),
        "delta": model.initial.tolist(),
        "labels": list(labels) if labels is not None else [f"y{i+1}" for i in range(p)],
        "loglik": loglik,
        "k": param_count(L, p),
        "T": t_len,
    }


def model_from_dict(doc: dict):
    """Inverse of model_to_dict; returns (model, metadata dict)."""
    L, p = doc["L"], doc["p"]
    regimes = [
        MvtParams(
            np.array(r["mu"]),
            np.array(r["sigma"]).reshape(p, p),
            r["nu"],
        )
        for r in doc["regimes"]
    ]
    model = MsTModel(
        regimes,
        np.array(doc["Q"]).reshape(L, L),
        np.array(doc["delta"]),
    )
    meta = {k: doc.get(k) for k in ("labels", "loglik", "k", "T", "schema")}
    return model, meta


def save_model(path, model: MsTModel, **meta) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, **meta), fh, indent=1)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
