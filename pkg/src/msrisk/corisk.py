"""Joint tail-risk measures on a predictive mixture.

Marginal VaR/ES plus the Multiple-CoVaR / Multiple-CoES family: the tail
quantile (or tail mean) of one series conditional on a distress set of the
others sitting at their individual tail levels while the rest sit at their
median-state levels, and the Delta variants that subtract the everyone-at-
median baseline.

Conditioning is point conditioning (a density slice).  Per mixture
component the exact conditional Student-t is used and the component
weights are reweighted by each component's marginal density at the
conditioning vector, handled in log space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .markov import FitResult, MsTModel
from .predictive import PredictiveMixture, build_predictive
from .studentt import (
    condition_mvt,
    marginal_mvt,
    mixture_es,
    mixture_quantile,
    mixture_truncated_mean,
    mvt_logpdf,
    univariate,
)

CSV_SCHEMA = "# schema: msrisk/1"


@dataclass(frozen=True)
class RiskQuery:
    """Target series, distress set and the two tail levels.

    distress may be empty, which yields the everyone-at-median baseline
    measure (the subtrahend of the Delta variants).
    """

    target: int
    distress: tuple = ()
    tau1: float = 0.05
    tau2: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "distress", tuple(sorted(self.distress)))
        if self.target in self.distress:
            raise ValueError("target cannot be in its own distress set")
        if len(set(self.distress)) != len(self.distress):
            raise ValueError("distress set contains duplicates")
        for tau in (self.tau1, self.tau2):
            if not 0.0 < tau < 1.0:
                raise ValueError("tail levels must lie strictly in (0, 1)")


@dataclass
class RiskSeries:
    """Per-time risk measures for one target with a fixed distress set."""

    target: int
    distress: tuple
    tau1: float
    tau2: float
    var: np.ndarray = None
    es: np.ndarray = None
    covar: np.ndarray = None
    coes: np.ndarray = None
    delta_covar: np.ndarray = None
    delta_coes: np.ndarray = None


def _check_index(mix: PredictiveMixture, i: int) -> None:
    if not 0 <= i < mix.dim:
        raise IndexError(f"series index {i} outside dimension {mix.dim}")


def _marginal_components(mix: PredictiveMixture, i: int):
    return [univariate(marginal_mvt(c, [i])) for c in mix.components]


def marginal_var(mix: PredictiveMixture, i: int, tau: float) -> float:
    """tau-quantile of the i-th marginal of the predictive mixture."""
    _check_index(mix, i)
    return mixture_quantile(mix.weights, _marginal_components(mix, i), tau)


def marginal_es(mix: PredictiveMixture, i: int, tau: float) -> float:
    """tau-level Expected Shortfall of the i-th marginal."""
    _check_index(mix, i)
    return mixture_es(mix.weights, _marginal_components(mix, i), tau)


def conditional_mixture(mix: PredictiveMixture, target: int, cond_idx, cond_values):
    """Univariate mixture of the target given a point on the other coordinates.

    Per component the exact conditional t is formed and the weight is
    log pi_l plus the component's marginal log-density at the conditioning
    vector, normalized by log-sum-exp.

    Returns (weights, [(mu, sigma, nu), ...]).
    """
    _check_index(mix, target)
    cond_idx = list(cond_idx)
    cond_values = np.asarray(cond_values, dtype=float)
    keep = [i for i in range(mix.dim) if i not in set(cond_idx)]
    pos = keep.index(target)
    log_w = np.empty(len(mix.components))
    comps = []
    with np.errstate(divide="ignore"):
        log_pi = np.log(mix.weights)
    for l, comp in enumerate(mix.components):
        log_w[l] = log_pi[l] + mvt_logpdf(cond_values, marginal_mvt(comp, cond_idx))
        cond = condition_mvt(comp, cond_idx, cond_values)
        comps.append(univariate(marginal_mvt(cond, [pos])))
    weights = np.exp(log_w - logsumexp(log_w))
    weights /= weights.sum()
    return weights, comps


def _conditioning(mix: PredictiveMixture, q: RiskQuery, level_fn):
    """Conditioning coordinates and levels for a query.

    Distress coordinates sit at their individual tau2 level and the rest at
    their 0.5 ("normal") level, both computed from the full predictive
    marginal via level_fn (marginal_var for CoVaR, marginal_es for CoES).
    """
    cond_idx = [j for j in range(mix.dim) if j != q.target]
    distress = set(q.distress)
    values = [
        level_fn(mix, j, q.tau2 if j in distress else 0.5) for j in cond_idx
    ]
    return cond_idx, np.array(values)


def multiple_covar(mix: PredictiveMixture, q: RiskQuery) -> float:
    """Multiple-CoVaR: tau1-quantile of the target given the conditioning slice."""
    cond_idx, values = _conditioning(mix, q, marginal_var)
    weights, comps = conditional_mixture(mix, q.target, cond_idx, values)
    return mixture_quantile(weights, comps, q.tau1)


def multiple_coes(mix: PredictiveMixture, q: RiskQuery, threshold: str = "conditional") -> float:
    """Multiple-CoES: tail mean of the target given the conditioning slice.

    Conditioning coordinates sit at their ES levels (tau2 for the distress
    set, 0.5 for the rest).  threshold picks the truncation point:
    'conditional' (default) truncates at the conditional law's own
    tau1-quantile; 'unconditional' truncates at the target's unconditional
    marginal VaR_tau1.
    """
    cond_idx, values = _conditioning(mix, q, marginal_es)
    weights, comps = conditional_mixture(mix, q.target, cond_idx, values)
    if threshold == "conditional":
        return mixture_es(weights, comps, q.tau1)
    if threshold == "unconditional":
        cutoff = marginal_var(mix, q.target, q.tau1)
        return mixture_truncated_mean(weights, comps, cutoff)
    raise ValueError("threshold must be 'conditional' or 'unconditional'")


def delta_m_covar(mix: PredictiveMixture, q: RiskQuery) -> float:
    """Multiple-Delta-CoVaR: distress measure minus the all-at-median baseline."""
    if not q.distress:
        raise ValueError("Delta measures need a nonempty distress set")
    return multiple_covar(mix, q) - multiple_covar(mix, replace(q, distress=()))


def delta_m_coes(mix: PredictiveMixture, q: RiskQuery, threshold: str = "conditional") -> float:
    """Multiple-Delta-CoES: distress measure minus the all-at-median-ES baseline."""
    if not q.distress:
        raise ValueError("Delta measures need a nonempty distress set")
    base = multiple_coes(mix, replace(q, distress=()), threshold=threshold)
    return multiple_coes(mix, q, threshold=threshold) - base


def total_risk_series(fit: FitResult, measure: str = "both", tau1: float = 0.05,
                      tau2: float = 0.05, *, h: int = 1, probs: str = "filtered"):
    """Per-sector total risk: the Multiple measure with every other sector distressed.

    Returns one RiskSeries per sector, evaluated on the h-step predictive
    mixture at each in-sample time index.  measure selects which of the
    CoVaR / CoES families to compute ('covar', 'coes' or 'both'); marginal
    VaR/ES at tau1 are always included.
    """
    if measure not in ("covar", "coes", "both"):
        raise ValueError("measure must be 'covar', 'coes' or 'both'")
    t_len = fit.filtered.shape[0]
    p = fit.model.dim
    out = []
    for i in range(p):
        others = tuple(j for j in range(p) if j != i)
        series = RiskSeries(
            target=i,
            distress=others,
            tau1=tau1,
            tau2=tau2,
            var=np.empty(t_len),
            es=np.empty(t_len),
        )
        do_covar = measure in ("covar", "both")
        do_coes = measure in ("coes", "both")
        if do_covar:
            series.covar = np.empty(t_len)
            series.delta_covar = np.empty(t_len)
        if do_coes:
            series.coes = np.empty(t_len)
            series.delta_coes = np.empty(t_len)
        query = RiskQuery(target=i, distress=others, tau1=tau1, tau2=tau2)
        for t in range(t_len):
            mix = build_predictive(fit, t, h=h, probs=probs)
            series.var[t] = marginal_var(mix, i, tau1)
            series.es[t] = marginal_es(mix, i, tau1)
            if do_covar:
                series.covar[t] = multiple_covar(mix, query)
                series.delta_covar[t] = series.covar[t] - multiple_covar(
                    mix, replace(query, distress=())
                )
            if do_coes:
                series.coes[t] = multiple_coes(mix, query)
                series.delta_coes[t] = series.coes[t] - multiple_coes(
                    mix, replace(query, distress=())
                )
        out.append(series)
    return out


def marginalize_fit(fit: FitResult, indices) -> FitResult:
    """Restrict a fitted model to a coordinate subset.

    The hidden chain (and hence filtered/smoothed probabilities) is
    unchanged; regime emissions become their marginals on the kept
    coordinates.  The log-likelihood no longer applies and is set to NaN.
    """
    idx = list(indices)
    model = MsTModel(
        [marginal_mvt(r, idx) for r in fit.model.regimes],
        fit.model.transition,
        fit.model.initial,
    )
    return FitResult(
        model=model,
        loglik=float("nan"),
        iterations=fit.iterations,
        converged=fit.converged,
        smoothed=fit.smoothed,
        filtered=fit.filtered,
    )


def standard_pairwise_delta(fit_bivariate: FitResult, target: int, measure: str = "covar",
                            tau1: float = 0.05, tau2: float = 0.05, *, h: int = 1,
                            probs: str = "filtered") -> np.ndarray:
    """Standard (single-conditioner) Delta series from a bivariate fit.

    target is the column (0 or 1) of the bivariate model whose risk is
    measured; the other column is the lone conditioner.  Used for
    comparison against the Shapley share of the same pair inside the full
    model; the two coincide only under conditional independence.
    """
    if fit_bivariate.model.dim != 2:
        raise ValueError("standard pairwise Delta needs a bivariate model")
    if target not in (0, 1):
        raise ValueError("target must be 0 or 1")
    if measure not in ("covar", "coes"):
        raise ValueError("measure must be 'covar' or 'coes'")
    delta_fn = delta_m_covar if measure == "covar" else delta_m_coes
    query = RiskQuery(target=target, distress=(1 - target,), tau1=tau1, tau2=tau2)
    t_len = fit_bivariate.filtered.shape[0]
    out = np.empty(t_len)
    for t in range(t_len):
        mix = build_predictive(fit_bivariate, t, h=h, probs=probs)
        out[t] = delta_fn(mix, query)
    return out


def write_risk_csv(path, dates, names, series_list, measure: str = "both") -> None:
    """Risk series CSV: (date, target, distress_set, measure, tau1, tau2, value).

    The distress set is encoded as the sorted member names joined by '+'.
    """
    rows = []
    for s in series_list:
        dset = "+".join(sorted(names[j] for j in s.distress))
        fields = {
            "var": s.var,
            "es": s.es,
            "covar": s.covar,
            "coes": s.coes,
            "delta_covar": s.delta_covar,
            "delta_coes": s.delta_coes,
        }
        for label, values in fields.items():
            if values is None:
                continue
            for t, d in enumerate(dates):
                rows.append(
                    (d.isoformat(), names[s.target], dset, label,
                     s.tau1, s.tau2, repr(float(values[t])))
                )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["date", "target", "distress_set", "measure", "tau1", "tau2", "value"]
        )
        writer.writerows(rows)
