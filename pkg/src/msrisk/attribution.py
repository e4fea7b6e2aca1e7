"""Shapley-value allocation of Delta co-risk across contributing sectors.

The characteristic function of the cooperative game maps every distress
coalition S of the other sectors to the Multiple-Delta measure of the
target given S; the Shapley value splits the grand-coalition value among
contributors by exact subset enumeration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corisk import (
    CSV_SCHEMA,
    RiskQuery,
    conditional_mixture,
    marginal_es,
    marginal_var,
)
from .markov import FitResult
from .predictive import PredictiveMixture, build_predictive
from .studentt import mixture_es, mixture_quantile

MAX_PLAYERS = 20


@dataclass(frozen=True)
class CharacteristicMap:
    """Coalition values v(S) for one target; v(empty) = 0 exactly."""

    target: int
    players: tuple
    values: dict

    def __post_init__(self):
        players = tuple(self.players)
        object.__setattr__(self, "players", players)
        values = {frozenset(s): float(v) for s, v in self.values.items()}
        values[frozenset()] = 0.0
        object.__setattr__(self, "values", values)
        n = len(players)
        if len(values) != 2**n:
            raise ValueError(
                f"characteristic map must cover all {2**n} subsets, got {len(values)}"
            )
        for s in values:
            if not s <= frozenset(players):
                raise ValueError(f"coalition {set(s)} outside the player set")

    @property
    def grand_value(self) -> float:
        return self.values[frozenset(self.players)]


@dataclass(frozen=True)
class ShapleyReport:
    """Per-contributor shares of the grand-coalition value for one target."""

    target: int
    shares: dict
    grand_value: float


def shapley(cmap: CharacteristicMap) -> ShapleyReport:
    """Exact Shapley value by subset enumeration.

    ShV_j = sum over S not containing j of
            |S|! (n - |S| - 1)! / n! * (v(S + j) - v(S)).
    Additivity (shares sum to v(N)) holds by construction up to round-off.
    """
    players = cmap.players
    n = len(players)
    fact = [math.factorial(i) for i in range(n + 1)]
    shares = {}
    for j in players:
        rest = [q for q in players if q != j]
        total = 0.0
        for size in range(n):
            w = fact[size] * fact[n - size - 1] / fact[n]
            for s in combinations(rest, size):
                s = frozenset(s)
                total += w * (cmap.values[s | {j}] - cmap.values[s])
        shares[j] = total
    return ShapleyReport(target=cmap.target, shares=shares, grand_value=cmap.grand_value)


def characteristic_values(mix: PredictiveMixture, target: int, measure: str = "covar",
                          tau1: float = 0.05, tau2: float = 0.05) -> CharacteristicMap:
    """Delta measure of the target for every distress coalition of the others.

    Marginal conditioning levels and the all-at-median baseline are
    computed once and shared across coalitions.  Any failure aborts the
    whole map; partial maps are invalid.
    """
    if measure not in ("covar", "coes"):
        raise ValueError("measure must be 'covar' or 'coes'")
    p = mix.dim
    players = tuple(j for j in range(p) if j != target)
    if len(players) > MAX_PLAYERS:
        raise ValueError(
            f"{len(players)} contributors exceed the exact-enumeration guard "
            f"of {MAX_PLAYERS}"
        )
    level_fn = marginal_var if measure == "covar" else marginal_es
    distress_level = {j: level_fn(mix, j, tau2) for j in players}
    normal_level = {j: level_fn(mix, j, 0.5) for j in players}

    def evaluate(coalition):
        values = [
            distress_level[j] if j in coalition else normal_level[j] for j in players
        ]
        weights, comps = conditional_mixture(mix, target, list(players), values)
        if measure == "covar":
            return mixture_quantile(weights, comps, tau1)
        return mixture_es(weights, comps, tau1)

    baseline = evaluate(frozenset())
    values = {frozenset(): 0.0}
    for size in range(1, len(players) + 1):
        for s in combinations(players, size):
            values[frozenset(s)] = evaluate(frozenset(s)) - baseline
    return CharacteristicMap(target=target, players=players, values=values)


def characteristic_values_at(fit: FitResult, t: int, target: int, measure: str = "covar",
                             tau1: float = 0.05, tau2: float = 0.05, *, h: int = 1,
                             probs: str = "filtered") -> CharacteristicMap:
    """Characteristic map on the h-step predictive mixture at time t."""
    mix = build_predictive(fit, t, h=h, probs=probs)
    return characteristic_values(mix, target, measure, tau1, tau2)


@dataclass
class AttributionSeries:
    """Time series of Shapley shares per (target, contributor) pair."""

    targets: tuple
    tau1: float
    tau2: float
    measure: str
    shares: dict
    grand: dict


def attribution_series(fit: FitResult, measure: str = "covar", tau1: float = 0.05,
                       tau2: float = 0.05, *, h: int = 1, probs: str = "filtered",
                       targets=None) -> AttributionSeries:
    """Shapley attribution at every in-sample time index.

    Emits one share series per (target, contributor) pair plus the
    grand-coalition Delta per target.
    """
    p = fit.model.dim
    t_len = fit.filtered.shape[0]
    targets = tuple(range(p)) if targets is None else tuple(targets)
    shares = {
        (i, j): np.empty(t_len) for i in targets for j in range(p) if j != i
    }
    grand = {i: np.empty(t_len) for i in targets}
    for t in range(t_len):
        mix = build_predictive(fit, t, h=h, probs=probs)
        for i in targets:
            report = shapley(characteristic_values(mix, i, measure, tau1, tau2))
            grand[i][t] = report.grand_value
            for j, share in report.shares.items():
                shares[(i, j)][t] = share
    return AttributionSeries(
        targets=targets, tau1=tau1, tau2=tau2, measure=measure,
        shares=shares, grand=grand,
    )


def vis_a_vis(fit: FitResult, pair, measure: str = "covar", tau1: float = 0.05,
              tau2: float = 0.05, *, h: int = 1, probs: str = "filtered"):
    """Paired share series for two sectors: (share of b on a, share of a on b)."""
    a, b = pair
    if a == b:
        raise ValueError("vis-a-vis needs two distinct sectors")
    series = attribution_series(
        fit, measure, tau1, tau2, h=h, probs=probs, targets=(a, b)
    )
    return series.shares[(a, b)], series.shares[(b, a)]


def write_attribution_csv(path, dates, names, series: AttributionSeries) -> None:
    """Attribution CSV: (date, target, contributor, measure, share, grand_value)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["date", "target", "contributor", "measure", "share", "grand_value"]
        )
        for (i, j), values in sorted(series.shares.items()):
            for t, d in enumerate(dates):
                writer.writerow(
                    (d.isoformat(), names[i], names[j], series.measure,
                     repr(float(values[t])), repr(float(series.grand[i][t])))
                )


def write_attribution_json(path, dates, names, series: AttributionSeries) -> None:
    """Nested per-date JSON variant of the attribution output."""
    records = []
    for t, d in enumerate(dates):
        entry = {"date": d.isoformat(), "targets": {}}
        for i in series.targets:
            entry["targets"][names[i]] = {
                "grand_value": float(series.grand[i][t]),
                "shares": {
                    names[j]: float(series.shares[(i, j)][t])
                    for j in range(len(names))
                    if (i, j) in series.shares
                },
            }
        records.append(entry)
    doc = {
        "schema": "msrisk/1",
        "measure": series.measure,
        "tau1": series.tau1,
        "tau2": series.tau2,
        "records": records,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
