"""Batch driver: ingest, select, fit, risk and attribution outputs.

Subcommands: stats | select | fit | risk | shapley | simulate.
Configuration is taken from flags, optionally seeded by a JSON file via
--config (flags override file entries).  Every output file is UTF-8
CSV/JSON carrying a schema-version header.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import attribution, corisk, markov, panel, simulate
from .corisk import CSV_SCHEMA
from .predictive import build_predictive
from .studentt import MvtParams


def _add_common(sub):
    sub.add_argument("--config", help="JSON file with default option values")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--seed", type=int, default=0)


def _add_input(sub):
    sub.add_argument("--input", help="panel CSV (first column ISO dates)")
    sub.add_argument(
        "--prices", action="store_true",
        help="input holds prices; convert to log-returns",
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="msrisk",
        description="Markov-switching Student-t co-risk toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="summary statistics per series")
    _add_common(p)
    _add_input(p)
    p.add_argument("--alpha", type=float, default=0.01, help="tail quantile level")

    p = sub.add_parser("select", help="state-count selection by AIC/BIC")
    _add_common(p)
    _add_input(p)
    p.add_argument("--L-range", default="2:6", help="inclusive range, e.g. 2:6")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--criterion", choices=("aic", "bic"), default="aic")

    p = sub.add_parser("fit", help="fit the model and emit state probabilities")
    _add_common(p)
    _add_input(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--restarts", type=int, default=3)

    p = sub.add_parser("risk", help="total-risk series from a fitted model")
    _add_common(p)
    _add_input(p)
    p.add_argument("--model", required=True, help="fitted model JSON")
    p.add_argument("--tau1", type=float, default=0.05)
    p.add_argument("--tau2", type=float, default=0.05)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--measure", choices=("covar", "coes", "both"), default="both")
    p.add_argument("--probs", choices=("filtered", "smoothed"), default="filtered")

    p = sub.add_parser("shapley", help="Shapley attribution series")
    _add_common(p)
    _add_input(p)
    p.add_argument("--model", required=True, help="fitted model JSON")
    p.add_argument("--tau1", type=float, default=0.05)
    p.add_argument("--tau2", type=float, default=0.05)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--measure", choices=("covar", "coes"), default="covar")
    p.add_argument("--probs", choices=("filtered", "smoothed"), default="filtered")
    p.add_argument(
        "--compare-standard", action="store_true",
        help="also emit bivariate standard Delta series per pair",
    )

    p = sub.add_parser("simulate", help="simulate a panel plus ground-truth model")
    _add_common(p)
    p.add_argument("--model", help="model JSON to simulate from")
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--T", type=int, default=500)
    return parser


def _apply_config(args, argv):
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            defaults = json.load(fh)
        for key, value in defaults.items():
            key = key.replace("-", "_")
            opt = "--" + key.replace("_", "-")
            # flags given on the command line win; the config file fills the
            # rest
            given = any(a == opt or a.startswith(opt + "=") for a in argv)
            if hasattr(args, key) and not given:
                setattr(args, key, value)
    return args


def _load_panel(args) -> panel.ReturnPanel:
    if not args.input:
        raise SystemExit("--input is required")
    data = panel.load_csv(args.input)
    if args.prices:
        data = panel.prices_to_log_returns(data)
    return data


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_stats(args) -> int:
    data = _load_panel(args)
    stats = panel.summary_stats(data, alpha=args.alpha)
    out = _outdir(args) / "summary.csv"
    rows = [
        (
            stats.names[i],
            repr(float(stats.minimum[i])),
            repr(float(stats.maximum[i])),
            repr(float(stats.mean[i])),
            repr(float(stats.std[i])),
            repr(float(stats.skewness[i])),
            repr(float(stats.kurtosis[i])),
            repr(float(stats.quantile[i])),
            repr(float(stats.jb[i])),
        )
        for i in range(len(stats.names))
    ]
    _write_csv(
        out,
        ["name", "min", "max", "mean", "std", "skewness", "kurtosis",
         f"quantile_{stats.alpha}", "jb"],
        rows,
    )
    print(f"wrote {out}")
    return 0


def _parse_range(text):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return range(int(lo), int(hi) + 1)
    return [int(text)]


def cmd_select(args) -> int:
    data = _load_panel(args)
    table = markov.select_L(
        data, _parse_range(args.L_range), criterion=args.criterion,
        n_restarts=args.restarts, seed=args.seed,
    )
    out = _outdir(args) / "selection.csv"
    rows = [
        (r.L, repr(r.loglik), r.k, repr(r.aic), repr(r.bic),
         "chosen" if r.L == table.chosen else "", r.error)
        for r in table.rows
    ]
    _write_csv(out, ["L", "loglik", "k", "aic", "bic", "chosen", "error"], rows)
    print(f"wrote {out} (chosen L={table.chosen} by {table.criterion})")
    return 0


def cmd_fit(args) -> int:
    data = _load_panel(args)
    fit = markov.fit_restarts(data, args.L, n_restarts=args.restarts, seed=args.seed)
    outdir = _outdir(args)
    model_path = outdir / "model.json"
    markov.save_model(
        model_path, fit.model,
        labels=data.names, loglik=fit.loglik, t_len=data.n_obs,
    )
    probs_path = outdir / "smoothed.csv"
    header = ["date"] + [f"state_{l+1}" for l in range(fit.model.n_states)]
    rows = [
        [data.dates[t].isoformat()] + [repr(float(v)) for v in fit.smoothed[t]]
        for t in range(data.n_obs)
    ]
    _write_csv(probs_path, header, rows)
    print(f"wrote {model_path} and {probs_path} (loglik={fit.loglik:.3f}, "
          f"converged={fit.converged})")
    return 0


def _fit_from_model_file(args, data):
    model, meta = markov.load_model(args.model)
    if model.dim != data.n_series:
        raise SystemExit(
            f"model dimension {model.dim} != panel dimension {data.n_series}"
        )
    smoothed, _, filtered = markov.smooth(model, data)
    loglik = markov.forward_loglik(model, data)
    return markov.FitResult(
        model=model, loglik=loglik, iterations=0, converged=True,
        smoothed=smoothed, filtered=filtered,
    )


def cmd_risk(args) -> int:
    data = _load_panel(args)
    fit = _fit_from_model_file(args, data)
    series = corisk.total_risk_series(
        fit, measure=args.measure, tau1=args.tau1, tau2=args.tau2,
        h=args.horizon, probs=args.probs,
    )
    out = _outdir(args) / "risk.csv"
    corisk.write_risk_csv(out, data.dates, data.names, series, measure=args.measure)
    print(f"wrote {out}")
    return 0


def cmd_shapley(args) -> int:
    data = _load_panel(args)
    fit = _fit_from_model_file(args, data)
    series = attribution.attribution_series(
        fit, measure=args.measure, tau1=args.tau1, tau2=args.tau2,
        h=args.horizon, probs=args.probs,
    )
    outdir = _outdir(args)
    csv_path = outdir / "attribution.csv"
    attribution.write_attribution_csv(csv_path, data.dates, data.names, series)
    json_path = outdir / "attribution.json"
    attribution.write_attribution_json(json_path, data.dates, data.names, series)
    written = [csv_path, json_path]
    if args.compare_standard:
        pair_measure = args.measure
        rows = []
        p = data.n_series
        for i in range(p):
            for j in range(p):
                if i == j:
                    continue
                pair_fit = markov.fit_restarts(
                    data.select([i, j]), fit.model.n_states,
                    n_restarts=3, seed=args.seed,
                )
                delta = corisk.standard_pairwise_delta(
                    pair_fit, 0, measure=pair_measure,
                    tau1=args.tau1, tau2=args.tau2,
                    h=args.horizon, probs=args.probs,
                )
                for t, d in enumerate(data.dates):
                    rows.append(
                        (d.isoformat(), data.names[i], data.names[j],
                         pair_measure, repr(float(delta[t])))
                    )
        std_path = outdir / "standard_delta.csv"
        _write_csv(
            std_path, ["date", "target", "conditioner", "measure", "delta"], rows
        )
        written.append(std_path)
    print("wrote " + ", ".join(str(w) for w in written))
    return 0


def _default_model(L, p, seed):
    rng = np.random.default_rng(seed)
    regimes = []
    for l in range(L):
        mu = rng.normal(scale=0.005, size=p) + (0.002 if l == 0 else -0.004)
        a = rng.normal(size=(p, p)) * 0.01
        sigma = a @ a.T + 0.01**2 * (l + 1) * np.eye(p)
        regimes.append(MvtParams(mu, sigma, float(rng.uniform(4.0, 12.0))))
    q = np.full((L, L), 0.1 / max(L - 1, 1))
    np.fill_diagonal(q, 0.9 if L > 1 else 1.0)
    return markov.MsTModel(regimes, q, np.full(L, 1.0 / L))


def cmd_simulate(args) -> int:
    if args.model:
        model, _ = markov.load_model(args.model)
    else:
        model = _default_model(args.L, args.p, args.seed)
    states, data = simulate.sample_path(simulate.SimSpec(model, args.T, args.seed))
    outdir = _outdir(args)
    panel_path = outdir / "panel.csv"
    header = ["date"] + list(data.names)
    rows = [
        [data.dates[t].isoformat()] + [repr(float(v)) for v in data.returns[t]]
        for t in range(data.n_obs)
    ]
    _write_csv(panel_path, header, rows)
    truth_path = outdir / "truth_model.json"
    markov.save_model(truth_path, model, labels=data.names, t_len=args.T)
    print(f"wrote {panel_path} and {truth_path}")
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "select": cmd_select,
    "fit": cmd_fit,
    "risk": cmd_risk,
    "shapley": cmd_shapley,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = _build_parser().parse_args(argv)
    args = _apply_config(args, argv)
    try:
        return _COMMANDS[args.command](args)
    except (panel.PanelError, ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
