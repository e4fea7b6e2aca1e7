"""Joint tail-risk measures on the predictive mixture.

Fits a two-regime model to a simulated 3-series panel, then computes the
one-step-ahead marginal VaR/ES and the Multiple-CoVaR / Multiple-CoES
family: each sector's tail risk when all other sectors sit at their own
tail levels, versus the all-at-median baseline.
"""

import numpy as np

from msrisk import (
    MsTModel,
    MvtParams,
    delta_m_covar,
    fit_restarts,
    sample_path,
    total_risk_series,
)
from msrisk.corisk import RiskQuery
from msrisk.predictive import build_predictive
from msrisk.simulate import SimSpec

corr = np.array([[1.0, 0.7, 0.3], [0.7, 1.0, 0.4], [0.3, 0.4, 1.0]])
truth = MsTModel(
    [
        MvtParams([0.002, 0.002, 0.001], 0.010**2 * corr, 7.0),
        MvtParams([-0.005, -0.006, -0.004], 0.032**2 * corr, 5.0),
    ],
    np.array([[0.95, 0.05], [0.10, 0.90]]),
    [0.5, 0.5],
)
_, panel = sample_path(SimSpec(truth, T=700, seed=23))
fit = fit_restarts(panel, 2, n_restarts=3, seed=0)

series = total_risk_series(fit, measure="both", tau1=0.05, tau2=0.05)
print("total risk at the last in-sample date (tau1 = tau2 = 0.05):")
print(f"{'target':>8} {'VaR':>9} {'ES':>9} {'CoVaR':>9} {'CoES':>9} "
      f"{'dCoVaR':>9} {'dCoES':>9}")
for s in series:
    t = -1
    print(f"{panel.names[s.target]:>8} {s.var[t]:>9.4f} {s.es[t]:>9.4f} "
          f"{s.covar[t]:>9.4f} {s.coes[t]:>9.4f} "
          f"{s.delta_covar[t]:>9.4f} {s.delta_coes[t]:>9.4f}")

print("\nDelta-CoVaR of s1 by distress set (last date):")
mix = build_predictive(fit, panel.n_obs - 1)
for distress in [(1,), (2,), (1, 2)]:
    names = "+".join(panel.names[j] for j in distress)
    delta = delta_m_covar(mix, RiskQuery(0, distress, 0.05, 0.05))
    print(f"  {{{names}}}: {delta:.4f}")

print("\nLarger distress sets drag the conditional tail further down; the")
print("strongly correlated neighbour contributes most of the co-movement.")
