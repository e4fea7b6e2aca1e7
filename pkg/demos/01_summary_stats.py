"""Panel ingestion and descriptive statistics.

Simulates a weekly return panel from a two-regime Student-t model, then
reports the per-series summary table: moments, Jarque-Bera statistic and
the 1% empirical stress level.
"""

import numpy as np

from msrisk import MsTModel, MvtParams, sample_path, summary_stats
from msrisk.simulate import SimSpec

corr = np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]])
model = MsTModel(
    [
        MvtParams([0.002, 0.001, 0.002], 0.012**2 * corr, 8.0),
        MvtParams([-0.004, -0.005, -0.003], 0.035**2 * corr, 5.0),
    ],
    np.array([[0.97, 0.03], [0.08, 0.92]]),
    [0.5, 0.5],
)

states, panel = sample_path(SimSpec(model, T=800, seed=42))
print(f"panel: T={panel.n_obs}, p={panel.n_series}, "
      f"{panel.dates[0]} .. {panel.dates[-1]}")
print(f"time spent in the turbulent regime: {np.mean(states == 1):.1%}\n")

stats = summary_stats(panel, alpha=0.01)
header = f"{'series':>8} {'mean':>9} {'std':>8} {'skew':>7} {'kurt':>7} " \
         f"{'1% level':>9} {'JB':>10}"
print(header)
for i, name in enumerate(stats.names):
    print(f"{name:>8} {stats.mean[i]:>9.5f} {stats.std[i]:>8.5f} "
          f"{stats.skewness[i]:>7.2f} {stats.kurtosis[i]:>7.2f} "
          f"{stats.quantile[i]:>9.5f} {stats.jb[i]:>10.1f}")

print("\nHeavy tails and regime switching leave kurtosis well above 3 and")
print("a Jarque-Bera statistic far beyond the chi-squared(2) 99% point (9.21).")
