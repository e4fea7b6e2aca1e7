"""Markov-switching Student-t models and joint tail-risk measures.

Fits L-state multivariate Student-t regime-switching models to return
panels, builds h-step-ahead predictive mixtures, computes Multiple-CoVaR /
Multiple-CoES and their Delta variants, and attributes total co-risk
across sectors with exact Shapley values.
"""

from .attribution import (
    AttributionSeries,
    CharacteristicMap,
    ShapleyReport,
    attribution_series,
    characteristic_values,
    shapley,
    vis_a_vis,
)
from .corisk import (
    RiskQuery,
    RiskSeries,
    delta_m_coes,
    delta_m_covar,
    marginal_es,
    marginal_var,
    marginalize_fit,
    multiple_coes,
    multiple_covar,
    standard_pairwise_delta,
    total_risk_series,
)
from .markov import (
    FitResult,
    MsTModel,
    SelectionTable,
    decompose_sigma,
    em_fit,
    fit_restarts,
    forward_loglik,
    information_criteria,
    param_count,
    select_L,
    smooth,
)
from .panel import ReturnPanel, SummaryStats, load_csv, prices_to_log_returns, summary_stats
from .predictive import PredictiveMixture, build_predictive, predictive_weights
from .simulate import (
    SimSpec,
    brute_force_loglik,
    brute_force_posteriors,
    grid_conditional_quantile,
    sample_path,
)
from .studentt import (
    MvtParams,
    condition_mvt,
    marginal_mvt,
    mixture_es,
    mixture_quantile,
    mvt_logpdf,
    t_cdf,
    t_es,
    t_quantile,
)

__version__ = "0.1.0"
