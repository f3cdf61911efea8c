"""Bayesian control charts for Weibull percentiles.

A semi-empirical scheme for monitoring a chosen reliability percentile of
a Weibull process: an inverse Weibull prior on the percentile and a
uniform prior on the shape are updated recursively over all accumulated
subgroups, and probability-based control limits follow from an exact
Gamma transform of the conditional percentile posterior. A companion
chart tracks the stability of the shape estimate.
"""

from .chart import (
    ChartConfig,
    ChartRecord,
    ChartState,
    monitor,
    new_chart,
    restart_after_signal,
    run_phase1,
)
from .distributions import (
    PercentileView,
    WeibullModel,
    gamma_cdf,
    gamma_pdf,
    gamma_quantile,
    inv_weibull_mean,
    inv_weibull_pdf,
    params_from_percentile,
    percentile_of,
    weibull_cdf,
    weibull_moments,
    weibull_sample,
)
from .limits import (
    ControlLimits,
    DEFAULT_ALPHA,
    EXTENDED_ALPHA,
    LimitCheck,
    beta_limit_check,
    beta_limits,
    xr_limit_check,
    xr_limits,
)
from .posterior import (
    PosteriorState,
    absorb_sample,
    beta_bar,
    beta_marginal_log_density,
    estimate_beta,
    estimate_xr,
    initial_state,
    log_likelihood,
    log_t,
    rebuild_windowed,
    t_of_beta,
    xr_conditional_log_pdf,
)
from .prior import (
    PriorSpec,
    elicit_a,
    elicit_b_bar,
    joint_prior_log_pdf,
    make_prior,
    next_prior,
)
from .simulation import (
    GridCell,
    PRESETS,
    RunResult,
    ScenarioSpec,
    StudyResult,
    prior_sensitivity_grid,
    run_replication,
    run_study,
    scenario_from_shift,
    scenario_prior,
)

__version__ = "0.1.0"

__all__ = [
    "ChartConfig",
    "ChartRecord",
    "ChartState",
    "ControlLimits",
    "DEFAULT_ALPHA",
    "EXTENDED_ALPHA",
    "GridCell",
    "LimitCheck",
    "PRESETS",
    "PercentileView",
    "PosteriorState",
    "PriorSpec",
    "RunResult",
    "ScenarioSpec",
    "StudyResult",
    "WeibullModel",
    "absorb_sample",
    "beta_bar",
    "beta_limit_check",
    "beta_limits",
    "beta_marginal_log_density",
    "elicit_a",
    "elicit_b_bar",
    "estimate_beta",
    "estimate_xr",
    "gamma_cdf",
    "gamma_pdf",
    "gamma_quantile",
    "initial_state",
    "inv_weibull_mean",
    "inv_weibull_pdf",
    "joint_prior_log_pdf",
    "log_likelihood",
    "log_t",
    "make_prior",
    "monitor",
    "new_chart",
    "next_prior",
    "params_from_percentile",
    "percentile_of",
    "prior_sensitivity_grid",
    "rebuild_windowed",
    "restart_after_signal",
    "run_phase1",
    "run_replication",
    "run_study",
    "scenario_from_shift",
    "scenario_prior",
    "t_of_beta",
    "weibull_cdf",
    "weibull_moments",
    "weibull_sample",
    "xr_conditional_log_pdf",
    "xr_limit_check",
    "xr_limits",
]
