"""Binary-response heterogeneous panels with interactive fixed effects.

Estimation by alternating maximum likelihood, factor-count selection by
an information criterion, sandwich/jackknife inference, average partial
effects, a Monte Carlo harness, and a rolling minimum-variance backtest.
"""

from .errors import (
    DataValidationError,
    DimensionMismatchError,
    EstimationError,
    NumericalDomainError,
    PanelModelError,
    RankDeficiencyError,
    SingularityError,
)
from .estimator import FitConfig, FitResult, fit, normalize_factors, time_update, unit_update
from .inference import (
    ApeResult,
    CovarianceSet,
    average_partial_effects,
    covariances,
    jackknife_bias_correct,
    jackknife_combine,
    mean_group,
    mean_group_covariance,
)
from .kernels import backend_name
from .likelihood import hessian_f, hessian_theta, loglik, score_f, score_theta
from .links import LOGIT, PROBIT, LinkFamily
from .panel import DEFAULT_CLAMP, LinearIndex, PanelData, ParameterSet, clamp_index, linear_index
from .portfolio import (
    BacktestReport,
    MarketData,
    forecast_probs,
    min_var_weights,
    performance_stats,
    rolling_backtest,
    select_stocks,
    synthetic_market,
)
from .selector import SelectionResult, default_penalty, ic_value, select_num_factors
from .simulation import DgpSpec, McReport, gen_dgp, projection_distance, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "PanelModelError",
    "DimensionMismatchError",
    "DataValidationError",
    "NumericalDomainError",
    "RankDeficiencyError",
    "SingularityError",
    "EstimationError",
    "LinkFamily",
    "PROBIT",
    "LOGIT",
    "PanelData",
    "ParameterSet",
    "LinearIndex",
    "linear_index",
    "clamp_index",
    "DEFAULT_CLAMP",
    "loglik",
    "score_theta",
    "score_f",
    "hessian_theta",
    "hessian_f",
    "FitConfig",
    "FitResult",
    "fit",
    "unit_update",
    "time_update",
    "normalize_factors",
    "SelectionResult",
    "ic_value",
    "default_penalty",
    "select_num_factors",
    "CovarianceSet",
    "ApeResult",
    "covariances",
    "mean_group",
    "mean_group_covariance",
    "jackknife_combine",
    "jackknife_bias_correct",
    "average_partial_effects",
    "DgpSpec",
    "McReport",
    "gen_dgp",
    "projection_distance",
    "run_monte_carlo",
    "MarketData",
    "BacktestReport",
    "rolling_backtest",
    "forecast_probs",
    "select_stocks",
    "min_var_weights",
    "performance_stats",
    "synthetic_market",
    "backend_name",
    "__version__",
]
