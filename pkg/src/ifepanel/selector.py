"""Information criterion for choosing the number of latent factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, PanelModelError
from .estimator import FitConfig, FitResult, fit
from .links import LinkFamily
from .panel import DEFAULT_CLAMP, PanelData, clamp_index, linear_index

__all__ = ["SelectionResult", "ic_value", "default_penalty", "select_num_factors"]


@dataclass(frozen=True)
class SelectionResult:
    """Criterion values per candidate factor count and the chosen count."""

    ic_values: dict
    chosen_d: int
    fits: dict
    failures: dict

    @property
    def chosen_fit(self) -> FitResult:
        return self.fits[self.chosen_d]


def default_penalty(n_units: int, n_periods: int) -> float:
    """Penalty scale log sqrt(N + T); diverges yet is o(sqrt(NT))."""
    return float(np.log(np.sqrt(n_units + n_periods)))


def ic_value(
    data: PanelData, fit_result: FitResult, d: int, penalty_xi: float, clamp=DEFAULT_CLAMP
) -> float:
    """Mean squared response residual plus d * penalty_xi / sqrt(NT)."""
    n, t = data.y.shape
    z = clamp_index(linear_index(data, fit_result.params).z, clamp)
    probs = fit_result.link.cdf(z)
    mse = float(np.mean((data.y - probs) ** 2))
    return mse + d * penalty_xi / np.sqrt(n * t)


def select_num_factors(
    data: PanelData,
    link: LinkFamily,
    cfg: FitConfig,
    d_max: int,
    penalty_xi: float = None,
) -> SelectionResult:
    """Fit every candidate count 0..d_max and keep the criterion minimizer.

    Every candidate fit reuses the same seed ladder so criterion
    differences reflect the factor count, not initialization luck. Ties
    break toward the smaller count; candidates whose fit fails are
    excluded with the failure reason recorded.
    """
    if d_max < 0:
        raise EstimationError("d_max must be >= 0")
    if d_max >= min(data.n_units, data.n_periods):
        raise EstimationError(
            f"d_max={d_max} must be < min(N, T) = {min(data.n_units, data.n_periods)}"
        )
    xi = default_penalty(data.n_units, data.n_periods) if penalty_xi is None else penalty_xi
    fits, ic_values, failures = {}, {}, {}
    for d in range(d_max + 1):
        try:
            res = fit(data, link, cfg.with_num_factors(d))
        except PanelModelError as exc:
            failures[d] = str(exc)
            continue
        fits[d] = res
        ic_values[d] = ic_value(data, res, d, xi, cfg.clamp)
    if not ic_values:
        raise EstimationError(f"all candidate fits failed: {failures}")
    chosen = min(ic_values, key=lambda d: (ic_values[d], d))
    return SelectionResult(ic_values=ic_values, chosen_d=chosen, fits=fits, failures=failures)
