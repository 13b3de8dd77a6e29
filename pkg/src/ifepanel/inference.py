"""Sandwich covariances, mean-group estimation, jackknife bias correction,
and average partial effects for a fitted model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, EstimationError, PanelModelError
from .estimator import FitConfig, FitResult, fit
from .likelihood import info_weight, score_weight
from .links import LinkFamily
from .panel import DEFAULT_CLAMP, PanelData, clamp_index, linear_index

__all__ = [
    "CovarianceSet",
    "MeanGroupResult",
    "ApeResult",
    "covariances",
    "mean_group",
    "mean_group_covariance",
    "jackknife_combine",
    "jackknife_bias_correct",
    "average_partial_effects",
]


@dataclass(frozen=True)
class CovarianceSet:
    """Per-unit and per-period covariance ingredients and sandwich variances.

    score_cov_* are the outer products weighted by the squared residual
    weight; info_* use the information weight and form the sandwich bread.
    Units/periods whose bread was singular (pseudo-inverse used) are listed.
    """

    score_cov_unit: np.ndarray  # N x k x k
    info_unit: np.ndarray  # N x k x k
    score_cov_period: np.ndarray  # T x d x d
    info_period: np.ndarray  # T x d x d
    var_unit: np.ndarray  # N x k x k; sandwich / T
    var_period: np.ndarray  # T x d x d; sandwich / N
    singular_units: tuple
    singular_periods: tuple


@dataclass(frozen=True)
class MeanGroupResult:
    """Cross-sectional average of slopes with its covariance estimate."""

    beta_bar: np.ndarray
    covariance: np.ndarray
    beta_corrected: np.ndarray = None


@dataclass(frozen=True)
class ApeResult:
    """Per-unit average partial effects, N x d_beta."""

    delta: np.ndarray


def _fit_weights(data, fit_result, clamp):
    z = clamp_index(linear_index(data, fit_result.params).z, clamp)
    w = score_weight(data.y, z, fit_result.link)
    v = info_weight(z, fit_result.link)
    return z, w, v


def _unit_design(data, params):
    n, t = data.y.shape
    f_b = np.broadcast_to(params.factors[None, :, :], (n, t, params.num_factors))
    return np.concatenate([data.x, f_b], axis=2)


def _solve_each(mats, rhs_blocks):
    """Invert each block against rhs; fall back to pseudo-inverse, flagging."""
    out = np.empty_like(rhs_blocks)
    flagged = []
    for i in range(mats.shape[0]):
        try:
            out[i] = np.linalg.solve(mats[i], rhs_blocks[i])
        except np.linalg.LinAlgError:
            out[i] = np.linalg.pinv(mats[i]) @ rhs_blocks[i]
            flagged.append(i)
    return out, flagged


def covariances(
    data: PanelData, fit_result: FitResult, link: LinkFamily = None, clamp=DEFAULT_CLAMP
) -> CovarianceSet:
    """Per-unit and per-period covariance estimators and their sandwiches.

    The unit sandwich is info^-1 score_cov info^-1 / T; the period
    sandwich is the loading analogue divided by N.
    """
    if link is not None and fit_result.link is not None and link.kind != fit_result.link.kind:
        raise DataValidationError("link disagrees with the link used by the fit")
    z, w, v = _fit_weights(data, fit_result, clamp)
    params = fit_result.params
    n, t = data.y.shape
    u = _unit_design(data, params)
    w2 = w * w
    score_cov_unit = np.einsum("it,itk,itl->ikl", w2, u, u) / t
    info_unit = np.einsum("it,itk,itl->ikl", v, u, u) / t
    g = params.loadings
    score_cov_period = np.einsum("it,ik,il->tkl", w2, g, g) / n
    info_period = np.einsum("it,ik,il->tkl", v, g, g) / n

    bread_u, flag_u = _solve_each(info_unit, score_cov_unit)
    var_unit = np.empty_like(score_cov_unit)
    for i in range(n):
        try:
            var_unit[i] = np.linalg.solve(info_unit[i], bread_u[i].T).T / t
        except np.linalg.LinAlgError:
            var_unit[i] = (np.linalg.pinv(info_unit[i]) @ bread_u[i].T).T / t
            if i not in flag_u:
                flag_u.append(i)

    d = params.num_factors
    var_period = np.empty((t, d, d))
    flag_t = []
    if d > 0:
        bread_t, flag_t = _solve_each(info_period, score_cov_period)
        for s in range(t):
            try:
                var_period[s] = np.linalg.solve(info_period[s], bread_t[s].T).T / n
            except np.linalg.LinAlgError:
                var_period[s] = (np.linalg.pinv(info_period[s]) @ bread_t[s].T).T / n
                if s not in flag_t:
                    flag_t.append(s)

    return CovarianceSet(
        score_cov_unit=score_cov_unit,
        info_unit=info_unit,
        score_cov_period=score_cov_period,
        info_period=info_period,
        var_unit=var_unit,
        var_period=var_period,
        singular_units=tuple(sorted(flag_u)),
        singular_periods=tuple(sorted(flag_t)),
    )


def mean_group(fit_result: FitResult) -> np.ndarray:
    """Cross-sectional average of the per-unit slopes."""
    slopes = fit_result.params.slopes
    if slopes.shape[1] < 1:
        raise DataValidationError("mean-group estimator needs at least one regressor")
    return slopes.mean(axis=0)


def mean_group_covariance(
    data: PanelData, fit_result: FitResult, link: LinkFamily = None, clamp=DEFAULT_CLAMP
) -> np.ndarray:
    """Covariance estimate for the mean-group slope average.

    Averages the squared residual weight times the slope rows of each
    unit's inverted information matrix applied to the unit design vector.
    Singular information matrices fall back to the pseudo-inverse.
    """
    params = fit_result.params
    p = params.n_regressors
    if p < 1:
        raise DataValidationError("mean-group covariance needs at least one regressor")
    z, w, v = _fit_weights(data, fit_result, clamp)
    n, t = data.y.shape
    u = _unit_design(data, params)
    info_unit = np.einsum("it,itk,itl->ikl", v, u, u) / t
    k = u.shape[2]
    out = np.zeros((p, p))
    eye = np.eye(k)
    for i in range(n):
        try:
            inv = np.linalg.solve(info_unit[i], eye)
        except np.linalg.LinAlgError:
            inv = np.linalg.pinv(info_unit[i])
        a = u[i] @ inv[:p].T  # T x p rows: slope block of info^-1 applied to u_it
        out += (a * (w[i] * w[i])[:, None]).T @ a
    return out / (n * t)


def jackknife_combine(full, s1, s2, t_odd, t_even) -> np.ndarray:
    """3 * full - (s1 + s2 + t_odd + t_even) / 2, elementwise."""
    full = np.asarray(full, dtype=np.float64)
    return 3.0 * full - (
        np.asarray(s1, dtype=np.float64)
        + np.asarray(s2, dtype=np.float64)
        + np.asarray(t_odd, dtype=np.float64)
        + np.asarray(t_even, dtype=np.float64)
    ) / 2.0


def jackknife_bias_correct(
    data: PanelData, link: LinkFamily, cfg: FitConfig, split_seed: int = 0
) -> np.ndarray:
    """Half-panel jackknife of the mean-group slope average.

    Combines the full-panel estimate with two random unit halves (full
    time span) and the alternating (odd/even position) time halves. With
    an odd unit count the last unit is dropped from the unit halves only.
    """
    if data.n_periods < 4:
        raise DataValidationError("jackknife needs T >= 4")
    full_fit = fit(data, link, cfg)
    beta_full = mean_group(full_fit)

    n = data.n_units
    n_even = n if n % 2 == 0 else n - 1
    rng = np.random.default_rng(split_seed)
    perm = rng.permutation(n_even)
    halves = {
        "units_first_half": np.sort(perm[: n_even // 2]),
        "units_second_half": np.sort(perm[n_even // 2 :]),
        "periods_odd": np.arange(0, data.n_periods, 2),
        "periods_even": np.arange(1, data.n_periods, 2),
    }
    subs = {}
    for name, idx in halves.items():
        sub = (
            data.subset_units(idx) if name.startswith("units") else data.subset_periods(idx)
        )
        try:
            subs[name] = mean_group(fit(sub, link, cfg))
        except PanelModelError as exc:
            raise EstimationError(f"jackknife sub-fit {name} failed: {exc}") from exc
    return jackknife_combine(
        beta_full,
        subs["units_first_half"],
        subs["units_second_half"],
        subs["periods_odd"],
        subs["periods_even"],
    )


def average_partial_effects(
    data: PanelData, fit_result: FitResult, link: LinkFamily = None, clamp=DEFAULT_CLAMP
) -> ApeResult:
    """Per-unit average partial effects: mean density times the unit's slopes."""
    params = fit_result.params
    use_link = link if link is not None else fit_result.link
    z = clamp_index(linear_index(data, params).z, clamp)
    mean_density = use_link.pdf(z).mean(axis=1)
    return ApeResult(delta=mean_density[:, None] * params.slopes)
