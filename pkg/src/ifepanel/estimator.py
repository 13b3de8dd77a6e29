"""Alternating maximum-likelihood estimation of the binary factor model.

Each outer iteration maximizes every unit's likelihood over its slopes and
loadings with the factors fixed, then every period's likelihood over its
factor with the unit parameters fixed, then renormalizes the factor matrix.
Multiple random initializations are run and the best final likelihood wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DataValidationError, NumericalDomainError, RankDeficiencyError
from .links import LinkFamily
from .panel import DEFAULT_CLAMP, PanelData, ParameterSet

__all__ = ["FitConfig", "FitResult", "fit", "unit_update", "time_update", "normalize_factors"]


@dataclass(frozen=True)
class FitConfig:
    """Settings for one estimation run.

    ``epsilon`` is the stop tolerance on the scaled slope change
    (1/sqrt(N)) * ||slopes_new - slopes_old||; when there are no regressors
    the loadings take the slopes' place in the rule.
    """

    num_factors: int
    epsilon: float = 1e-6
    max_outer_iters: int = 500
    newton_max_iter: int = 50
    newton_gtol: float = 1e-8
    newton_max_halvings: int = 30
    n_starts: int = 5
    rng_seed: int = 0
    clamp: tuple = DEFAULT_CLAMP

    def __post_init__(self):
        if self.num_factors < 0:
            raise DataValidationError("num_factors must be >= 0")
        if not self.epsilon > 0:
            raise DataValidationError("epsilon must be positive")
        if self.n_starts < 1:
            raise DataValidationError("n_starts must be >= 1")

    def with_num_factors(self, d: int) -> "FitConfig":
        return replace(self, num_factors=d)


@dataclass(frozen=True)
class FitResult:
    """Converged parameters plus run diagnostics."""

    params: ParameterSet
    loglik: float
    outer_iters: int
    converged: bool
    loglik_trace: tuple
    start_index: int
    link: LinkFamily = None
    separated_units: tuple = field(default_factory=tuple)


def normalize_factors(factors: np.ndarray):
    """Rescale a full-rank T x d factor matrix so (1/T) F'F = I.

    Returns (F_norm, R) with F_norm = F @ R, column signs fixed so each
    column's largest-magnitude entry is positive. R lets callers
    counter-rotate loadings to keep the loading-factor product unchanged.
    Uses the polar factor of F, so an already-normalized F maps to itself.
    """
    factors = np.asarray(factors, dtype=np.float64)
    t, d = factors.shape
    if d == 0:
        return factors.copy(), np.zeros((0, 0))
    u, s, vh = np.linalg.svd(factors, full_matrices=False)
    tol = max(t, d) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    deficient = s <= tol
    if np.any(deficient):
        col = int(np.argmax(deficient))
        raise RankDeficiencyError(
            f"factor matrix is rank deficient (singular direction {col})", column=col
        )
    f_norm = np.sqrt(t) * (u @ vh)
    r = vh.T @ ((np.sqrt(t) / s)[:, None] * vh)
    signs = np.ones(d)
    for j in range(d):
        pivot = np.argmax(np.abs(f_norm[:, j]))
        signs[j] = 1.0 if f_norm[pivot, j] >= 0 else -1.0
    return f_norm * signs, r * signs


def _link_args(link: LinkFamily, clamp):
    return (link.code, link.lo, link.hi, float(clamp[0]), float(clamp[1]))


def _newton_args(cfg: FitConfig):
    return (cfg.newton_max_iter, cfg.newton_gtol, cfg.newton_max_halvings)


def _separated_rows(y: np.ndarray) -> np.ndarray:
    sums = y.sum(axis=1)
    return np.flatnonzero((sums == 0) | (sums == y.shape[1]))


def _cap_at_clamp(x, slopes, loadings, factors, units, clamp_hi):
    """Rescale flagged units so their index stays inside the clamp region."""
    for i in units:
        z = x[i] @ slopes[i]
        if factors.shape[1] > 0:
            z = z + factors @ loadings[i]
        m = np.max(np.abs(z))
        if m > clamp_hi:
            scale = clamp_hi / m
            slopes[i] *= scale
            loadings[i] *= scale


def _single_run(data, link, cfg, start_index, separated):
    y, x = data.y, data.x
    n, t = y.shape
    p = x.shape[2]
    d = cfg.num_factors
    largs = _link_args(link, cfg.clamp)
    nargs = _newton_args(cfg)

    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, start_index]))
    if d > 0:
        factors, _ = normalize_factors(rng.standard_normal((t, d)))
    else:
        factors = np.zeros((t, 0))
    slopes = np.zeros((n, p))
    loadings = np.zeros((n, d))
    theta = np.zeros((n, p + d))

    trace = [kernels.panel_loglik(y, x, slopes, loadings, factors, *largs)]
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer_iters + 1):
        prev = slopes.copy() if p > 0 else loadings.copy()
        theta, _ = kernels.unit_sweep(y, x, factors, theta, *largs, *nargs)
        slopes = np.ascontiguousarray(theta[:, :p])
        loadings = np.ascontiguousarray(theta[:, p:])
        trace.append(kernels.panel_loglik(y, x, slopes, loadings, factors, *largs))
        if d > 0:
            factors, _ = kernels.factor_sweep(y, x, slopes, loadings, factors, *largs, *nargs)
            factors, rot = normalize_factors(factors)
            loadings = loadings @ np.linalg.inv(rot).T
            theta = np.hstack([slopes, loadings])
            trace.append(kernels.panel_loglik(y, x, slopes, loadings, factors, *largs))
        cur = slopes if p > 0 else loadings
        if np.linalg.norm(cur - prev) / np.sqrt(n) <= cfg.epsilon:
            converged = True
            break

    if separated.size:
        _cap_at_clamp(x, slopes, loadings, factors, separated, float(cfg.clamp[1]))
    loglik = kernels.panel_loglik(y, x, slopes, loadings, factors, *largs)
    if not np.isfinite(loglik):
        raise NumericalDomainError("estimation produced a non-finite log-likelihood")
    return slopes, loadings, factors, loglik, tuple(trace), outer, converged


def fit(data: PanelData, link: LinkFamily, cfg: FitConfig) -> FitResult:
    """Estimate slopes, loadings, and factors by alternating maximization.

    Runs ``cfg.n_starts`` random factor initializations (a single run when
    num_factors = 0, where nothing is random) and keeps the run with the
    highest final log-likelihood; exact ties go to the lowest start index.
    Units whose outcomes never vary are flagged as separated and their
    coefficients are kept inside the clamp region.
    """
    n, t = data.y.shape
    p = data.n_regressors
    d = cfg.num_factors
    if d == 0 and p == 0:
        raise DataValidationError("nothing to estimate: no regressors and no factors")
    if d > 0 and (t <= d or n <= d):
        raise DataValidationError(
            f"num_factors={d} needs N > {d} and T > {d}, got N={n}, T={t}"
        )
    separated = _separated_rows(data.y)

    n_starts = 1 if d == 0 else cfg.n_starts
    best = None
    best_start = -1
    for s in range(n_starts):
        run = _single_run(data, link, cfg, s, separated)
        if best is None or run[3] > best[3]:
            best = run
            best_start = s
    slopes, loadings, factors, loglik, trace, outer, converged = best
    params = ParameterSet(slopes=slopes, loadings=loadings, factors=factors)
    return FitResult(
        params=params,
        loglik=float(loglik),
        outer_iters=outer,
        converged=converged,
        loglik_trace=trace,
        start_index=best_start,
        link=link,
        separated_units=tuple(int(i) for i in separated),
    )


def unit_update(
    data: PanelData, params: ParameterSet, link: LinkFamily, i: int, cfg: FitConfig = None
) -> np.ndarray:
    """One damped-Newton maximization of unit i's likelihood, factors fixed.

    Returns the updated (slopes_i, loadings_i) row; the unit's likelihood
    never decreases.
    """
    cfg = cfg if cfg is not None else FitConfig(num_factors=params.num_factors)
    x_i = data.x[i]
    u = np.hstack([x_i, params.factors]) if params.num_factors else x_i
    theta0 = params.theta()[i]
    theta, _ = kernels.newton(
        np.ascontiguousarray(data.y[i]),
        np.ascontiguousarray(u),
        np.zeros(data.n_periods),
        theta0,
        *_link_args(link, cfg.clamp),
        *_newton_args(cfg),
    )
    return theta


def time_update(
    data: PanelData, params: ParameterSet, link: LinkFamily, t: int, cfg: FitConfig = None
) -> np.ndarray:
    """One damped-Newton maximization of period t's factor, unit parameters fixed."""
    cfg = cfg if cfg is not None else FitConfig(num_factors=params.num_factors)
    if data.n_regressors:
        offsets = np.einsum("ip,ip->i", data.x[:, t, :], params.slopes)
    else:
        offsets = np.zeros(data.n_units)
    f_new, _ = kernels.newton(
        np.ascontiguousarray(data.y[:, t]),
        params.loadings,
        np.ascontiguousarray(offsets),
        params.factors[t],
        *_link_args(link, cfg.clamp),
        *_newton_args(cfg),
    )
    return f_new
