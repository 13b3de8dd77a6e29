"""Synthetic data generation and the Monte Carlo evaluation harness.

Case 1 draws light-tailed (normal) errors and estimates with the probit
link; case 2 swaps the normal draws of the error process for logistic
ones and estimates with the logit link. The error process is i.i.d.
(dgp 1) or a cross-sectionally correlated AR(1) (dgp 2: rho 0.3,
dgp 3: rho 0.7) started from a 100-period burn-in.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DataValidationError,
    EstimationError,
    PanelModelError,
    RankDeficiencyError,
)
from .estimator import FitConfig, normalize_factors
from .links import LOGIT, PROBIT, LinkFamily
from .panel import PanelData, ParameterSet
from .selector import select_num_factors

__all__ = [
    "DgpSpec",
    "McReport",
    "gen_dgp",
    "projection_distance",
    "run_monte_carlo",
    "dgp_link",
]

_AR_COEFFS = {1: 0.0, 2: 0.3, 3: 0.7}


@dataclass(frozen=True)
class DgpSpec:
    """One synthetic-panel configuration."""

    case: int = 1
    dgp: int = 1
    n_units: int = 50
    n_periods: int = 50
    n_regressors: int = 2
    num_factors: int = 2
    seed: int = 0
    burn_in: int = 100

    def __post_init__(self):
        if self.case not in (1, 2):
            raise DataValidationError("case must be 1 (light tail) or 2 (heavy tail)")
        if self.dgp not in (1, 2, 3):
            raise DataValidationError("dgp must be 1, 2, or 3")
        if self.n_units < 2 or self.n_periods < 2:
            raise DataValidationError("need at least 2 units and 2 periods")
        if self.dgp != 1 and self.burn_in < 100:
            raise DataValidationError("correlated error processes need burn_in >= 100")


def dgp_link(spec: DgpSpec) -> LinkFamily:
    """The link matched to the spec's error distribution."""
    return PROBIT if spec.case == 1 else LOGIT


def _draw(rng, case: int, size) -> np.ndarray:
    return rng.standard_normal(size) if case == 1 else rng.logistic(0.0, 1.0, size)


def _error_panel(rng, spec: DgpSpec) -> np.ndarray:
    n, t = spec.n_units, spec.n_periods
    rho = _AR_COEFFS[spec.dgp]
    if spec.dgp == 1:
        return _draw(rng, spec.case, (n, t))
    # cross-sectional covariance 0.3^|i-j|, symmetric PSD square root
    idx = np.arange(n)
    cov = 0.3 ** np.abs(idx[:, None] - idx[None, :])
    vals, vecs = np.linalg.eigh(cov)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    eps = np.zeros(n)
    out = np.empty((n, t))
    total = spec.burn_in + t
    shocks = _draw(rng, spec.case, (total, n))
    for s in range(total):
        eps = rho * eps + root @ shocks[s]
        if s >= spec.burn_in:
            out[:, s - spec.burn_in] = eps
    return out


def gen_dgp(spec: DgpSpec):
    """Generate one panel; returns (PanelData, true ParameterSet).

    The true factors are reported in the identified parameterization
    ((1/T) F'F = I with counter-rotated loadings), which leaves the index
    and therefore the generated outcomes unchanged.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n, t, p, d = spec.n_units, spec.n_periods, spec.n_regressors, spec.num_factors

    factors_raw = rng.uniform(-2.5, 2.5, (t, d))
    loadings_raw = rng.uniform(0.0, 6.0, (n, d))
    x = rng.standard_normal((n, t, p))
    if d > 0:
        shift = 0.5 * (np.abs(loadings_raw[:, 0])[:, None] + np.abs(factors_raw[:, 0])[None, :])
        x = x + shift[:, :, None]
    slopes = np.repeat((np.arange(1, n + 1) / n)[:, None], p, axis=1)

    if d > 0:
        factors, rot = normalize_factors(factors_raw)
        loadings = loadings_raw @ np.linalg.inv(rot).T
    else:
        factors = np.zeros((t, 0))
        loadings = np.zeros((n, 0))

    z = np.einsum("itp,ip->it", x, slopes)
    if d > 0:
        z = z + loadings @ factors.T
    eps = _error_panel(rng, spec)
    y = (z >= eps).astype(np.float64)
    data = PanelData(y=y, x=x)
    truth = ParameterSet(slopes=slopes, loadings=loadings, factors=factors)
    return data, truth


def _orthonormal_basis(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise DataValidationError("factor matrix must be 2-D")
    if f.shape[1] == 0:
        return f.reshape(f.shape[0], 0)
    u, s, _ = np.linalg.svd(f, full_matrices=False)
    tol = max(f.shape) * np.finfo(np.float64).eps * s[0]
    deficient = s <= tol
    if np.any(deficient):
        col = int(np.argmax(deficient))
        raise RankDeficiencyError(
            f"factor matrix is rank deficient (singular direction {col})", column=col
        )
    return u


def projection_distance(f_hat: np.ndarray, f_true: np.ndarray) -> float:
    """Frobenius distance between the two column-space projections.

    Uses the trace identity d1 + d2 - 2 tr(P1 P2) on orthonormal bases,
    evaluated through projection residuals (d1 - tr = ||Q1 - P2 Q1||^2)
    so nearly identical spans do not suffer cancellation; no T x T matrix
    is ever formed. An empty factor block projects to zero.
    """
    q1 = _orthonormal_basis(f_hat)
    q2 = _orthonormal_basis(f_true)
    if q1.shape[0] != q2.shape[0]:
        raise DataValidationError("factor matrices must share the period dimension")
    cross = q2.T @ q1
    r1 = float(np.sum((q1 - q2 @ cross) ** 2))
    r2 = float(np.sum((q2 - q1 @ cross.T) ** 2))
    return math.sqrt(r1 + r2)


@dataclass(frozen=True)
class McReport:
    """Aggregated Monte Carlo metrics."""

    spec: DgpSpec
    reps: int
    share_correct: float
    share_under: float
    share_over: float
    rmse_slopes: float
    rmse_factor_space: float
    std_slopes: tuple
    chosen_counts: dict
    n_failed: int
    failures: tuple


def _child_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _mc_one(task):
    spec, cfg, d_max, xi, rep = task
    spec_r = replace(spec, seed=_child_seed(spec.seed, rep, 0))
    cfg_r = replace(cfg, rng_seed=_child_seed(spec.seed, rep, 1))
    data, truth = gen_dgp(spec_r)
    sel = select_num_factors(data, dgp_link(spec), cfg_r, d_max, penalty_xi=xi)
    best = sel.chosen_fit
    slopes_err = best.params.slopes - truth.slopes
    sq_slopes = float(np.sum(slopes_err**2)) / spec.n_units
    sq_proj = projection_distance(best.params.factors, truth.factors) ** 2
    return rep, sel.chosen_d, sq_slopes, sq_proj, slopes_err


def run_monte_carlo(
    spec: DgpSpec,
    reps: int,
    cfg: FitConfig,
    d_max: int,
    penalty_xi: float = None,
    n_workers: int = 1,
) -> McReport:
    """Select the factor count and refit on ``reps`` fresh panels.

    Per-replication randomness is keyed by (seed, rep), so results do not
    depend on worker count or scheduling. Replications whose estimation
    fails are excluded; the report errors when 5% or more fail.
    """
    if reps < 1:
        raise DataValidationError("reps must be >= 1")
    tasks = [(spec, cfg, d_max, penalty_xi, rep) for rep in range(reps)]
    results = {}
    failures = []
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for task, outcome in zip(tasks, pool.map(_mc_guarded, tasks)):
                if isinstance(outcome, str):
                    failures.append((task[4], outcome))
                else:
                    results[outcome[0]] = outcome
    else:
        for task in tasks:
            outcome = _mc_guarded(task)
            if isinstance(outcome, str):
                failures.append((task[4], outcome))
            else:
                results[outcome[0]] = outcome

    n_ok = len(results)
    n_failed = reps - n_ok
    if n_failed > 0 and n_failed / reps >= 0.05:
        raise EstimationError(f"{n_failed}/{reps} replications failed (>= 5%): {failures[:5]}")
    ordered = [results[r] for r in sorted(results)]
    chosen = np.array([o[1] for o in ordered])
    counts = {int(d): int((chosen == d).sum()) for d in sorted(set(chosen.tolist()))}
    share_correct = float((chosen == spec.num_factors).sum() / n_ok)
    share_under = float((chosen < spec.num_factors).sum() / n_ok)
    share_over = 1.0 - share_correct - share_under
    rmse_slopes = math.sqrt(float(np.mean([o[2] for o in ordered])))
    rmse_factor_space = math.sqrt(float(np.mean([o[3] for o in ordered])))
    err_stack = np.stack([o[4] for o in ordered])  # reps x N x p
    per_unit_std = np.sqrt(np.mean(err_stack**2, axis=0))  # N x p
    std_slopes = tuple(float(v) for v in per_unit_std.mean(axis=0))
    return McReport(
        spec=spec,
        reps=reps,
        share_correct=share_correct,
        share_under=share_under,
        share_over=share_over,
        rmse_slopes=rmse_slopes,
        rmse_factor_space=rmse_factor_space,
        std_slopes=std_slopes,
        chosen_counts=counts,
        n_failed=reps - n_ok,
        failures=tuple(failures),
    )


def _mc_guarded(task):
    try:
        return _mc_one(task)
    except PanelModelError as exc:
        return f"{type(exc).__name__}: {exc}"
