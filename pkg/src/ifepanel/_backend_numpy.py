"""Pure-numpy backend for the hot estimation loops.

Mirrors the compiled backend function-for-function; selected via the
IFEPANEL_NO_NUMBA environment flag or used as the import-failure fallback.
"""

from __future__ import annotations

import numpy as np
from scipy import special

_FLOOR = 1e-300


def _cdf_sf(z, code, lo, hi):
    if code == 0:
        return special.ndtr(z), special.ndtr(-z)
    if code == 1:
        return special.expit(z), special.expit(-z)
    t = np.clip((z - lo) / (hi - lo), 0.0, 1.0)
    return t, 1.0 - t


def _pdf(z, code, lo, hi):
    if code == 0:
        return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    if code == 1:
        return special.expit(z) * special.expit(-z)
    return np.where((z > lo) & (z < hi), 1.0 / (hi - lo), 0.0)


def _cells(y, z, code, lo, hi):
    cdf, sf = _cdf_sf(z, code, lo, hi)
    p = np.where(y > 0.5, cdf, sf)
    return np.log(np.maximum(p, _FLOOR))


def _obj(y, u, off, theta, code, lo, hi, clo, chi):
    """Clamped block log-likelihood plus feasibility of the raw index.

    Feasible means every index value already lies inside [clo, chi]; the
    Newton updates only accept feasible states, which keeps all parameters
    inside the trimming region and the clamp non-binding.
    """
    raw = off + u @ theta
    z = np.clip(raw, clo, chi)
    feasible = bool(np.all(raw >= clo) and np.all(raw <= chi))
    return float(_cells(y, z, code, lo, hi).sum()), feasible


def _grad_fisher(y, u, off, theta, code, lo, hi, clo, chi):
    z = np.clip(off + u @ theta, clo, chi)
    cdf, sf = _cdf_sf(z, code, lo, hi)
    cdf = np.maximum(cdf, _FLOOR)
    sf = np.maximum(sf, _FLOOR)
    g = _pdf(z, code, lo, hi)
    w = np.where(y > 0.5, g / cdf, -g / sf)
    fw = g * g / (cdf * sf)
    grad = u.T @ w
    info = (u * fw[:, None]).T @ u
    return grad, info


def newton(y, u, off, theta0, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """Damped ascent on the concave per-block likelihood.

    Newton direction from the expected-information matrix, step-halving
    line search on the exact objective, escalating ridge when the
    information matrix is not positive definite.
    """
    theta = np.array(theta0, dtype=np.float64)
    k = theta.shape[0]
    ll, _ = _obj(y, u, off, theta, code, lo, hi, clo, chi)
    if k == 0:
        return theta, ll
    eye = np.eye(k)
    for _ in range(max_iter):
        grad, info = _grad_fisher(y, u, off, theta, code, lo, hi, clo, chi)
        if np.max(np.abs(grad)) <= gtol:
            break
        base = np.linalg.norm(info) * 1e-8 + 1e-30
        lam = 0.0
        moved = False
        for _ in range(64):
            a = info if lam == 0.0 else info + lam * eye
            try:
                np.linalg.cholesky(a)
                step = np.linalg.solve(a, grad)
                solvable = np.all(np.isfinite(step))
            except np.linalg.LinAlgError:
                solvable = False
            # a wild step means the information matrix is near-singular;
            # ridge it up instead of burning the line search
            if solvable and np.max(np.abs(step)) <= 1e8:
                # strict, feasible ascent only: candidates that leave the
                # trimming region or sit on the clamp plateau are rejected,
                # so degenerate blocks cannot inflate their parameters
                alpha = 1.0
                for _ in range(max_halvings + 1):
                    cand = theta + alpha * step
                    ll_cand, feasible = _obj(y, u, off, cand, code, lo, hi, clo, chi)
                    if feasible and ll_cand > ll:
                        theta, ll, moved = cand, ll_cand, True
                        break
                    alpha *= 0.5
                # either we moved, or the block is boundary-stuck or at the
                # line search's float resolution; more ridge is useless
                break
            lam = base if lam == 0.0 else 2.0 * lam
            if lam > 1e16 * base:
                break
        if not moved:
            break
    return theta, ll


def _unit_design(x_i, factors):
    if factors.shape[1] == 0:
        return x_i
    if x_i.shape[1] == 0:
        return factors
    return np.hstack([x_i, factors])


def unit_sweep(y, x, factors, theta, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """One pass of per-unit updates with the factors held fixed."""
    n, t = y.shape
    theta_new = np.empty_like(theta)
    unit_ll = np.empty(n)
    off = np.zeros(t)
    for i in range(n):
        u = _unit_design(x[i], factors)
        theta_new[i], unit_ll[i] = newton(
            y[i], u, off, theta[i], code, lo, hi, clo, chi, max_iter, gtol, max_halvings
        )
    return theta_new, unit_ll


def factor_sweep(y, x, slopes, loadings, factors, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """One pass of per-period factor updates with slopes and loadings fixed."""
    n, t = y.shape
    offsets = np.einsum("itp,ip->it", x, slopes)
    factors_new = np.empty_like(factors)
    period_ll = np.empty(t)
    for s in range(t):
        factors_new[s], period_ll[s] = newton(
            np.ascontiguousarray(y[:, s]),
            loadings,
            np.ascontiguousarray(offsets[:, s]),
            factors[s],
            code, lo, hi, clo, chi, max_iter, gtol, max_halvings,
        )
    return factors_new, period_ll


def panel_loglik(y, x, slopes, loadings, factors, code, lo, hi, clo, chi):
    """Total log-likelihood, accumulated as per-unit subtotals.

    Built from the same per-unit objective the Newton updates use, so
    ascent accepted unit-by-unit is ascent of this total.
    """
    n = y.shape[0]
    theta = np.hstack([slopes, loadings])
    off = np.zeros(y.shape[1])
    total = 0.0
    for i in range(n):
        u = _unit_design(x[i], factors)
        val, _ = _obj(y[i], u, off, theta[i], code, lo, hi, clo, chi)
        total += val
    return total
