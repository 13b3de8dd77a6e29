"""Numba-compiled backend for the hot estimation loops.

Same contracts as the numpy backend; scalar loops compiled with
``@njit(cache=True)`` so repeated processes reuse the on-disk cache.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_FLOOR = 1e-300
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@njit(cache=True)
def _cdf(z, code, lo, hi):
    if code == 0:
        return 0.5 * math.erfc(-z / _SQRT2)
    elif code == 1:
        return 1.0 / (1.0 + math.exp(-z))
    t = (z - lo) / (hi - lo)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return t


@njit(cache=True)
def _sf(z, code, lo, hi):
    if code == 0:
        return 0.5 * math.erfc(z / _SQRT2)
    elif code == 1:
        return 1.0 / (1.0 + math.exp(z))
    t = (hi - z) / (hi - lo)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return t


@njit(cache=True)
def _pdf(z, code, lo, hi):
    if code == 0:
        return math.exp(-0.5 * z * z) / _SQRT2PI
    elif code == 1:
        g = 1.0 / (1.0 + math.exp(-z))
        return g * (1.0 / (1.0 + math.exp(z)))
    if lo < z < hi:
        return 1.0 / (hi - lo)
    return 0.0


@njit(cache=True)
def _obj(y, u, off, theta, code, lo, hi, clo, chi):
    """Clamped log-likelihood of one block plus feasibility of the raw index.

    Feasible means every index value already lies inside [clo, chi]; the
    Newton updates only accept feasible states, which keeps all parameters
    inside the trimming region and the clamp non-binding.
    """
    t_len = y.shape[0]
    k = theta.shape[0]
    total = 0.0
    feasible = True
    for t in range(t_len):
        z = off[t]
        for j in range(k):
            z += u[t, j] * theta[j]
        if z < clo:
            z = clo
            feasible = False
        elif z > chi:
            z = chi
            feasible = False
        if y[t] > 0.5:
            p = _cdf(z, code, lo, hi)
        else:
            p = _sf(z, code, lo, hi)
        if p < _FLOOR:
            p = _FLOOR
        total += math.log(p)
    return total, feasible


@njit(cache=True)
def _chol_solve(a, b, out):
    """Cholesky solve of a (symmetric, lower triangle used) against b.

    Overwrites a; returns False when a pivot fails, leaving out unusable.
    """
    k = a.shape[0]
    for j in range(k):
        d = a[j, j]
        for m in range(j):
            d -= a[j, m] * a[j, m]
        if d <= 0.0 or not math.isfinite(d):
            return False
        d = math.sqrt(d)
        a[j, j] = d
        for i in range(j + 1, k):
            s = a[i, j]
            for m in range(j):
                s -= a[i, m] * a[j, m]
            a[i, j] = s / d
    for i in range(k):
        s = b[i]
        for m in range(i):
            s -= a[i, m] * out[m]
        out[i] = s / a[i, i]
    for i in range(k - 1, -1, -1):
        s = out[i]
        for m in range(i + 1, k):
            s -= a[m, i] * out[m]
        out[i] = s / a[i, i]
    return True


@njit(cache=True)
def newton(y, u, off, theta0, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """Damped ascent on the concave per-block likelihood.

    Newton direction from the expected-information matrix, step-halving
    line search on the exact objective, escalating ridge when the
    information matrix is not positive definite.
    """
    k = theta0.shape[0]
    t_len = y.shape[0]
    theta = theta0.copy()
    ll, _ = _obj(y, u, off, theta, code, lo, hi, clo, chi)
    if k == 0:
        return theta, ll
    grad = np.empty(k)
    info = np.empty((k, k))
    a = np.empty((k, k))
    step = np.empty(k)
    cand = np.empty(k)
    for _ in range(max_iter):
        for j in range(k):
            grad[j] = 0.0
            for m in range(k):
                info[j, m] = 0.0
        for t in range(t_len):
            z = off[t]
            for j in range(k):
                z += u[t, j] * theta[j]
            if z < clo:
                z = clo
            elif z > chi:
                z = chi
            cdf = _cdf(z, code, lo, hi)
            sf = _sf(z, code, lo, hi)
            if cdf < _FLOOR:
                cdf = _FLOOR
            if sf < _FLOOR:
                sf = _FLOOR
            g = _pdf(z, code, lo, hi)
            if y[t] > 0.5:
                w = g / cdf
            else:
                w = -g / sf
            fw = g * g / (cdf * sf)
            for j in range(k):
                uj = u[t, j]
                grad[j] += w * uj
                fu = fw * uj
                for m in range(j + 1):
                    info[j, m] += fu * u[t, m]
        gmax = 0.0
        for j in range(k):
            if abs(grad[j]) > gmax:
                gmax = abs(grad[j])
        if gmax <= gtol:
            break
        fro = 0.0
        for j in range(k):
            fro += info[j, j] * info[j, j]
            for m in range(j):
                fro += 2.0 * info[j, m] * info[j, m]
        base = math.sqrt(fro) * 1e-8 + 1e-30
        lam = 0.0
        moved = False
        for _ in range(64):
            for j in range(k):
                for m in range(k):
                    if m <= j:
                        a[j, m] = info[j, m]
                    else:
                        a[j, m] = info[m, j]
                a[j, j] += lam
            if _chol_solve(a, grad, step):
                usable = True
                stepmax = 0.0
                for j in range(k):
                    if not math.isfinite(step[j]):
                        usable = False
                    elif abs(step[j]) > stepmax:
                        stepmax = abs(step[j])
                # a wild step means the information matrix is near-singular;
                # ridge it up instead of burning the line search
                if usable and stepmax <= 1e8:
                    # strict, feasible ascent only: candidates that leave the
                    # trimming region or sit on the clamp plateau are rejected,
                    # so degenerate blocks cannot inflate their parameters
                    alpha = 1.0
                    for _ in range(max_halvings + 1):
                        for j in range(k):
                            cand[j] = theta[j] + alpha * step[j]
                        ll_cand, feasible = _obj(y, u, off, cand, code, lo, hi, clo, chi)
                        if feasible and ll_cand > ll:
                            for j in range(k):
                                theta[j] = cand[j]
                            ll = ll_cand
                            moved = True
                            break
                        alpha *= 0.5
                    # either we moved, or the block is boundary-stuck or at
                    # the line search's float resolution; more ridge is useless
                    break
            lam = base if lam == 0.0 else 2.0 * lam
            if lam > 1e16 * base:
                break
        if not moved:
            break
    return theta, ll


@njit(cache=True)
def unit_sweep(y, x, factors, theta, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """One pass of per-unit updates with the factors held fixed."""
    n, t_len = y.shape
    p = x.shape[2]
    d = factors.shape[1]
    k = p + d
    theta_new = np.empty_like(theta)
    unit_ll = np.empty(n)
    u = np.empty((t_len, k))
    off = np.zeros(t_len)
    for t in range(t_len):
        for j in range(d):
            u[t, p + j] = factors[t, j]
    for i in range(n):
        for t in range(t_len):
            for j in range(p):
                u[t, j] = x[i, t, j]
        th, ll = newton(
            y[i], u, off, theta[i], code, lo, hi, clo, chi, max_iter, gtol, max_halvings
        )
        for j in range(k):
            theta_new[i, j] = th[j]
        unit_ll[i] = ll
    return theta_new, unit_ll


@njit(cache=True)
def factor_sweep(y, x, slopes, loadings, factors, code, lo, hi, clo, chi, max_iter, gtol, max_halvings):
    """One pass of per-period factor updates with slopes and loadings fixed."""
    n, t_len = y.shape
    p = x.shape[2]
    d = factors.shape[1]
    factors_new = np.empty_like(factors)
    period_ll = np.empty(t_len)
    yt = np.empty(n)
    off = np.empty(n)
    for s in range(t_len):
        for i in range(n):
            yt[i] = y[i, s]
            o = 0.0
            for j in range(p):
                o += x[i, s, j] * slopes[i, j]
            off[i] = o
        f_new, ll = newton(
            yt, loadings, off, factors[s], code, lo, hi, clo, chi, max_iter, gtol, max_halvings
        )
        for j in range(d):
            factors_new[s, j] = f_new[j]
        period_ll[s] = ll
    return factors_new, period_ll


@njit(cache=True)
def panel_loglik(y, x, slopes, loadings, factors, code, lo, hi, clo, chi):
    """Total log-likelihood, accumulated as per-unit subtotals.

    Term order matches the Newton objective exactly, so sweep-accepted
    ascent is ascent of this total.
    """
    n, t_len = y.shape
    p = x.shape[2]
    d = factors.shape[1]
    total = 0.0
    for i in range(n):
        sub = 0.0
        for t in range(t_len):
            z = 0.0
            for j in range(p):
                z += x[i, t, j] * slopes[i, j]
            for j in range(d):
                z += loadings[i, j] * factors[t, j]
            if z < clo:
                z = clo
            elif z > chi:
                z = chi
            if y[i, t] > 0.5:
                pr = _cdf(z, code, lo, hi)
            else:
                pr = _sf(z, code, lo, hi)
            if pr < _FLOOR:
                pr = _FLOOR
            sub += math.log(pr)
        total += sub
    return total
