"""Independent reference implementations used only by the tests.

These deliberately avoid the package's estimation code paths: plain
scipy/numpy, textbook formulations, no clamping or feasibility logic.
"""

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm


def probit_mle_newton(y, X, max_iter=200, tol=1e-12):
    """Textbook damped Newton for a probit regression.

    Full-likelihood ascent with the expected-information step; no index
    trimming, so callers must supply data without (near-)separation.
    """
    beta = np.zeros(X.shape[1])

    def loglik(b):
        z = X @ b
        p = np.where(y > 0.5, ndtr(z), ndtr(-z))
        return float(np.log(np.clip(p, 1e-300, None)).sum())

    ll = loglik(beta)
    for _ in range(max_iter):
        z = X @ beta
        cdf = np.clip(ndtr(z), 1e-300, None)
        sf = np.clip(ndtr(-z), 1e-300, None)
        g = norm.pdf(z)
        grad = X.T @ np.where(y > 0.5, g / cdf, -g / sf)
        if np.max(np.abs(grad)) < tol:
            break
        weights = g * g / (cdf * sf)
        hess = (X * weights[:, None]).T @ X
        step = np.linalg.solve(hess, grad)
        alpha = 1.0
        for _ in range(60):
            cand = beta + alpha * step
            ll_cand = loglik(cand)
            if ll_cand > ll:
                beta, ll = cand, ll_cand
                break
            alpha *= 0.5
        else:
            break
    return beta


def uniform_two_point_trial(seed, n=3, t=3, amp=None):
    """One seeded trial for the uniform-link grid comparison.

    Builds a pure-factor panel whose candidate grid produces indexes of
    constant magnitude ``amp``: loadings in {-1, +1}^n and factor values in
    {-amp, +amp}^t. Returns (data_y, candidate_z_list) where each candidate
    is the full n x t index matrix.
    """
    rng = np.random.default_rng(seed)
    amp = float(rng.uniform(0.2, 0.45)) if amp is None else amp
    loadings_grid = [np.array(v) for v in np.ndindex(*(2,) * n)]
    factors_grid = [np.array(v) for v in np.ndindex(*(2,) * t)]
    candidates = []
    for lg in loadings_grid:
        gam = 2.0 * lg - 1.0
        for fg in factors_grid:
            f = amp * (2.0 * fg - 1.0)
            candidates.append(np.outer(gam, f))
    truth = candidates[rng.integers(len(candidates))]
    eps = rng.uniform(-0.5, 0.5, size=(n, t))
    y = (truth >= eps).astype(float)
    return y, candidates, amp
