"""Log-likelihood, scores, and Hessian blocks of the binary factor model.

Everything here is the vectorized reference path used by inference and by
the test oracles; the estimator's hot loops live in the kernels module.
Link evaluations always use the clamped index, and log arguments are
floored at 1e-300 so the likelihood stays finite for any parameter value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalDomainError
from .links import LinkFamily
from .panel import DEFAULT_CLAMP, PanelData, ParameterSet, clamp_index, linear_index

__all__ = [
    "loglik",
    "score_theta",
    "score_f",
    "hessian_theta",
    "hessian_f",
    "score_weight",
    "info_weight",
    "curvature_weight",
    "ScoreBlocks",
    "HessianBlocks",
]

_FLOOR = 1e-300


@dataclass(frozen=True)
class ScoreBlocks:
    """Per-unit and per-period score vectors."""

    d_theta: np.ndarray  # N x (d_beta + d_f)
    d_f_t: np.ndarray  # T x d_f


@dataclass(frozen=True)
class HessianBlocks:
    """Per-unit and per-period second-derivative blocks."""

    theta_blocks: np.ndarray  # N x k x k
    f_blocks: np.ndarray  # T x d_f x d_f


def _probabilities(z, link):
    cdf = np.maximum(link.cdf(z), _FLOOR)
    sf = np.maximum(link.sf(z), _FLOOR)
    return cdf, sf


def score_weight(y, z, link: LinkFamily):
    """Residual weight (y - G) g / [(1 - G) G], evaluated branch-wise for binary y."""
    cdf, sf = _probabilities(z, link)
    g = link.pdf(z)
    return np.where(np.asarray(y) > 0.5, g / cdf, -g / sf)


def info_weight(z, link: LinkFamily):
    """Information weight g^2 / [(1 - G) G], the expected negative curvature."""
    cdf, sf = _probabilities(z, link)
    g = link.pdf(z)
    return g * g / (cdf * sf)


def curvature_weight(y, z, link: LinkFamily, fisher: bool = False):
    """Second derivative of the per-cell log-likelihood in the index.

    The full curvature is -g^2/[(1-G)G] plus the residual-weighted term
    (y - G) [g' G (1 - G) - g^2 (1 - 2G)] / [(1-G)^2 G^2]; with
    ``fisher=True`` the residual term is dropped, which leaves the globally
    negative-definite expected part.
    """
    cdf, sf = _probabilities(z, link)
    g = link.pdf(z)
    out = -g * g / (cdf * sf)
    if not fisher:
        resid = np.where(np.asarray(y) > 0.5, sf, -cdf)  # y - G for binary y
        gprime = link.pdf_deriv(z)
        # 1 - 2G = sf - cdf, so the bracket is g' G (1-G) + g^2 (G - (1-G))
        out = out + resid * (gprime * cdf * sf + g * g * (cdf - sf)) / (cdf * sf) ** 2
    return out


def _index(data, params, clamp):
    z = linear_index(data, params).z
    return clamp_index(z, clamp)


def loglik(
    data: PanelData, params: ParameterSet, link: LinkFamily, clamp=DEFAULT_CLAMP
) -> float:
    """Total log-likelihood; always <= 0."""
    z = _index(data, params, clamp)
    cdf, sf = _probabilities(z, link)
    cells = np.where(data.y > 0.5, np.log(cdf), np.log(sf))
    if not np.all(np.isfinite(cells)):
        i, t = np.argwhere(~np.isfinite(cells))[0]
        raise NumericalDomainError(
            f"non-finite log-likelihood at (unit={i}, period={t})", unit=int(i), period=int(t)
        )
    return float(cells.sum())


def _unit_design(data, params):
    """u_it = (x_it', f_t')' stacked as an N x T x (d_beta + d_f) tensor."""
    n, t = data.y.shape
    f_bcast = np.broadcast_to(params.factors[None, :, :], (n, t, params.num_factors))
    return np.concatenate([data.x, f_bcast], axis=2)


def score_theta(
    data: PanelData, params: ParameterSet, link: LinkFamily, clamp=DEFAULT_CLAMP
) -> np.ndarray:
    """Per-unit scores: row i is sum_t w_it u_it."""
    z = _index(data, params, clamp)
    w = score_weight(data.y, z, link)
    u = _unit_design(data, params)
    out = np.einsum("it,itk->ik", w, u)
    if not np.all(np.isfinite(out)):
        raise NumericalDomainError("non-finite score")
    return out


def score_f(
    data: PanelData, params: ParameterSet, link: LinkFamily, clamp=DEFAULT_CLAMP
) -> np.ndarray:
    """Per-period scores: row t is sum_i w_it gamma_i."""
    z = _index(data, params, clamp)
    w = score_weight(data.y, z, link)
    out = w.T @ params.loadings
    if not np.all(np.isfinite(out)):
        raise NumericalDomainError("non-finite factor score")
    return out


def hessian_theta(
    data: PanelData,
    params: ParameterSet,
    link: LinkFamily,
    clamp=DEFAULT_CLAMP,
    fisher: bool = False,
) -> np.ndarray:
    """Per-unit Hessian blocks sum_t l''(z_it) u_it u_it', N x k x k."""
    z = _index(data, params, clamp)
    c = curvature_weight(data.y, z, link, fisher=fisher)
    u = _unit_design(data, params)
    return np.einsum("it,itk,itl->ikl", c, u, u)


def hessian_f(
    data: PanelData,
    params: ParameterSet,
    link: LinkFamily,
    clamp=DEFAULT_CLAMP,
    fisher: bool = False,
) -> np.ndarray:
    """Per-period Hessian blocks sum_i l''(z_it) gamma_i gamma_i', T x d_f x d_f."""
    z = _index(data, params, clamp)
    c = curvature_weight(data.y, z, link, fisher=fisher)
    g = params.loadings
    return np.einsum("it,ik,il->tkl", c, g, g)


def scores(data, params, link, clamp=DEFAULT_CLAMP) -> ScoreBlocks:
    return ScoreBlocks(
        d_theta=score_theta(data, params, link, clamp),
        d_f_t=score_f(data, params, link, clamp),
    )


def hessians(data, params, link, clamp=DEFAULT_CLAMP, fisher=False) -> HessianBlocks:
    return HessianBlocks(
        theta_blocks=hessian_theta(data, params, link, clamp, fisher),
        f_blocks=hessian_f(data, params, link, clamp, fisher),
    )
