"""Shared data model: balanced binary panels, parameter sets, and the linear index.

All containers freeze their arrays after validation, so instances can be
shared read-only across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, DimensionMismatchError

__all__ = [
    "PanelData",
    "ParameterSet",
    "LinearIndex",
    "linear_index",
    "clamp_index",
    "DEFAULT_CLAMP",
]

# Operational bounds for the linear index before link evaluation: +-30 keeps
# probit/logit tail probabilities representable in double precision.
DEFAULT_CLAMP = (-30.0, 30.0)


def _frozen(a, dtype=np.float64):
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PanelData:
    """Binary outcomes and regressors observed over N units x T periods.

    y is N x T with entries exactly 0 or 1; x is N x T x d_beta (d_beta may
    be 0). The panel must be balanced and time-ordered.
    """

    y: np.ndarray
    x: np.ndarray
    unit_ids: tuple = None
    time_ids: tuple = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 2:
            raise DimensionMismatchError(f"y must be 2-D (N, T), got shape {y.shape}", axis="y")
        n, t = y.shape
        if n < 1 or t < 1:
            raise DataValidationError(f"panel needs at least one unit and period, got {y.shape}")
        if not np.all((y == 0.0) | (y == 1.0)):
            bad = np.argwhere((y != 0.0) & (y != 1.0))[0]
            raise DataValidationError(
                f"y must contain only 0/1; offending cell (unit={bad[0]}, period={bad[1]})"
            )
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 2 and x.shape == (n, t):
            x = x[:, :, None]
        if x.ndim != 3:
            raise DimensionMismatchError(f"x must be 3-D (N, T, d), got shape {x.shape}", axis="x")
        if x.shape[0] != n:
            raise DimensionMismatchError(
                f"x has {x.shape[0]} units but y has {n}", axis="units"
            )
        if x.shape[1] != t:
            raise DimensionMismatchError(
                f"x has {x.shape[1]} periods but y has {t}", axis="periods"
            )
        if not np.all(np.isfinite(x)):
            raise DataValidationError("x contains non-finite entries")
        unit_ids = self.unit_ids if self.unit_ids is not None else tuple(range(n))
        time_ids = self.time_ids if self.time_ids is not None else tuple(range(t))
        if len(unit_ids) != n:
            raise DimensionMismatchError("unit_ids length disagrees with y", axis="units")
        if len(time_ids) != t:
            raise DimensionMismatchError("time_ids length disagrees with y", axis="periods")
        if any(b <= a for a, b in zip(time_ids, time_ids[1:])):
            raise DataValidationError("time_ids must be strictly increasing")
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "unit_ids", tuple(unit_ids))
        object.__setattr__(self, "time_ids", tuple(time_ids))

    @property
    def n_units(self) -> int:
        return self.y.shape[0]

    @property
    def n_periods(self) -> int:
        return self.y.shape[1]

    @property
    def n_regressors(self) -> int:
        return self.x.shape[2]

    def subset_units(self, idx) -> "PanelData":
        idx = np.asarray(idx, dtype=np.intp)
        return PanelData(
            self.y[idx], self.x[idx], tuple(self.unit_ids[i] for i in idx), self.time_ids
        )

    def subset_periods(self, idx) -> "PanelData":
        idx = np.asarray(idx, dtype=np.intp)
        return PanelData(
            self.y[:, idx], self.x[:, idx], self.unit_ids, tuple(self.time_ids[i] for i in idx)
        )


@dataclass(frozen=True)
class ParameterSet:
    """Per-unit slopes, per-unit loadings, and common factors.

    slopes is N x d_beta, loadings is N x d_f, factors is T x d_f with the
    identification normalization (1/T) factors' factors = I enforced to 1e-8.
    d_f = 0 is legal (loadings and factors have zero columns). Diagnostic
    states off the identified set (finite-difference probes and the like)
    may pass ``enforce_normalization=False``.
    """

    slopes: np.ndarray
    loadings: np.ndarray
    factors: np.ndarray
    enforce_normalization: bool = field(default=True, kw_only=True)

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=np.float64)
        loadings = np.asarray(self.loadings, dtype=np.float64)
        factors = np.asarray(self.factors, dtype=np.float64)
        for name, a in (("slopes", slopes), ("loadings", loadings), ("factors", factors)):
            if a.ndim != 2:
                raise DimensionMismatchError(
                    f"{name} must be 2-D, got shape {a.shape}", axis=name
                )
        if slopes.shape[0] != loadings.shape[0]:
            raise DimensionMismatchError(
                f"slopes has {slopes.shape[0]} rows, loadings has {loadings.shape[0]}",
                axis="units",
            )
        if loadings.shape[1] != factors.shape[1]:
            raise DimensionMismatchError(
                f"loadings has {loadings.shape[1]} columns, factors has {factors.shape[1]}",
                axis="factors",
            )
        for name, a in (("slopes", slopes), ("loadings", loadings), ("factors", factors)):
            if not np.all(np.isfinite(a)):
                raise DataValidationError(f"{name} contains non-finite entries")
        d = factors.shape[1]
        if d > 0 and self.enforce_normalization:
            t = factors.shape[0]
            gram = factors.T @ factors / t
            if np.max(np.abs(gram - np.eye(d))) > 1e-8:
                raise DataValidationError(
                    "factors violate the normalization (1/T) F'F = I beyond 1e-8"
                )
        object.__setattr__(self, "slopes", _frozen(slopes))
        object.__setattr__(self, "loadings", _frozen(loadings))
        object.__setattr__(self, "factors", _frozen(factors))

    @property
    def n_units(self) -> int:
        return self.slopes.shape[0]

    @property
    def n_regressors(self) -> int:
        return self.slopes.shape[1]

    @property
    def num_factors(self) -> int:
        return self.factors.shape[1]

    def theta(self) -> np.ndarray:
        """Per-unit parameter rows (slopes | loadings), N x (d_beta + d_f)."""
        return np.hstack([self.slopes, self.loadings])


@dataclass(frozen=True)
class LinearIndex:
    """The N x T matrix z_it = x_it' beta_i + gamma_i' f_t."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if not np.all(np.isfinite(z)):
            raise DataValidationError("linear index contains non-finite entries")
        object.__setattr__(self, "z", _frozen(z))


def linear_index(data: PanelData, params: ParameterSet) -> LinearIndex:
    """Assemble the linear index from regressors, slopes, loadings, and factors."""
    if params.n_units != data.n_units:
        raise DimensionMismatchError(
            f"params cover {params.n_units} units, data has {data.n_units}", axis="units"
        )
    if params.n_regressors != data.n_regressors:
        raise DimensionMismatchError(
            f"params cover {params.n_regressors} regressors, data has {data.n_regressors}",
            axis="regressors",
        )
    if params.factors.shape[0] != data.n_periods:
        raise DimensionMismatchError(
            f"factors cover {params.factors.shape[0]} periods, data has {data.n_periods}",
            axis="periods",
        )
    z = np.einsum("itp,ip->it", data.x, params.slopes)
    if params.num_factors > 0:
        z = z + params.loadings @ params.factors.T
    return LinearIndex(z)


def clamp_index(z, bounds=DEFAULT_CLAMP):
    """Clip the linear index into [lo, hi]; total and idempotent."""
    lo, hi = bounds
    if not lo < hi:
        raise DataValidationError(f"clamp bounds need lo < hi, got ({lo}, {hi})")
    return np.minimum(np.maximum(z, lo), hi)
