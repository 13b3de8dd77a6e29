"""Error-distribution kernels: CDF, PDF, and PDF derivative for the supported links.

The probit CDF/survival pair is evaluated through the complementary error
function so that both tails stay accurate well past |z| = 6, which the
index clamp region can reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DataValidationError

__all__ = ["LinkFamily", "PROBIT", "LOGIT"]

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)

# integer codes shared with the compiled kernels
PROBIT_CODE = 0
LOGIT_CODE = 1
UNIFORM_CODE = 2


@dataclass(frozen=True)
class LinkFamily:
    """A known error distribution, exposed as cdf / pdf / pdf_deriv.

    ``kind`` is one of "probit", "logit", "uniform"; uniform carries its
    support in (lo, hi).
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0

    @staticmethod
    def probit() -> "LinkFamily":
        return LinkFamily("probit")

    @staticmethod
    def logit() -> "LinkFamily":
        return LinkFamily("logit")

    @staticmethod
    def uniform(lo: float = -0.5, hi: float = 0.5) -> "LinkFamily":
        if not lo < hi:
            raise DataValidationError(f"uniform support needs lo < hi, got ({lo}, {hi})")
        return LinkFamily("uniform", float(lo), float(hi))

    @staticmethod
    def from_spec(spec: str) -> "LinkFamily":
        """Parse a config string: "probit" | "logit" | "uniform:lo:hi"."""
        parts = spec.strip().lower().split(":")
        if parts[0] == "probit" and len(parts) == 1:
            return LinkFamily.probit()
        if parts[0] == "logit" and len(parts) == 1:
            return LinkFamily.logit()
        if parts[0] == "uniform":
            if len(parts) == 1:
                return LinkFamily.uniform()
            if len(parts) == 3:
                return LinkFamily.uniform(float(parts[1]), float(parts[2]))
        raise DataValidationError(f"unrecognized link spec {spec!r}")

    @property
    def code(self) -> int:
        """Integer code consumed by the compiled kernels."""
        return {"probit": PROBIT_CODE, "logit": LOGIT_CODE, "uniform": UNIFORM_CODE}[self.kind]

    def cdf(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "probit":
            return special.ndtr(z)
        if self.kind == "logit":
            return special.expit(z)
        return np.clip((z - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def sf(self, z):
        """Survival function 1 - cdf, computed without cancellation."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "probit":
            return special.ndtr(-z)
        if self.kind == "logit":
            return special.expit(-z)
        return np.clip((self.hi - z) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "probit":
            return np.exp(-0.5 * z * z) / _SQRT2PI
        if self.kind == "logit":
            return special.expit(z) * special.expit(-z)
        inside = (z > self.lo) & (z < self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def pdf_deriv(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "probit":
            return -z * np.exp(-0.5 * z * z) / _SQRT2PI
        if self.kind == "logit":
            g = special.expit(z) * special.expit(-z)
            return g * (special.expit(-z) - special.expit(z))
        return np.zeros_like(z)


PROBIT = LinkFamily.probit()
LOGIT = LinkFamily.logit()
