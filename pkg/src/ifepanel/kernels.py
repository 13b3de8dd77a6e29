"""Backend selection for the hot estimation loops.

The compiled (numba) backend is the default; set IFEPANEL_NO_NUMBA=1 to
force the pure-numpy path, which is also the silent fallback when numba
is unavailable. Both backends implement identical contracts:

    panel_loglik(y, x, slopes, loadings, factors, code, lo, hi, clo, chi)
    newton(y, u, off, theta0, code, lo, hi, clo, chi, max_iter, gtol, max_halvings)
    unit_sweep(y, x, factors, theta, ...)
    factor_sweep(y, x, slopes, loadings, factors, ...)
"""

from __future__ import annotations

import os
import warnings

from . import _backend_numpy

__all__ = ["backend", "backend_name", "panel_loglik", "newton", "unit_sweep", "factor_sweep"]


def _flag_disabled() -> bool:
    return os.environ.get("IFEPANEL_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


def _select():
    if _flag_disabled():
        return _backend_numpy, "numpy"
    try:
        from . import _backend_numba
        return _backend_numba, "numba"
    except ImportError as exc:  # pragma: no cover - depends on environment
        warnings.warn(f"numba backend unavailable ({exc}); falling back to numpy")
        return _backend_numpy, "numpy"


backend, _backend_label = _select()


def backend_name() -> str:
    """Name of the active backend: "numba" or "numpy"."""
    return _backend_label


panel_loglik = backend.panel_loglik
newton = backend.newton
unit_sweep = backend.unit_sweep
factor_sweep = backend.factor_sweep
