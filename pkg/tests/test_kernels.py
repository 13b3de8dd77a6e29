"""Parity between the compiled backend and the pure-numpy fallback."""

import numpy as np
import pytest

from ifepanel import _backend_numpy as np_backend
from ifepanel import kernels

numba_backend = pytest.importorskip("ifepanel._backend_numba")

LARGS = (0, 0.0, 1.0, -30.0, 30.0)
NARGS = (50, 1e-8, 30)


def _instance(seed, n=8, t=20, p=2, d=1):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, t, p))
    f = np.sqrt(t) * np.linalg.qr(rng.normal(size=(t, d)))[0]
    slopes = 0.5 * rng.normal(size=(n, p))
    loadings = 0.7 * rng.normal(size=(n, d))
    z = np.einsum("itp,ip->it", x, slopes) + loadings @ f.T
    y = (z >= rng.normal(size=(n, t))).astype(float)
    return y, x, slopes, loadings, f


class TestBackendParity:
    @pytest.mark.parametrize("code", [0, 1], ids=["probit", "logit"])
    def test_panel_loglik_agrees(self, code):
        y, x, slopes, loadings, f = _instance(0)
        largs = (code, 0.0, 1.0, -30.0, 30.0)
        a = numba_backend.panel_loglik(y, x, slopes, loadings, f, *largs)
        b = np_backend.panel_loglik(y, x, slopes, loadings, f, *largs)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-10)

    def test_newton_agrees(self):
        y, x, slopes, loadings, f = _instance(1)
        u = np.ascontiguousarray(np.hstack([x[0], f]))
        off = np.zeros(y.shape[1])
        theta0 = np.zeros(u.shape[1])
        ta, la = numba_backend.newton(y[0], u, off, theta0, *LARGS, *NARGS)
        tb, lb = np_backend.newton(y[0], u, off, theta0, *LARGS, *NARGS)
        np.testing.assert_allclose(ta, tb, atol=1e-6)
        assert la == pytest.approx(lb, abs=1e-8)

    def test_sweeps_agree(self):
        y, x, slopes, loadings, f = _instance(2)
        theta0 = np.zeros((y.shape[0], x.shape[2] + f.shape[1]))
        ta, ulla = numba_backend.unit_sweep(y, x, f, theta0, *LARGS, *NARGS)
        tb, ullb = np_backend.unit_sweep(y, x, f, theta0, *LARGS, *NARGS)
        np.testing.assert_allclose(ta, tb, atol=1e-6)
        np.testing.assert_allclose(ulla, ullb, atol=1e-8)
        fa, plla = numba_backend.factor_sweep(y, x, ta[:, :2], ta[:, 2:], f, *LARGS, *NARGS)
        fb, pllb = np_backend.factor_sweep(y, x, tb[:, :2], tb[:, 2:], f, *LARGS, *NARGS)
        np.testing.assert_allclose(fa, fb, atol=1e-6)
        np.testing.assert_allclose(plla, pllb, atol=1e-8)

    def test_uniform_link_agrees(self):
        rng = np.random.default_rng(3)
        t = 15
        y = (rng.random(t) > 0.5).astype(float)
        u = np.ascontiguousarray(0.2 * rng.normal(size=(t, 1)))
        off = np.zeros(t)
        largs = (2, -0.5, 0.5, -30.0, 30.0)
        ta, la = numba_backend.newton(y, u, off, np.zeros(1), *largs, *NARGS)
        tb, lb = np_backend.newton(y, u, off, np.zeros(1), *largs, *NARGS)
        np.testing.assert_allclose(ta, tb, atol=1e-6)
        assert la == pytest.approx(lb, abs=1e-8)


class TestEnvironmentFlag:
    def test_active_backend_reported(self):
        assert kernels.backend_name() in ("numba", "numpy")

    def test_flag_forces_numpy(self, monkeypatch):
        import importlib
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c",
             "import ifepanel.kernels as k; print(k.backend_name())"],
            env={"IFEPANEL_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True,
        )
        assert out.stdout.strip() == "numpy"
