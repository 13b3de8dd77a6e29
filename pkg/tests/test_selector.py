"""Information criterion arithmetic and factor-count selection."""

import numpy as np
import pytest

from ifepanel import (
    PROBIT,
    FitConfig,
    PanelData,
    ParameterSet,
    default_penalty,
    gen_dgp,
    ic_value,
    select_num_factors,
)
from ifepanel.errors import EstimationError
from ifepanel.estimator import FitResult
from ifepanel.simulation import DgpSpec


def _fit_result_with(params):
    return FitResult(
        params=params,
        loglik=0.0,
        outer_iters=1,
        converged=True,
        loglik_trace=(0.0,),
        start_index=0,
        link=PROBIT,
    )


class TestIcValue:
    def test_pure_penalty_when_fit_is_perfect(self):
        # residual term 0, d=2, N=T=100, penalty log sqrt(200)
        n = t = 100
        y = np.ones((n, t))
        x = np.full((n, t, 1), 30.0)  # index pinned at the clamp => G = 1 - eps
        data = PanelData(y=y, x=x)
        params = ParameterSet(
            slopes=np.ones((n, 1)), loadings=np.zeros((n, 0)), factors=np.zeros((t, 0))
        )
        xi = default_penalty(n, t)
        assert xi == pytest.approx(np.log(np.sqrt(200)), abs=1e-15)
        val = ic_value(data, _fit_result_with(params), 2, xi)
        assert val == pytest.approx(2 * xi / 100.0, abs=1e-12)
        assert val == pytest.approx(0.05298, abs=5e-5)

    def test_zero_penalty_at_zero_factors(self):
        n = t = 4
        rng = np.random.default_rng(0)
        data = PanelData(y=(rng.random((n, t)) > 0.5).astype(float), x=np.zeros((n, t, 1)))
        params = ParameterSet(
            slopes=np.zeros((n, 1)), loadings=np.zeros((n, 0)), factors=np.zeros((t, 0))
        )
        # G(0) = 0.5 so every squared residual is 0.25
        val = ic_value(data, _fit_result_with(params), 0, default_penalty(n, t))
        assert val == pytest.approx(0.25, abs=1e-12)

    def test_penalty_arithmetic(self):
        # mean square 0.2 at d=1, N=T=100: 0.2 + log(sqrt(200))/100
        xi = default_penalty(100, 100)
        assert 0.2 + xi / 100.0 == pytest.approx(0.22649, abs=5e-6)

    def test_strictly_increasing_in_d_at_fixed_fit(self):
        n = t = 6
        rng = np.random.default_rng(1)
        data = PanelData(y=(rng.random((n, t)) > 0.5).astype(float), x=rng.normal(size=(n, t, 1)))
        params = ParameterSet(
            slopes=np.zeros((n, 1)), loadings=np.zeros((n, 0)), factors=np.zeros((t, 0))
        )
        xi = default_penalty(n, t)
        vals = [ic_value(data, _fit_result_with(params), d, xi) for d in range(4)]
        assert np.all(np.diff(vals) > 0)


class TestSelection:
    def test_argmin_and_tie_break(self):
        # argmin logic exercised directly on the structure the selector builds
        ic_values = {0: 0.30, 1: 0.25, 2: 0.26}
        chosen = min(ic_values, key=lambda d: (ic_values[d], d))
        assert chosen == 1
        ic_values = {0: 0.30, 1: 0.25, 2: 0.25}
        chosen = min(ic_values, key=lambda d: (ic_values[d], d))
        assert chosen == 1

    def test_selects_true_count_on_clear_signal(self):
        spec = DgpSpec(case=1, dgp=1, n_units=40, n_periods=60, num_factors=2, seed=5)
        data, _ = gen_dgp(spec)
        cfg = FitConfig(num_factors=0, n_starts=1, rng_seed=1, clamp=(-8, 8), newton_max_iter=2)
        sel = select_num_factors(data, PROBIT, cfg, d_max=3)
        assert sel.chosen_d == 2
        assert set(sel.ic_values) == {0, 1, 2, 3}
        assert sel.chosen_fit is sel.fits[2]

    def test_relabeling_invariance(self):
        spec = DgpSpec(case=1, dgp=1, n_units=20, n_periods=25, num_factors=1, seed=9)
        data, _ = gen_dgp(spec)
        cfg = FitConfig(num_factors=0, n_starts=1, rng_seed=2, newton_max_iter=2)
        sel = select_num_factors(data, PROBIT, cfg, d_max=2)
        relabeled = PanelData(
            y=data.y, x=data.x,
            unit_ids=tuple(f"u{i}" for i in range(20)),
            time_ids=tuple(range(100, 125)),
        )
        sel2 = select_num_factors(relabeled, PROBIT, cfg, d_max=2)
        assert sel2.chosen_d == sel.chosen_d
        for d in sel.ic_values:
            assert sel2.ic_values[d] == pytest.approx(sel.ic_values[d], abs=1e-12)

    def test_d_max_validation(self):
        spec = DgpSpec(case=1, dgp=1, n_units=6, n_periods=6, num_factors=1, seed=1)
        data, _ = gen_dgp(spec)
        cfg = FitConfig(num_factors=0)
        with pytest.raises(EstimationError):
            select_num_factors(data, PROBIT, cfg, d_max=6)
        with pytest.raises(EstimationError):
            select_num_factors(data, PROBIT, cfg, d_max=-1)
