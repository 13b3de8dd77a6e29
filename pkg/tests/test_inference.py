"""Covariance estimators, mean-group aggregation, jackknife, partial effects."""

import numpy as np
import pytest

from ifepanel import (
    PROBIT,
    FitConfig,
    LinkFamily,
    PanelData,
    ParameterSet,
    average_partial_effects,
    covariances,
    fit,
    jackknife_bias_correct,
    jackknife_combine,
    mean_group,
    mean_group_covariance,
)
from ifepanel.estimator import FitResult
from ifepanel.likelihood import info_weight


def _result(params, link=PROBIT):
    return FitResult(
        params=params,
        loglik=0.0,
        outer_iters=1,
        converged=True,
        loglik_trace=(0.0,),
        start_index=0,
        link=link,
    )


def _mild_fit(rng, n=10, t=60, p=1, d=1):
    x = rng.normal(size=(n, t, p))
    f = np.sqrt(t) * np.linalg.qr(rng.normal(size=(t, d)))[0]
    g = 0.6 * rng.normal(size=(n, d))
    slopes = 0.5 * rng.normal(size=(n, p))
    z = np.einsum("itp,ip->it", x, slopes) + g @ f.T
    y = (z >= rng.normal(size=(n, t))).astype(float)
    data = PanelData(y=y, x=x)
    res = fit(data, PROBIT, FitConfig(num_factors=d, n_starts=1, rng_seed=0))
    return data, res


class TestCovariances:
    def test_single_period_bread_is_rank_one(self):
        data = PanelData(y=np.array([[1.0]]), x=np.zeros((1, 1, 1)))
        params = ParameterSet(
            slopes=np.zeros((1, 1)), loadings=np.zeros((1, 0)), factors=np.zeros((1, 0))
        )
        cov = covariances(data, _result(params))
        assert cov.info_unit.shape == (1, 1, 1)
        # one term: info weight at z=0 times u u' with u = (0,)
        assert cov.info_unit[0][0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_info_weight_value_at_zero(self):
        # probit at z = 0: pdf(0)^2 / (0.5 * 0.5) = 2 / pi
        val = info_weight(np.array(0.0), PROBIT)
        assert val == pytest.approx(0.6366197723675814, abs=1e-12)

    def test_sandwich_symmetric_psd(self):
        rng = np.random.default_rng(1)
        data, res = _mild_fit(rng)
        cov = covariances(data, res)
        for blocks in (cov.var_unit, cov.var_period):
            for b in blocks:
                np.testing.assert_allclose(b, b.T, atol=1e-10)
                assert np.min(np.linalg.eigvalsh(b)) >= -1e-10

    def test_info_blocks_psd_by_construction(self):
        rng = np.random.default_rng(2)
        data, res = _mild_fit(rng, n=6, t=30)
        cov = covariances(data, res)
        for b in cov.info_unit:
            assert np.min(np.linalg.eigvalsh(b)) >= -1e-12


class TestMeanGroup:
    def test_mean_of_two_rows(self):
        params = ParameterSet(
            slopes=np.array([[1.0], [3.0]]),
            loadings=np.zeros((2, 0)),
            factors=np.zeros((3, 0)),
        )
        assert mean_group(_result(params))[0] == pytest.approx(2.0, abs=1e-15)

    def test_constant_rows(self):
        params = ParameterSet(
            slopes=np.tile([0.4, -1.2], (5, 1)),
            loadings=np.zeros((5, 0)),
            factors=np.zeros((2, 0)),
        )
        np.testing.assert_allclose(mean_group(_result(params)), [0.4, -1.2], atol=1e-15)

    def test_matches_loop_mean(self):
        rng = np.random.default_rng(3)
        slopes = rng.normal(size=(5, 2))
        params = ParameterSet(
            slopes=slopes, loadings=np.zeros((5, 0)), factors=np.zeros((4, 0))
        )
        manual = np.zeros(2)
        for row in slopes:
            manual += row
        manual /= 5
        np.testing.assert_allclose(mean_group(_result(params)), manual, atol=1e-14)

    def test_commutes_with_unit_permutation(self):
        rng = np.random.default_rng(4)
        slopes = rng.normal(size=(7, 2))
        perm = rng.permutation(7)
        a = ParameterSet(slopes, np.zeros((7, 0)), np.zeros((3, 0)))
        b = ParameterSet(slopes[perm], np.zeros((7, 0)), np.zeros((3, 0)))
        np.testing.assert_allclose(
            mean_group(_result(a)), mean_group(_result(b)), atol=1e-14
        )


class TestMeanGroupCovariance:
    def test_symmetric_psd(self):
        rng = np.random.default_rng(5)
        data, res = _mild_fit(rng, n=8, t=50, p=2)
        sigma = mean_group_covariance(data, res)
        np.testing.assert_allclose(sigma, sigma.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(sigma)) >= -1e-12

    def test_single_cell_hand_arithmetic(self):
        # N = T = 1, one regressor, no factors: the double sum has one term
        data = PanelData(y=np.array([[1.0]]), x=np.full((1, 1, 1), 2.0))
        params = ParameterSet(
            slopes=np.zeros((1, 1)), loadings=np.zeros((1, 0)), factors=np.zeros((1, 0))
        )
        sigma = mean_group_covariance(data, _result(params))
        # z = 0: w = pdf/cdf = 0.7979, info = (2/pi) * u u' with u = (2)
        w = 0.7978845608028654
        info = 0.6366197723675814 * 4.0
        expected = (w / info * 2.0) ** 2
        assert sigma[0, 0] == pytest.approx(expected, rel=1e-10)


class TestJackknife:
    def test_identity_at_equal_subestimates(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            b = rng.normal(size=3)
            np.testing.assert_allclose(jackknife_combine(b, b, b, b, b), b, atol=1e-12)

    def test_arithmetic_examples(self):
        assert jackknife_combine(1.0, 1.2, 1.2, 1.2, 1.2) == pytest.approx(0.6, abs=1e-12)
        assert jackknife_combine(2.0, 1.8, 2.2, 1.9, 2.1) == pytest.approx(2.0, abs=1e-12)
        assert jackknife_combine(1.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_full_pipeline_runs_and_is_reproducible(self):
        rng = np.random.default_rng(7)
        n, t = 8, 40
        x = rng.normal(size=(n, t, 1))
        slopes = np.full((n, 1), 0.5)
        y = (np.einsum("itp,ip->it", x, slopes) >= rng.normal(size=(n, t))).astype(float)
        data = PanelData(y=y, x=x)
        cfg = FitConfig(num_factors=0, n_starts=1)
        a = jackknife_bias_correct(data, PROBIT, cfg, split_seed=11)
        b = jackknife_bias_correct(data, PROBIT, cfg, split_seed=11)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (1,)
        assert np.isfinite(a).all()

    def test_odd_unit_count_drops_last_in_unit_halves_only(self):
        rng = np.random.default_rng(8)
        n, t = 9, 40
        x = rng.normal(size=(n, t, 1))
        slopes = np.full((n, 1), 0.4)
        y = (np.einsum("itp,ip->it", x, slopes) >= rng.normal(size=(n, t))).astype(float)
        data = PanelData(y=y, x=x)
        out = jackknife_bias_correct(data, PROBIT, FitConfig(num_factors=0), split_seed=3)
        assert np.isfinite(out).all()


class TestAveragePartialEffects:
    def test_unit_density_link_returns_slopes(self):
        rng = np.random.default_rng(9)
        n, t = 4, 6
        x = 0.05 * rng.normal(size=(n, t, 1))
        slopes = 0.1 * rng.normal(size=(n, 1))
        data = PanelData(y=np.zeros((n, t)), x=x)
        params = ParameterSet(slopes, np.zeros((n, 0)), np.zeros((t, 0)))
        link = LinkFamily.uniform(-0.5, 0.5)  # density 1 on the whole index range
        ape = average_partial_effects(data, _result(params, link), link)
        np.testing.assert_allclose(ape.delta, slopes, atol=1e-12)

    def test_zero_slopes_zero_effects(self):
        data = PanelData(y=np.zeros((2, 3)), x=np.ones((2, 3, 1)))
        params = ParameterSet(np.zeros((2, 1)), np.zeros((2, 0)), np.zeros((3, 0)))
        ape = average_partial_effects(data, _result(params))
        np.testing.assert_array_equal(ape.delta, 0.0)

    def test_probit_density_at_zero_index(self):
        data = PanelData(y=np.zeros((2, 3)), x=np.zeros((2, 3, 1)))
        params = ParameterSet(np.ones((2, 1)), np.zeros((2, 0)), np.zeros((3, 0)))
        ape = average_partial_effects(data, _result(params))
        np.testing.assert_allclose(ape.delta, 0.3989422804014327, atol=1e-12)

    def test_rank_one_structure(self):
        rng = np.random.default_rng(10)
        data, res = _mild_fit(rng, n=6, t=40, p=2)
        ape = average_partial_effects(data, res)
        slopes = res.params.slopes
        ratio = ape.delta / slopes
        for i in range(6):
            finite = np.isfinite(ratio[i]) & (np.abs(slopes[i]) > 1e-12)
            if finite.sum() > 1:
                vals = ratio[i][finite]
                assert np.max(vals) - np.min(vals) < 1e-12
