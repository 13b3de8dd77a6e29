"""Link family values, symmetry identities, and derivative consistency."""

import numpy as np
import pytest

from ifepanel import LinkFamily
from ifepanel.errors import DataValidationError

PROBIT = LinkFamily.probit()
LOGIT = LinkFamily.logit()


class TestExactValues:
    def test_probit_cdf_at_zero(self):
        assert PROBIT.cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_logit_cdf_at_two(self):
        # high-precision evaluation of 1/(1 + e^-2)
        assert LOGIT.cdf(2.0) == pytest.approx(0.8807970779778824, abs=1e-12)

    def test_uniform_cdf_identity_on_support(self):
        u = LinkFamily.uniform(0.0, 1.0)
        assert u.cdf(0.3) == pytest.approx(0.3, abs=1e-15)

    def test_logit_pdf_at_zero(self):
        assert LOGIT.pdf(0.0) == pytest.approx(0.25, abs=1e-15)

    def test_probit_pdf_at_zero(self):
        assert PROBIT.pdf(0.0) == pytest.approx(1.0 / np.sqrt(2.0 * np.pi), abs=1e-15)

    def test_uniform_pdf_flat(self):
        u = LinkFamily.uniform(0.0, 1.0)
        assert u.pdf(0.5) == pytest.approx(1.0, abs=1e-15)

    def test_pdf_deriv_at_zero(self):
        assert PROBIT.pdf_deriv(0.0) == 0.0
        assert LOGIT.pdf_deriv(0.0) == 0.0

    def test_probit_pdf_deriv_at_one(self):
        # -z * standard normal density at z = 1
        expected = -np.exp(-0.5) / np.sqrt(2.0 * np.pi)
        assert PROBIT.pdf_deriv(1.0) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-0.2419707245191434, abs=1e-12)


class TestSymmetry:
    @pytest.mark.parametrize("link", [PROBIT, LOGIT], ids=["probit", "logit"])
    def test_cdf_reflection(self, link):
        z = np.linspace(-8.0, 8.0, 2001)
        np.testing.assert_allclose(link.cdf(z) + link.cdf(-z), 1.0, atol=1e-12)

    @pytest.mark.parametrize("link", [PROBIT, LOGIT], ids=["probit", "logit"])
    def test_sf_complements_cdf(self, link):
        z = np.linspace(-8.0, 8.0, 801)
        np.testing.assert_allclose(link.sf(z), 1.0 - link.cdf(z), atol=1e-12)

    def test_logit_pdf_closed_form(self):
        z = np.linspace(-20.0, 20.0, 4001)
        g = LOGIT.cdf(z) * (1.0 - LOGIT.cdf(z))
        np.testing.assert_allclose(LOGIT.pdf(z), g, atol=1e-12)


class TestDerivativeConsistency:
    """pdf must differentiate cdf and pdf_deriv must differentiate pdf."""

    GRID = np.linspace(-8.0, 8.0, 1601)

    @pytest.mark.parametrize("link", [PROBIT, LOGIT], ids=["probit", "logit"])
    def test_pdf_matches_cdf_difference(self, link):
        h = 1e-5
        numeric = (link.cdf(self.GRID + h) - link.cdf(self.GRID - h)) / (2 * h)
        np.testing.assert_allclose(link.pdf(self.GRID), numeric, rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("link", [PROBIT, LOGIT], ids=["probit", "logit"])
    def test_pdf_deriv_matches_pdf_difference(self, link):
        h = 1e-5
        numeric = (link.pdf(self.GRID + h) - link.pdf(self.GRID - h)) / (2 * h)
        np.testing.assert_allclose(link.pdf_deriv(self.GRID), numeric, rtol=1e-6, atol=1e-9)

    def test_cdf_nondecreasing_and_bounded(self):
        for link in (PROBIT, LOGIT, LinkFamily.uniform(-0.5, 0.5)):
            vals = link.cdf(self.GRID)
            assert np.all(np.diff(vals) >= 0)
            assert np.all((vals >= 0) & (vals <= 1))


class TestConfigParsing:
    def test_from_spec_probit_logit(self):
        assert LinkFamily.from_spec("probit").kind == "probit"
        assert LinkFamily.from_spec("logit").kind == "logit"

    def test_from_spec_uniform_with_support(self):
        u = LinkFamily.from_spec("uniform:-1:3")
        assert u.kind == "uniform"
        assert (u.lo, u.hi) == (-1.0, 3.0)

    def test_from_spec_rejects_unknown(self):
        with pytest.raises(DataValidationError):
            LinkFamily.from_spec("cauchy")

    def test_uniform_rejects_empty_support(self):
        with pytest.raises(DataValidationError):
            LinkFamily.uniform(2.0, 2.0)
