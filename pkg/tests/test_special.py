import math

import numpy as np
import pytest
import scipy.special as sp
import scipy.stats as st
from scipy.integrate import quad

from mrplab.errors import ParameterDomainError
from mrplab.special import (
    chi_square_sf,
    kolmogorov_sf,
    ks_critical_value,
    ks_one_sample_pvalue,
    regularized_incomplete_gamma,
    regularized_incomplete_gamma_upper,
)


def test_shape_one_closed_form():
    # P(1, x) = 1 - e^{-x}
    for x in [0.1, 1.0, 5.0]:
        assert regularized_incomplete_gamma(1.0, x) == pytest.approx(-math.expm1(-x), abs=1e-14)


def test_zero_argument():
    assert regularized_incomplete_gamma(0.7, 0.0) == 0.0
    assert regularized_incomplete_gamma(3.0, 0.0) == 0.0


def test_half_shape_is_erf():
    # P(1/2, x) = erf(sqrt(x)); also cross-check by adaptive numeric integration
    assert regularized_incomplete_gamma(0.5, 1.0) == pytest.approx(math.erf(1.0), abs=1e-13)
    oracle, _ = quad(lambda t: t**-0.5 * math.exp(-t) / math.gamma(0.5), 0.0, 1.0)
    assert regularized_incomplete_gamma(0.5, 1.0) == pytest.approx(oracle, abs=1e-11)


def test_against_scipy_over_shapes():
    rng = np.random.default_rng(0)
    for a in [0.05, 0.2, 0.5, 0.99, 1.0, 1.5, 2.7, 10.0, 57.3, 250.0, 500.0]:
        x = np.abs(rng.gamma(2.0, a / 2.0 + 1.0, 1000))
        mine = regularized_incomplete_gamma(a, x)
        ref = sp.gammainc(a, x)
        assert np.max(np.abs(mine - ref)) < 1e-12


def test_against_scipy_huge_shape():
    # prefactor cancellation grows with the shape; a=2000 is far beyond any
    # shape this package produces, tolerate a few ulps more there
    rng = np.random.default_rng(3)
    x = np.abs(rng.gamma(2.0, 1001.0, 1000))
    assert np.max(np.abs(regularized_incomplete_gamma(2000.0, x) - sp.gammainc(2000.0, x))) < 1e-11


def test_monotone_in_x_and_limits():
    xs = np.linspace(0.0, 60.0, 500)
    for a in [0.3, 1.0, 4.5]:
        p = regularized_incomplete_gamma(a, xs)
        assert np.all(np.diff(p) >= -1e-15)
        assert p[0] == 0.0
        assert p[-1] > 1.0 - 1e-12
    assert regularized_incomplete_gamma(2.0, np.inf) == 1.0


def test_upper_is_complement():
    rng = np.random.default_rng(1)
    x = np.abs(rng.gamma(2.0, 2.0, 500))
    for a in [0.4, 1.0, 6.0]:
        p = regularized_incomplete_gamma(a, x)
        q = regularized_incomplete_gamma_upper(a, x)
        assert np.max(np.abs(p + q - 1.0)) < 1e-12


def test_domain_errors():
    with pytest.raises(ParameterDomainError):
        regularized_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ParameterDomainError):
        regularized_incomplete_gamma(-2.0, 1.0)
    with pytest.raises(ParameterDomainError):
        regularized_incomplete_gamma(1.0, -0.5)


def test_chi_square_sf_matches_scipy():
    for df in [1, 4, 16, 40]:
        for x in [0.5, 3.0, 17.2, 80.0]:
            assert chi_square_sf(x, df) == pytest.approx(st.chi2.sf(x, df), abs=1e-12)


def test_kolmogorov_sf_matches_scipy():
    for lam in [0.05, 0.2, 0.39, 0.41, 0.7, 1.0, 1.36, 1.95, 3.0]:
        assert kolmogorov_sf(lam) == pytest.approx(sp.kolmogorov(lam), abs=1e-12)


def test_ks_critical_value_inverts_pvalue():
    for n, alpha in [(100, 0.05), (1000, 0.01), (100000, 0.001)]:
        d = ks_critical_value(n, alpha)
        assert ks_one_sample_pvalue(d, n) == pytest.approx(alpha, rel=1e-6)
