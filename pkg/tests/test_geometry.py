import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.optimize import brentq

from formres.errors import ConfigError, DegenerateSpacetime
from formres.geometry import (SdsParams, check_nondegeneracy, dmu, dmu_tilde, mu, mu_tilde,
                              nondegeneracy_margin, photon_sphere_radius)

from conftest import lambda_max, sds_params


def test_reference_horizons(sds4):
    h = sds4.horizons
    assert h.r_minus == pytest.approx(2.091488484413166, rel=1e-12)
    assert h.r_plus == pytest.approx(8.788850662499728, rel=1e-12)
    assert h.r_p == pytest.approx(3.0, rel=1e-14)
    assert h.beta_minus == pytest.approx(2 / dmu(sds4, h.r_minus), rel=1e-12)
    assert h.beta_plus == pytest.approx(-2 / dmu(sds4, h.r_plus), rel=1e-12)


def test_reference_horizons_n5(sds5):
    h = sds5.horizons
    assert (h.r_minus, h.r_plus, h.r_p) == pytest.approx((1.50134, 4.21260, 2.0), abs=1e-5)


def test_lambda_cosmo_roundtrip():
    p = SdsParams.from_lambda(6, 1.3, 0.002)
    assert p.lam == pytest.approx(0.002, rel=1e-15)
    assert p.cosmo == pytest.approx(0.002 * 4 * 5 / 2)


@given(sds_params())
@settings(max_examples=60, deadline=None)
def test_horizons_are_ordered_roots(p):
    h = p.horizons
    assert 0 < h.r_minus < h.r_p < h.r_plus
    assert abs(mu(p, h.r_minus)) < 1e-10 and abs(mu(p, h.r_plus)) < 1e-10
    assert mu(p, h.r_p) > 0
    assert h.beta_minus > 0 and h.beta_plus > 0


def _critical_point(p):
    # complex-step derivative of mu / r^2, independent of any closed form
    h = p.horizons
    g = lambda r: (mu(p, complex(r, 1e-30)) / complex(r, 1e-30) ** 2).imag / 1e-30
    return brentq(g, h.r_minus, h.r_plus, xtol=1e-15, rtol=1e-15)


@given(sds_params())
@settings(max_examples=60, deadline=None)
def test_photon_sphere_is_critical_point_of_mu_tilde(p):
    r_c = _critical_point(p)
    assert abs(r_c - photon_sphere_radius(p)) <= 1e-10 * r_c
    assert abs(dmu_tilde(p, photon_sphere_radius(p))) < 1e-12


@given(sds_params())
@settings(max_examples=40, deadline=None)
def test_tortoise_roundtrip(p):
    h = p.horizons
    r = np.linspace(h.r_minus, h.r_plus, 41)[1:-1]
    back = p.r_from_tortoise(p.tortoise(r))
    assert np.allclose(back, r, rtol=1e-9)
    # d r_* / d r = 1/mu
    eps = 1e-6 * h.r_p
    slope = (p.tortoise(r + eps) - p.tortoise(r - eps)) / (2 * eps)
    assert np.allclose(slope * mu(p, r), 1.0, rtol=1e-5)


def test_nondegeneracy_boundary():
    n, m = 5, 1.0
    top = lambda_max(n, m)
    assert check_nondegeneracy(SdsParams.from_lambda(n, m, 0.999 * top))
    assert not check_nondegeneracy(SdsParams.from_lambda(n, m, 1.001 * top))
    assert nondegeneracy_margin(SdsParams.from_lambda(n, m, top)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DegenerateSpacetime):
        SdsParams.from_lambda(n, m, 1.01 * top).horizons


@pytest.mark.parametrize("args", [(3, 1.0, 0.1), (4, -1.0, 0.1), (4, 1.0, 0.0), (4.5, 1.0, 0.1)])
def test_invalid_parameters(args):
    with pytest.raises(ConfigError):
        SdsParams(*args)


def test_mu_tilde_derivative_consistent(sds4):
    r = np.linspace(2.5, 8.0, 7)
    eps = 1e-6
    fd = (mu_tilde(sds4, r + eps) - mu_tilde(sds4, r - eps)) / (2 * eps)
    assert np.allclose(fd, dmu_tilde(sds4, r), rtol=1e-6, atol=1e-12)
    assert np.allclose(mu_tilde(sds4, r), mu(sds4, r) / r**2)
    assert math.isclose(photon_sphere_radius(sds4), 3.0)
