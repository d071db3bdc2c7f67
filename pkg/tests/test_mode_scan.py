import numpy as np
import pytest

from formres import evolve as ev
from formres.errors import ConfigError, IndicialCollision
from formres.geometry import SdsParams
from formres.mode_scan import (ConnectionSettings, cauchy_riemann_residual, connection_determinant, frobenius_series,
                               horizon_exponent, mode_scan, polynomial_ode, refine_zero, scalar_sector,
                               sector_from_name, twoform_sector, winding_number, zero_frequency_ratio)

LOWER_ZERO = 0.09023073005 - 0.10299536917j


@pytest.fixture(scope="module")
def p4():
    return SdsParams.from_lambda(4, 1.0, 0.01)


def test_sector_names():
    assert sector_from_name(4, "scalar_l2") == scalar_sector(4, 2)
    assert sector_from_name(5, "twoform") == twoform_sector(5)
    assert sector_from_name(4, "scalar") == scalar_sector(4, 0)
    with pytest.raises(ConfigError):
        sector_from_name(4, "vector")


def test_frobenius_series_solves_ode(p4):
    sector = scalar_sector(4, 1)
    ode = polynomial_ode(p4, sector)
    sigma = np.array([0.4 + 0.3j])
    for side in ("minus", "plus"):
        ser = frobenius_series(p4, sector, side, sigma)
        x0 = (0.2 if side == "minus" else -0.2) * ser.radius
        # second derivative by differencing the first
        eps = 1e-5 * abs(x0)
        (v, dv), (_, dv_p), (_, dv_m) = (ser.evaluate(x) for x in (x0, x0 + eps, x0 - eps))
        d2v = (dv_p - dv_m) / (2 * eps)
        r = ser.r0 + x0
        res = ode.a2(r) * d2v + ode.a1(r) * dv + (ode.b0(r) + sigma**2 * ode.b2(r)) * v
        scale = abs(ode.a2(r) * d2v) + abs(ode.a1(r) * dv) + abs(ode.b2(r) * sigma**2 * v)
        assert abs(res[0]) < 1e-6 * scale[0]
        assert ser.rho[0] == pytest.approx(horizon_exponent(p4, side, sigma)[0])


def test_indicial_collision_reported(p4):
    sigma = -1j / p4.horizons.beta_minus
    with pytest.raises(IndicialCollision):
        frobenius_series(p4, scalar_sector(4), "minus", sigma)
    # the opposite sign is harmless: the wanted exponent is the larger one
    frobenius_series(p4, scalar_sector(4), "minus", -sigma)


def test_zero_frequency_is_a_zero(p4):
    assert zero_frequency_ratio(p4, scalar_sector(4)) < 1e-3
    assert zero_frequency_ratio(p4, twoform_sector(4)) < 1e-3
    # not for a higher harmonic
    assert zero_frequency_ratio(p4, scalar_sector(4, 1)) > 1e-2


def test_determinant_independent_of_matching_radius(p4):
    sigma = np.array([0.5 + 0.3j, -1.2 + 0.7j])
    a = connection_determinant(p4, scalar_sector(4), sigma)
    b = connection_determinant(p4, scalar_sector(4), sigma, match_radius=4.5)
    assert np.allclose(a, b, rtol=1e-7)


def test_order_doubling_stable(p4):
    sigma = np.array([0.02j, 1.0 + 0.5j, -2.0 + 1.0j, 0.3 + 0.02j])
    a = connection_determinant(p4, scalar_sector(4), sigma, ConnectionSettings(order=80))
    b = connection_determinant(p4, scalar_sector(4), sigma, ConnectionSettings(order=160))
    assert np.allclose(a, b, rtol=1e-7)


def test_determinant_analytic(p4):
    res = cauchy_riemann_residual(p4, scalar_sector(4), [0.5 + 0.5j, -1.0 + 0.1j])
    assert np.all(res < 1e-4)


def test_small_box_has_no_zeros(p4):
    res = mode_scan(p4, scalar_sector(4), (-0.5, 0.5), (0.02, 0.5), 0.02)
    assert res.winding == 0
    assert not res.skipped
    # the smallest values sit next to the zero at sigma = 0, just below the box
    i, j = np.unravel_index(np.argmin(np.abs(res.det)), res.det.shape)
    assert i == 0 and abs(res.re[j]) < 0.03
    assert len(res.rows()) == len(res.re) * len(res.im)


def test_winding_number_counts_zero():
    theta = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    z = 0.3 + np.exp(1j * theta)
    assert winding_number(z) == 1
    assert winding_number(z**2) == 2
    assert winding_number(z + 2) == 0


def test_lower_zero_matches_evolution(p4):
    zero = refine_zero(p4, scalar_sector(4), 0.09 - 0.1j)
    assert abs(zero - LOWER_ZERO) < 1e-8
    assert abs(refine_zero(p4, twoform_sector(4), 0.09 - 0.1j) - zero) < 1e-8
    data = (lambda x: ev.bump(x, 0.0, 5.0), lambda x: 0.3 * ev.bump(x, 2.0, 4.0))
    ts = ev.evolve_scalar(p4, data, 0, 150.0, N=4000)
    fit = ev.fit_decay(ts.t, ts.values["u"][1], (60.0, 150.0))
    assert fit.rate == pytest.approx(-zero.imag, rel=1e-3)
    assert fit.omega == pytest.approx(abs(zero.real), rel=1e-3)
