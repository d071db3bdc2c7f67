import math

import numpy as np
import pytest
from hypothesis import given, settings

from formres.errors import DegenerateTrapping
from formres.geometry import SdsParams, photon_sphere_radius
from formres.trapping import (escape_function_check, gap_condition, gap_lambda_threshold, gap_threshold,
                              hamilton_flow, linearization, lyapunov_fit, nu_min, principal_symbol,
                              trapped_eta_sq)

from conftest import lambda_max, sds_params


def test_reference_nu_min(sds4):
    assert nu_min(sds4) == pytest.approx(12.163272811190748, rel=1e-12)


def test_lyapunov_fit_matches_closed_form(sds4):
    fit = lyapunov_fit(sds4)
    assert fit.ok
    assert abs(fit.rate - nu_min(sds4)) / nu_min(sds4) < 1e-3


def test_linearization_eigenvalues(sds5):
    w = np.linalg.eigvals(linearization(sds5))
    assert max(w.real) == pytest.approx(nu_min(sds5), rel=1e-10)
    assert min(w.real) == pytest.approx(-nu_min(sds5), rel=1e-10)


def test_trapped_orbit_stays(sds4):
    r_p = photon_sphere_radius(sds4)
    traj = hamilton_flow(sds4, r_p, 0.0, trapped_eta_sq(sds4), (0.0, 1.0), t_eval=np.linspace(0, 1, 20))
    assert np.max(np.abs(traj.r - r_p)) < 1e-9
    assert abs(principal_symbol(sds4, r_p, 0.0, trapped_eta_sq(sds4))) < 1e-9


def test_escaping_orbit_conserves_symbol(sds4):
    traj = hamilton_flow(sds4, 3.2, 0.0, trapped_eta_sq(sds4), (0.0, 2.0), t_eval=np.linspace(0, 2, 50))
    vals = traj.symbol(sds4)
    assert np.max(np.abs(vals - vals[0])) < 1e-8 * max(1.0, abs(vals[0]))


@pytest.mark.parametrize("n", [4, 5, 6])
def test_escape_function_no_violations(n):
    p = SdsParams.from_lambda(n, 1.0, 0.3 * lambda_max(n))
    rep = escape_function_check(p, sample_size=2000, seed=n)
    assert rep.violations == 0
    assert rep.min_value > 0


@given(sds_params())
@settings(max_examples=100, deadline=None)
def test_gap_verdict_agrees_with_direct_comparison(p):
    v = gap_condition(p)
    assert v.holds == v.comparison
    if p.n >= 5:
        assert v.holds


def test_gap_threshold_n4():
    lam = gap_lambda_threshold(4)
    assert abs(9 * lam - 1 / 12) < 1e-12
    assert gap_threshold(4) == pytest.approx(1 / 12)
    assert gap_lambda_threshold(5) == 0.0


def test_gap_margin_reference(sds4):
    assert gap_condition(sds4).margin == pytest.approx(0.09 - 1 / 12, abs=1e-14)


def test_degenerate_trapping_detected():
    # outside the nondegenerate range the radicand changes sign
    p = SdsParams.from_lambda(4, 1.0, 0.04)
    with pytest.raises(DegenerateTrapping):
        nu_min(p)
    assert math.isfinite(nu_min(SdsParams.from_lambda(4, 1.0, 0.03)))
