"""Null-geodesic trapping at the photon sphere of Schwarzschild-de Sitter.

Phase space is reduced to (r, xi) with the angular momentum ``|eta|^2`` and
the rescaled frequency ``z = +-1`` held fixed.  The symbol studied is

    p = Delta_r xi^2 - (r^4 / Delta_r) z^2 + |eta|^2,   Delta_r = r^2 mu,

which is ``-r^2`` times the dual metric evaluated at ``(tau, xi, eta) = (z, xi, eta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DegenerateTrapping, HorizonDomain
from .geometry import SdsParams, dmu, lambda_small, mu, mu_tilde, photon_sphere_radius


def delta_r(params: SdsParams, r):
    return r**2 * mu(params, r)


def delta_r_prime(params: SdsParams, r):
    return 2 * r * mu(params, r) + r**2 * dmu(params, r)


def _w(params, r):
    """r^4 / Delta_r = 1 / mu_tilde and its r-derivative."""
    m, dm = mu(params, r), dmu(params, r)
    w = r**2 / m
    dw = 2 * r / m - r**2 * dm / m**2
    return w, dw


def principal_symbol(params: SdsParams, r, xi, eta_sq, z=1.0):
    dr = delta_r(params, r)
    if np.any(np.asarray(dr) <= 0):
        raise HorizonDomain(f"Delta_r <= 0 at r={r}; the symbol is only defined between the horizons")
    return dr * xi**2 - r**4 / dr * z**2 + eta_sq


def dual_metric(params: SdsParams, r, tau, xi, eta_sq):
    """``G(tau, xi, eta)`` for ``g = mu dt^2 - mu^-1 dr^2 - r^2 domega^2``."""
    m = mu(params, r)
    return tau**2 / m - m * xi**2 - eta_sq / r**2


def reduced_field(params: SdsParams, z=1.0):
    """Right-hand side of the Hamilton equations in (r, xi)."""

    def f(t, y):
        r, xi = y
        dr = delta_r(params, r)
        _, dw = _w(params, r)
        return [2 * dr * xi, -(delta_r_prime(params, r) * xi**2 - dw * z**2)]

    return f


@dataclass
class Trajectory:
    t: np.ndarray
    r: np.ndarray
    xi: np.ndarray
    eta_sq: float
    z: float
    escaped: bool

    def symbol(self, params):
        return principal_symbol(params, self.r, self.xi, self.eta_sq, self.z)


def hamilton_flow(params: SdsParams, r0: float, xi0: float, eta_sq: float, t_span,
                  z: float = 1.0, t_eval=None, rtol=1e-12, atol=1e-14, stop_at=None) -> Trajectory:
    """Integrate the reduced flow; trajectories leaving a neighbourhood of the horizons are flagged.

    ``stop_at`` optionally ends the integration once ``|r - r_p|`` exceeds it.
    """
    h = params.horizons
    if not h.r_minus < r0 < h.r_plus:
        raise HorizonDomain(f"initial radius {r0} is not between the horizons")
    width = h.r_plus - h.r_minus
    events = []

    def near_horizon(t, y):
        return min(y[0] - h.r_minus, h.r_plus - y[0]) - 1e-6 * width

    near_horizon.terminal = True
    events.append(near_horizon)
    if stop_at is not None:
        def far(t, y):
            return abs(y[0] - h.r_p) - stop_at
        far.terminal = True
        events.append(far)
    sol = solve_ivp(reduced_field(params, z), t_span, [r0, xi0], method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval, events=events, dense_output=t_eval is None)
    escaped = bool(len(sol.t_events[0]))
    return Trajectory(sol.t, sol.y[0], sol.y[1], eta_sq, z, escaped)


def trapped_eta_sq(params: SdsParams, z=1.0) -> float:
    r_p = photon_sphere_radius(params)
    return r_p**4 / delta_r(params, r_p) * z**2


def linearization(params: SdsParams, z=1.0) -> np.ndarray:
    """Jacobian of the reduced flow at (r_p, 0), written through mu_tilde."""
    n = params.n
    r_p = photon_sphere_radius(params)
    mt = mu_tilde(params, r_p)
    return np.array([[0.0, 2 * r_p**4 * mt],
                     [2 * (n - 3) * r_p**-4 * mt**-2 * z**2, 0.0]])


def nu_min(params: SdsParams) -> float:
    n = params.n
    r_p = photon_sphere_radius(params)
    radicand_den = 1.0 - (n - 1) / (n - 3) * r_p**2 * lambda_small(params)
    if radicand_den <= 0:
        raise DegenerateTrapping("1 - (n-1)/(n-3) r_p^2 lam must be positive")
    return 2 * r_p * math.sqrt((n - 1) / radicand_den)


@dataclass
class LyapunovFit:
    rate: float
    window: tuple[float, float]
    samples: int
    ok: bool


def lyapunov_fit(params: SdsParams, amplitude=1e-7, band=(1e-6, 1e-3), z=1.0) -> LyapunovFit:
    """Growth rate of a perturbation started along the unstable direction at the trapped point.

    ``log |r - r_p|`` is fitted linearly in time over the samples whose
    amplitude lies in ``band``.
    """
    J = linearization(params, z)
    w, v = np.linalg.eig(J)
    vec = np.real(v[:, int(np.argmax(np.real(w)))])
    vec = vec / abs(vec[0])
    r_p = photon_sphere_radius(params)
    nu = float(np.max(np.real(w)))
    t_end = 1.5 * math.log(band[1] / amplitude) / nu
    t_eval = np.linspace(0.0, t_end, 4000)
    traj = hamilton_flow(params, r_p + amplitude * vec[0], amplitude * vec[1], trapped_eta_sq(params, z),
                         (0.0, t_end), z=z, t_eval=t_eval, stop_at=10 * band[1])
    dev = np.abs(traj.r - r_p)
    sel = (dev >= band[0]) & (dev <= band[1])
    if sel.sum() < 10:
        return LyapunovFit(float("nan"), band, int(sel.sum()), False)
    slope = np.polyfit(traj.t[sel], np.log(dev[sel]), 1)[0]
    return LyapunovFit(float(slope), band, int(sel.sum()), True)


def _hp_r(params, r, xi):
    return 2 * delta_r(params, r) * xi


def _hp2_r(params, r, xi, z):
    dr, drp = delta_r(params, r), delta_r_prime(params, r)
    _, dw = _w(params, r)
    return 4 * dr * drp * xi**2 + 2 * dr * (-drp * xi**2 + dw * z**2)


def escape_second_derivative(params, r, xi, z=1.0):
    """``H_p^2 F`` for ``F = (r - r_p)^2``."""
    r_p = photon_sphere_radius(params)
    return 2 * _hp_r(params, r, xi) ** 2 + 2 * (r - r_p) * _hp2_r(params, r, xi, z)


@dataclass
class EscapeReport:
    samples: int
    violations: int
    on_trapped_set: int
    min_value: float


def escape_function_check(params: SdsParams, sample_size: int = 10_000, seed: int = 0,
                          trap_tol: float = 1e-9) -> EscapeReport:
    """Sample the characteristic set where ``H_p F = 0`` and test ``H_p^2 F > 0`` off the trapped set.

    ``H_p F = 2 (r - r_p) H_p r`` vanishes exactly when ``r = r_p`` or ``xi = 0``;
    both branches are sampled, with ``|eta|^2`` fixed by ``p = 0``.
    """
    rng = np.random.default_rng(seed)
    h = params.horizons
    r_p = h.r_p
    half = sample_size // 2
    z = rng.choice([-1.0, 1.0], size=sample_size)
    # branch xi = 0, arbitrary radius
    r1 = rng.uniform(h.r_minus, h.r_plus, size=half)
    r1 = np.clip(r1, h.r_minus + 1e-9, h.r_plus - 1e-9)
    xi1 = np.zeros(half)
    # branch r = r_p, |xi| limited so that |eta|^2 >= 0 on p = 0
    xmax = r_p**2 / delta_r(params, r_p)
    r2 = np.full(sample_size - half, r_p)
    xi2 = rng.uniform(-xmax, xmax, size=sample_size - half)
    r = np.concatenate([r1, r2])
    xi = np.concatenate([xi1, xi2])
    eta_sq = r**4 / delta_r(params, r) * z**2 - delta_r(params, r) * xi**2
    assert np.all(eta_sq >= 0)
    val = escape_second_derivative(params, r, xi, z)
    trapped = (np.abs(r - r_p) <= trap_tol * r_p) & (np.abs(xi) <= trap_tol)
    bad = (val <= 0) & ~trapped
    return EscapeReport(sample_size, int(bad.sum()), int(trapped.sum()), float(np.min(val[~trapped])))


@dataclass
class GapVerdict:
    holds: bool
    margin: float
    subprincipal_eigs: tuple[float, float]
    nu_min: float
    comparison: bool  # 2 r_p < nu_min / 2


def gap_threshold(n: int) -> float:
    return (5 - n) * (n - 3) / (4 * (n - 1))


def gap_condition(params: SdsParams) -> GapVerdict:
    """Whether the subprincipal eigenvalues ``+-r^2 mu'/mu`` at ``r_p`` stay below ``nu_min / 2``."""
    r_p = photon_sphere_radius(params)
    sub = r_p**2 * dmu(params, r_p) / mu(params, r_p)
    nu = nu_min(params)
    margin = r_p**2 * lambda_small(params) - gap_threshold(params.n)
    return GapVerdict(margin > 0, margin, (sub, -sub), nu, 2 * r_p < nu / 2)


def gap_lambda_threshold(n: int, mass: float = 1.0) -> float:
    """Smallest lam for which ``2 r_p < nu_min / 2``, by bisection on the direct comparison."""
    hi = (((n - 3) ** (n - 3) / (n - 1) ** (n - 1)) / mass**2) ** (1.0 / (n - 3))
    g = lambda lam: nu_min(SdsParams.from_lambda(n, mass, lam)) / 2 - 2 * photon_sphere_radius(
        SdsParams.from_lambda(n, mass, lam))
    lo = 1e-14 * hi
    if g(lo) > 0:
        return 0.0
    return brentq(g, lo, hi * (1 - 1e-12), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class TrappingReport:
    r_p: float
    nu_min: float
    subprincipal_eigs: tuple[float, float]
    gap_condition_holds: bool
    gap_margin: float
    fitted_lyapunov: float
    fit_ok: bool
    escape: EscapeReport


def trapping_report(params: SdsParams, sample_size: int = 10_000, seed: int = 0) -> TrappingReport:
    gap = gap_condition(params)
    fit = lyapunov_fit(params)
    return TrappingReport(photon_sphere_radius(params), gap.nu_min, gap.subprincipal_eigs, gap.holds,
                          gap.margin, fit.rate, fit.ok, escape_function_check(params, sample_size, seed))
