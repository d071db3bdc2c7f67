"""Frequency-domain connection problem for the scalar-type radial ODEs of Schwarzschild-de Sitter.

With ``u = exp(-i sigma t) v(r)`` the sector equations become

    r^-w (r^w mu v')' + (sigma^2/mu - L/r^2) v = 0

(``w = n - 2`` for scalars in the angular channel with eigenvalue ``L``;
``w = 2 - n``, ``L = 0`` for the profile of ``f omega``, which also governs
``r^(n-2) E`` for ``E dt ^ dr``).  Multiplying through by a power of ``r``
and ``P = r^(n-3) mu`` gives an ODE with polynomial coefficients whose only
singular points near the physical interval are the horizons.

A resonance is a frequency where one solution behaves like
``|r - r_h|^(-i beta sigma / 2)`` times a function analytic at ``r_h`` at
*both* horizons.  Each such local solution is built from its Frobenius
series, carried to a common radius by numerical integration, and the
Wronskian of the two is the connection determinant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.optimize import newton

from .errors import ConfigError, IndicialCollision, SeriesDivergence
from .geometry import SdsParams, mu_polynomial


@dataclass(frozen=True)
class RadialSector:
    """Weight exponent ``w`` and angular eigenvalue ``L`` of a scalar-type sector."""

    name: str
    weight: float
    angular: float = 0.0


def scalar_sector(n: int, ell: int = 0) -> RadialSector:
    return RadialSector(f"scalar_l{ell}", n - 2.0, ell * (ell + n - 3.0))


def twoform_sector(n: int) -> RadialSector:
    return RadialSector("twoform", 2.0 - n, 0.0)


def sector_from_name(n: int, name: str) -> RadialSector:
    if name == "twoform":
        return twoform_sector(n)
    if name.startswith("scalar"):
        ell = int(name.split("_l")[1]) if "_l" in name else 0
        return scalar_sector(n, ell)
    raise ConfigError(f"unknown mode-scan sector {name!r}")


@dataclass(frozen=True)
class PolynomialOde:
    """``a2 v'' + a1 v' + (b0 + sigma^2 b2) v = 0`` with polynomial coefficients in ``r``."""

    a2: Polynomial
    a1: Polynomial
    b0: Polynomial
    b2: Polynomial


def polynomial_ode(params: SdsParams, sector: RadialSector) -> PolynomialOde:
    n = params.n
    if int(sector.weight) != sector.weight:
        raise ConfigError("sector weight must be an integer")
    w = int(sector.weight)
    P = Polynomial(mu_polynomial(params)[::-1])  # r^(n-3) mu
    e = w - n + 3                 # r^w mu = r^e P
    K = max(0, 1 - e, -(w + n - 3), 2 - w)
    r = Polynomial([0.0, 1.0])
    a2 = r ** (e + K) * P * P
    a1 = P * (e * r ** (e - 1 + K) * P + r ** (e + K) * P.deriv()) if e - 1 + K >= 0 else None
    if a1 is None:
        raise ConfigError("could not clear denominators for this sector")
    b0 = -sector.angular * r ** (w - 2 + K) * P
    b2 = r ** (w + n - 3 + K)
    return PolynomialOde(a2, a1, b0, b2)


def _shift(p: Polynomial, x0: float) -> np.ndarray:
    """Coefficients (ascending) of ``p(x0 + x)`` in powers of ``x``."""
    return np.asarray(p(Polynomial([x0, 1.0])).coef, dtype=float)


def _local_coefficients(ode: PolynomialOde, r0: float):
    """Write the ODE near a regular singular point as ``x^2 p2 v'' + x p1 v' + q v = 0``."""
    a2, a1 = _shift(ode.a2, r0), _shift(ode.a1, r0)
    b0, b2 = _shift(ode.b0, r0), _shift(ode.b2, r0)
    scale = np.max(np.abs(a2))
    if abs(a2[0]) > 1e-10 * scale or abs(a2[1]) > 1e-10 * scale or abs(a1[0]) > 1e-10 * scale:
        raise ConfigError(f"r = {r0} is not a regular singular point of the radial ODE")
    return a2[2:], a1[1:], b0, b2


def horizon_exponent(params: SdsParams, side: str, sigma):
    """The exponent ``-i beta sigma / 2`` selecting smooth behaviour across the horizon."""
    h = params.horizons
    beta = h.beta_minus if side == "minus" else h.beta_plus
    return -0.5j * beta * np.asarray(sigma, dtype=complex)


def _singular_points(params: SdsParams):
    """Zeros of ``r^(n-3) mu`` together with ``r = 0``."""
    return np.append(np.roots(mu_polynomial(params)), 0.0)


@dataclass
class FrobeniusSeries:
    """Local solution ``|x|^rho sum_k a_k x^k`` around ``r0``, vectorised over sigma."""

    r0: float
    rho: np.ndarray
    coeffs: np.ndarray  # (order + 1, len(sigma))
    radius: float

    def evaluate(self, x):
        """Value and derivative at offset ``x`` (same sign as the expansion side)."""
        k = np.arange(self.coeffs.shape[0])[:, None]
        powers = x ** k
        s = np.sum(self.coeffs * powers, axis=0)
        ds = np.sum(self.coeffs[1:] * k[1:] * x ** (k[1:] - 1), axis=0)
        lead = np.abs(x) ** self.rho
        return lead * s, lead * (ds + self.rho / x * s)

    def tail(self, x, terms: int = 3) -> np.ndarray:
        """Size of the last ``terms`` series terms relative to the partial sum."""
        k = np.arange(self.coeffs.shape[0])[:, None]
        vals = self.coeffs * x ** k
        return np.max(np.abs(vals[-terms:]), axis=0) / np.maximum(np.abs(np.sum(vals, axis=0)), 1e-300)


def frobenius_series(params: SdsParams, sector: RadialSector, side: str, sigma, order: int = 80,
                     collision_tol: float = 1e-8) -> FrobeniusSeries:
    """Coefficients of the horizon-regular local solution, normalised by ``a_0 = 1``."""
    h = params.horizons
    r0 = h.r_minus if side == "minus" else h.r_plus
    ode = polynomial_ode(params, sector)
    p2, p1, q0, q2 = _local_coefficients(ode, r0)
    sigma = np.atleast_1d(np.asarray(sigma, dtype=complex))
    rho = horizon_exponent(params, side, sigma)
    L = order + 1
    pad = lambda c: np.pad(c, (0, max(0, L - len(c))))[:L]
    p2, p1 = pad(p2), pad(p1)
    q = pad(q0)[:, None] + pad(q2)[:, None] * sigma[None, :] ** 2

    def F(j, s):
        return p2[j] * s * (s - 1) + p1[j] * s + q[j]

    # indicial polynomial F_0(s) = p2_0 s(s-1) + p1_0 s + q_0 ; the other root is rho_2
    other = -rho + (p2[0] - p1[0]) / p2[0]
    diff = rho - other
    near_int = np.abs(diff - np.round(diff.real)) < collision_tol
    bad = near_int & (np.round(diff.real) < 0)
    if np.any(bad):
        raise IndicialCollision(f"exponents differ by a negative integer at sigma={sigma[bad][0]}")
    a = np.zeros((L, len(sigma)), dtype=complex)
    a[0] = 1.0
    for m in range(1, L):
        acc = np.zeros(len(sigma), dtype=complex)
        for j in range(1, m + 1):
            acc += a[m - j] * F(j, m - j + rho)
        a[m] = -acc / F(0, m + rho)
    dist = np.sort(np.abs(_singular_points(params) - r0))
    radius = float(dist[1])  # dist[0] is the expansion point itself
    return FrobeniusSeries(r0, rho, a, radius)


def _integrate(ode: PolynomialOde, sigma, r_from, r_to, y0, dy0, rtol):
    m = len(sigma)
    s2 = sigma**2
    a2, a1, b0, b2 = ode.a2, ode.a1, ode.b0, ode.b2

    def rhs(r, y):
        v, dv = y[:m], y[m:]
        return np.concatenate([dv, -(a1(r) * dv + (b0(r) + s2 * b2(r)) * v) / a2(r)])

    sol = solve_ivp(rhs, (r_from, r_to), np.concatenate([y0, dy0]), method="DOP853", rtol=rtol,
                    atol=1e-30)
    if not sol.success:
        raise SeriesDivergence(f"ODE integration failed: {sol.message}")
    end = sol.y[:, -1]
    return end[:m], end[m:]


@dataclass
class ConnectionSettings:
    order: int = 80
    eval_fraction: float = 0.5
    rtol: float = 1e-11
    series_tol: float = 1e-12


def connection_determinant(params: SdsParams, sector: RadialSector, sigma, settings: ConnectionSettings | None = None,
                           match_radius: float | None = None) -> np.ndarray:
    """Wronskian of the two horizon-regular solutions at ``match_radius`` (default: photon sphere).

    Multiplied by ``r^w mu`` at the matching point, so the value does not
    depend on where the two solutions are compared.
    """
    st = settings or ConnectionSettings()
    sigma = np.atleast_1d(np.asarray(sigma, dtype=complex))
    h = params.horizons
    ode = polynomial_ode(params, sector)
    rm = match_radius if match_radius is not None else h.r_p
    ends = []
    for side, sign in (("minus", 1.0), ("plus", -1.0)):
        ser = frobenius_series(params, sector, side, sigma, st.order)
        x = sign * min(st.eval_fraction * ser.radius, abs(rm - ser.r0))
        tail = ser.tail(x)
        if np.any(tail > st.series_tol):
            raise SeriesDivergence(f"Frobenius truncation error {tail.max():.2e} exceeds {st.series_tol:.0e} "
                                   f"on the {side} side; raise the order or reduce eval_fraction")
        v, dv = ser.evaluate(x)
        r_start = ser.r0 + x
        if abs(r_start - rm) > 0:
            v, dv = _integrate(ode, sigma, r_start, rm, v, dv, st.rtol)
        ends.append((v, dv))
    (v1, d1), (v2, d2) = ends
    weight = rm ** sector.weight * float(params.mu(rm))
    return weight * (v1 * d2 - d1 * v2)


# ---------------------------------------------------------------- scan

@dataclass
class ScanResult:
    re: np.ndarray
    im: np.ndarray
    det: np.ndarray  # shape (len(im), len(re))
    winding: int
    min_ratio: float  # min |det| over the grid divided by its median
    skipped: list = field(default_factory=list)
    settings: ConnectionSettings | None = None

    def rows(self):
        """``(Re sigma, Im sigma, |det|, arg det)`` per grid point, row-major in ``Im sigma``."""
        out = []
        for i, y in enumerate(self.im):
            for j, x in enumerate(self.re):
                d = self.det[i, j]
                out.append((float(x), float(y), float(abs(d)), float(np.angle(d))))
        return out


def _grid(lo, hi, step):
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def winding_number(values: np.ndarray) -> int:
    """Winding of a closed sampled curve around 0 (first point not repeated)."""
    closed = np.append(values, values[0])
    dphi = np.angle(closed[1:] / closed[:-1])
    if np.any(np.abs(dphi) > 0.5 * math.pi):
        raise SeriesDivergence("argument jumps by more than pi/2 between samples; refine the contour")
    return int(round(np.sum(dphi) / (2 * math.pi)))


def box_boundary(det: np.ndarray) -> np.ndarray:
    """Counter-clockwise boundary samples of a grid stored as ``det[im, re]``."""
    bottom = det[0, :]
    right = det[1:, -1]
    top = det[-1, -2::-1]
    left = det[-2:0:-1, 0]
    return np.concatenate([bottom, right, top, left])


def mode_scan(params: SdsParams, sector: RadialSector, re_range=(-2.0, 2.0), im_range=(0.02, 1.0),
              step: float = 0.02, settings: ConnectionSettings | None = None) -> ScanResult:
    """Connection determinant on a rectangular grid, with a winding-number count of enclosed zeros."""
    st = settings or ConnectionSettings()
    re = _grid(*re_range, step)
    im = _grid(*im_range, step)
    det = np.empty((len(im), len(re)), dtype=complex)
    skipped = []
    for i, y in enumerate(im):
        row = re + 1j * y
        try:
            det[i] = connection_determinant(params, sector, row, st)
        except IndicialCollision:
            # fall back to point-by-point evaluation to isolate the offending frequencies
            for j, s in enumerate(row):
                try:
                    det[i, j] = connection_determinant(params, sector, s, st)[0]
                except IndicialCollision:
                    det[i, j] = np.nan
                    skipped.append(complex(s))
    mag = np.abs(det)
    wind = winding_number(box_boundary(det)) if not skipped else -1
    return ScanResult(re, im, det, wind, float(np.nanmin(mag) / np.nanmedian(mag)), skipped, st)


def cauchy_riemann_residual(params: SdsParams, sector: RadialSector, points, h: float = 1e-4,
                            settings: ConnectionSettings | None = None) -> np.ndarray:
    """``|d_y D - i d_x D| / |D'|`` by centred differences around each point."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    offs = np.array([h, -h, 1j * h, -1j * h])
    out = np.empty(len(points))
    for k, z in enumerate(points):
        d = connection_determinant(params, sector, z + offs, settings)
        dx = (d[0] - d[1]) / (2 * h)
        dy = (d[2] - d[3]) / (2 * h)
        out[k] = abs(dy - 1j * dx) / max(abs(dx), abs(dy), 1e-300)
    return out


def zero_frequency_ratio(params: SdsParams, sector: RadialSector, neighbours=None,
                         settings: ConnectionSettings | None = None) -> float:
    """``|det(0)|`` relative to the median of ``|det|`` at nearby frequencies."""
    if neighbours is None:
        neighbours = np.array([0.02, -0.02, 0.02j, 0.02 + 0.02j, -0.02 + 0.02j])
    d0 = connection_determinant(params, sector, 0.0, settings)[0]
    dn = connection_determinant(params, sector, neighbours, settings)
    return float(abs(d0) / np.median(np.abs(dn)))


def refine_zero(params: SdsParams, sector: RadialSector, guess: complex, tol: float = 1e-12,
                settings: ConnectionSettings | None = None) -> complex:
    """Secant iteration on the connection determinant from ``guess``.

    Intended for locating candidate resonances below the real axis, which
    the scan itself does not cover.
    """
    f = lambda s: connection_determinant(params, sector, s, settings)[0]
    try:
        return complex(newton(f, complex(guess), tol=tol, maxiter=100))
    except RuntimeError as exc:
        raise SeriesDivergence(f"secant iteration did not converge from {guess}: {exc}") from exc
