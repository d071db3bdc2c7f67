"""Explicit stationary Maxwell field on slowly rotating Kerr-de Sitter and its numerical verification.

Boyer-Lindquist coordinates (t, r, theta, phi), signature (+ - - -):

    g = Delta_r/(chi^2 rho^2) (dt - a sin^2 dphi)^2
        - Delta_th sin^2/(chi^2 rho^2) (a dt - (r^2 + a^2) dphi)^2
        - rho^2 (dr^2/Delta_r + dtheta^2/Delta_th)

with ``Delta_r = (r^2 + a^2)(1 - Lambda r^2/3) - 2 M r``,
``Delta_th = 1 + Lambda a^2 cos^2/3``, ``rho^2 = r^2 + a^2 cos^2`` and
``chi = 1 + Lambda a^2/3``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AxisSingularity, ConfigError, DegenerateSpacetime, HorizonDomain

T, R, TH, PH = range(4)


@dataclass(frozen=True)
class KdsParams:
    mass: float
    cosmo: float
    spin: float = 0.0

    def __post_init__(self):
        if not self.mass > 0 or not self.cosmo > 0:
            raise ConfigError("mass and cosmological constant must be positive")

    def delta_r(self, r):
        a2 = self.spin**2
        return (r**2 + a2) * (1 - self.cosmo * r**2 / 3) - 2 * self.mass * r

    @property
    def horizons(self) -> tuple[float, float]:
        """Event and cosmological horizon radii: the two largest positive roots of Delta_r."""
        a2, L = self.spin**2, self.cosmo
        roots = np.roots([-L / 3, 0.0, 1 - L * a2 / 3, -2 * self.mass, a2])
        real = np.sort(roots[np.abs(roots.imag) < 1e-9 * np.abs(roots).max()].real)
        pos = real[real > 0]
        if len(pos) < 2:
            raise DegenerateSpacetime("Delta_r does not have two positive roots for these parameters")
        r_minus, r_plus = float(pos[-2]), float(pos[-1])
        if not self.delta_r(0.5 * (r_minus + r_plus)) > 0:
            raise DegenerateSpacetime("Delta_r is not positive between the outer roots")
        return r_minus, r_plus


def _pieces(p: KdsParams, r, theta):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a, L = p.spin, p.cosmo
    s, c = np.sin(theta), np.cos(theta)
    rho2 = r**2 + a**2 * c**2
    dr = p.delta_r(r)
    dth = 1 + L * a**2 * c**2 / 3
    chi = 1 + L * a**2 / 3
    return r, a, s, c, rho2, dr, dth, chi


def _check_domain(dr, s):
    if np.any(dr <= 0):
        raise HorizonDomain("Delta_r <= 0: point is not between the horizons")
    if np.any(np.abs(s) < 1e-12):
        raise AxisSingularity("sin(theta) = 0: Boyer-Lindquist coordinates degenerate on the axis")


def kds_metric(p: KdsParams, r, theta) -> np.ndarray:
    """Metric components with shape ``broadcast(r, theta).shape + (4, 4)``."""
    r, a, s, c, rho2, dr, dth, chi = _pieces(p, r, theta)
    _check_domain(dr, s)
    shape = np.broadcast(r, theta).shape
    g = np.zeros(shape + (4, 4))
    A = dr / (chi**2 * rho2)
    B = dth * s**2 / (chi**2 * rho2)
    w = r**2 + a**2
    # A (dt - a s^2 dphi)^2 - B (a dt - w dphi)^2
    g[..., T, T] = A - B * a**2
    g[..., T, PH] = g[..., PH, T] = -A * a * s**2 + B * a * w
    g[..., PH, PH] = A * a**2 * s**4 - B * w**2
    g[..., R, R] = -rho2 / dr
    g[..., TH, TH] = -rho2 / dth
    return g


def sqrt_abs_det(p: KdsParams, r, theta):
    """``sqrt|det g| = rho^2 |sin theta| / chi^2``."""
    r, a, s, c, rho2, dr, dth, chi = _pieces(p, r, theta)
    return rho2 * np.abs(s) / chi**2


def _field_coeffs(p, r, theta):
    r, a, s, c, rho2, *_ = _pieces(p, r, theta)
    f_tr = (r**2 - a**2 * c**2) / rho2**2
    f_thph = 2 * a * r * c / rho2**2
    return f_tr, f_thph


def u_a1(p: KdsParams, r, theta, perturb: float = 0.0) -> np.ndarray:
    """Components ``F_{mu nu}`` of ``F_TR (dt - a sin^2 dphi) ^ dr + F_ThPh sin dtheta ^ (a dt - (r^2+a^2) dphi)``.

    ``perturb`` rescales ``F_TR`` by ``1 + perturb * r``; nonzero values give a
    field that is no longer a solution (used as a negative control).
    """
    r, a, s, c, rho2, dr, dth, chi = _pieces(p, r, theta)
    f_tr, f_thph = _field_coeffs(p, r, theta)
    f_tr = f_tr * (1 + perturb * r)
    shape = np.broadcast(r, theta).shape
    F = np.zeros(shape + (4, 4))
    w = r**2 + a**2

    def put(i, j, v):
        F[..., i, j] = F[..., i, j] + v
        F[..., j, i] = F[..., j, i] - v

    put(T, R, f_tr)
    put(PH, R, -a * s**2 * f_tr)
    put(TH, T, f_thph * s * a)
    put(TH, PH, -f_thph * s * w)
    return F


def raise_indices(p: KdsParams, r, theta, F):
    ginv = np.linalg.inv(kds_metric(p, r, theta))
    return np.einsum("...ma,...nb,...ab->...mn", ginv, ginv, F)


_EPS = np.zeros((4, 4, 4, 4))
for _perm in __import__("itertools").permutations(range(4)):
    _sign = np.linalg.det(np.eye(4)[list(_perm)])
    _EPS[_perm] = round(_sign)


def hodge_star(p: KdsParams, r, theta, F):
    """``(*F)_{mu nu} = 1/2 sqrt|g| eps_{mu nu a b} F^{ab}`` with ``eps_{t r theta phi} = +1``."""
    Fup = raise_indices(p, r, theta, F)
    vol = sqrt_abs_det(p, r, theta)
    return 0.5 * vol[..., None, None] * np.einsum("mnab,...ab->...mn", _EPS, Fup)


def u_a2(p: KdsParams, r, theta, perturb: float = 0.0) -> np.ndarray:
    return hodge_star(p, r, theta, u_a1(p, r, theta, perturb))


# ---------------------------------------------------------------- verification on a grid

_CENTRAL = {2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
            4: (np.array([-2, -1, 1, 2]), np.array([1 / 12, -2 / 3, 2 / 3, -1 / 12]))}


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid of r in a sub-annulus and theta away from the axis."""

    r: np.ndarray
    theta: np.ndarray
    order: int = 2

    @classmethod
    def build(cls, p: KdsParams, n_r: int, n_theta: int, theta_margin: float = 0.05,
              r_fraction: float = 0.05, order: int = 2) -> "Grid2D":
        r_minus, r_plus = p.horizons
        w = r_plus - r_minus
        r = np.linspace(r_minus + r_fraction * w, r_plus - r_fraction * w, n_r)
        th = np.linspace(theta_margin, math.pi - theta_margin, n_theta)
        if order not in _CENTRAL:
            raise ConfigError("difference order must be 2 or 4")
        return cls(r, th, order)

    @property
    def h(self) -> tuple[float, float]:
        return self.r[1] - self.r[0], self.theta[1] - self.theta[0]


def _derivatives(fn, grid: Grid2D):
    """Samples of ``fn`` on the grid and centred r/theta differences on the interior nodes.

    Returns arrays restricted to the nodes whose full stencil lies in the grid.
    """
    offsets, weights = _CENTRAL[grid.order]
    k = grid.order // 2
    hr, hth = grid.h
    R_, TH_ = np.meshgrid(grid.r, grid.theta, indexing="ij")
    val = fn(R_, TH_)
    nr, nth = val.shape[:2]
    inner = (slice(k, nr - k), slice(k, nth - k))
    d_r = sum(w * val[k + o:nr - k + o, k:nth - k] for o, w in zip(offsets, weights)) / hr
    d_th = sum(w * val[k:nr - k, k + o:nth - k + o] for o, w in zip(offsets, weights)) / hth
    return val[inner], d_r, d_th, R_[inner], TH_[inner]


@dataclass
class ResidualReport:
    max_residual: float
    components: dict = field(default_factory=dict)


def verify_closed(p: KdsParams, grid: Grid2D, which: str = "u1", perturb: float = 0.0) -> ResidualReport:
    """Max-norm of the components of dF, using only r and theta derivatives (the field is stationary and axisymmetric)."""
    field_fn = _field(which, p, perturb)
    _, dF_r, dF_th, _, _ = _derivatives(field_fn, grid)
    comps = {
        "theta,t,r": dF_th[..., T, R] + dF_r[..., TH, T],
        "theta,phi,r": dF_th[..., PH, R] + dF_r[..., TH, PH],
        "t,r,phi": dF_r[..., PH, T],
        "t,theta,phi": dF_th[..., PH, T],
    }
    mx = {k: float(np.max(np.abs(v))) for k, v in comps.items()}
    return ResidualReport(max(mx.values()), mx)


def verify_coclosed(p: KdsParams, grid: Grid2D, which: str = "u1", perturb: float = 0.0) -> ResidualReport:
    """Max-norm of ``|g|^-1/2 d_mu (|g|^1/2 F^{mu nu})`` per component nu."""
    field_fn = _field(which, p, perturb)

    def density(r, th):
        return sqrt_abs_det(p, r, th)[..., None, None] * raise_indices(p, r, th, field_fn(r, th))

    _, dG_r, dG_th, R_, TH_ = _derivatives(density, grid)
    vol = sqrt_abs_det(p, R_, TH_)
    div = (dG_r[..., R, :] + dG_th[..., TH, :]) / vol[..., None]
    mx = {name: float(np.max(np.abs(div[..., i]))) for i, name in enumerate("t r theta phi".split())}
    return ResidualReport(max(mx.values()), mx)


def _field(which, p, perturb):
    if which == "u1":
        return lambda r, th: u_a1(p, r, th, perturb)
    if which == "u2":
        return lambda r, th: u_a2(p, r, th, perturb)
    raise ConfigError("field must be 'u1' or 'u2'")


@dataclass
class RefinementStudy:
    sizes: list
    residuals: list
    slope: float


def refinement_study(p: KdsParams, check: str = "coclosed", which: str = "u1", sizes=(32, 64, 128, 256),
                     order: int = 2, perturb: float = 0.0, **grid_kw) -> RefinementStudy:
    fn = verify_closed if check == "closed" else verify_coclosed
    res = [fn(p, Grid2D.build(p, N, N, order=order, **grid_kw), which, perturb).max_residual for N in sizes]
    hs = np.array([1.0 / (N - 1) for N in sizes])
    ok = np.array(res) > 0
    slope = float(np.polyfit(np.log(hs[ok]), np.log(np.array(res)[ok]), 1)[0]) if ok.sum() >= 2 else math.inf
    return RefinementStudy(list(sizes), res, slope)
