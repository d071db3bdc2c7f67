"""Time-domain evolution in spherically symmetric sectors of Schwarzschild-de Sitter.

Scalar and 2-form sectors reduce to 1+1 wave equations of the form

    u_tt = r^a d_*( r^b d_*( r^c u ) ) - V u

in the tortoise coordinate, stepped with leapfrog and closed by second-order
outflow (box scheme) conditions at both ends.

The spherically symmetric 1-form sector couples two components through
first-order time derivatives that stay singular in the static frame at the
horizons.  It is evolved in horizon-penetrating coordinates ``s = t - F(r)``
with ``F' = -c/mu`` and ``c = (r_+ + r_- - 2r)/(r_+ - r_-)``, on the closed
interval ``[r_-, r_+]``.  Both ends are characteristic, so no boundary data is
needed.  The unknowns are the covariant
components ``A = u_s = f2`` and ``B = u_r = (f1 - c f2)/mu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares
from scipy.sparse.linalg import splu

from .errors import CflViolation, ConfigError, NonfiniteField
from .form_ops import diff_matrix
from .geometry import SdsParams, horizon_quotient, mu_polynomial, photon_sphere_radius
from .zero_modes import basis_u_pm

MAX_CFL = 0.9


def bump(x, center: float, width: float):
    """Smooth bump ``exp(1 - 1/(1 - s^2))`` supported on ``|x - center| < width``."""
    s = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _check_finite(arr, t):
    if not np.all(np.isfinite(arr)):
        raise NonfiniteField(f"non-finite field value at t={t:.6g}")


def _check_interior(u, name, fraction=0.05):
    k = max(1, int(fraction * len(u)))
    scale = np.max(np.abs(u))
    edge = max(np.max(np.abs(u[:k])), np.max(np.abs(u[-k:])))
    if scale > 0 and edge > 1e-10 * scale:
        raise ConfigError(f"initial {name} must be supported away from the grid ends")


# ---------------------------------------------------------------- tortoise grid

@dataclass(frozen=True, eq=False)
class TortoiseGrid:
    """Uniform grid in ``r_*`` with radii at the nodes and at the half points."""

    rstar: np.ndarray
    r: np.ndarray
    r_half: np.ndarray
    h: float

    @classmethod
    def build(cls, params: SdsParams, N: int, half_width: float) -> "TortoiseGrid":
        if N < 16:
            raise ConfigError("tortoise grid needs at least 16 points")
        x = np.linspace(-half_width, half_width, N)
        h = x[1] - x[0]
        xh = x[:-1] + 0.5 * h
        r = _radius_along(params, x)
        rh = _radius_along(params, xh)
        return cls(x, r, rh, h)

    def nearest(self, radius: float) -> int:
        return int(np.argmin(np.abs(self.r - radius)))


def _radius_along(params: SdsParams, rstar):
    """Solve ``dr/dr_* = mu`` outward from the photon sphere, where ``r_* = 0``."""
    rstar = np.asarray(rstar, dtype=float)
    r_p = photon_sphere_radius(params)
    out = np.empty_like(rstar)
    rhs = lambda s, y: params.mu(y)
    for mask in (rstar >= 0, rstar < 0):
        pts = rstar[mask]
        if not len(pts):
            continue
        order = np.argsort(np.abs(pts))
        end = pts[order[-1]]
        sol = solve_ivp(rhs, (0.0, end), [r_p], t_eval=pts[order], method="DOP853", rtol=1e-13, atol=1e-14)
        vals = np.empty(len(pts))
        vals[order] = sol.y[0]
        out[mask] = vals
    return out


# ---------------------------------------------------------------- timeseries containers

@dataclass
class Timeseries:
    """Probe samples ``values[field][probe, time]`` and the field at the final time."""

    t: np.ndarray
    probe_radii: np.ndarray
    values: dict
    final: dict
    energy: np.ndarray | None = None
    grid: object = None
    dt: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_rows(self):
        """Header and rows for CSV output: ``t`` followed by one column per field and probe."""
        header = ["t"]
        cols = []
        for name, arr in self.values.items():
            for radius, series in zip(self.probe_radii, arr):
                header.append(f"{name}@r={radius:.6g}")
                cols.append(series)
        rows = [[float(t), *(float(c[i]) for c in cols)] for i, t in enumerate(self.t)]
        return header, rows


# ---------------------------------------------------------------- 1+1 leapfrog in r_*

@dataclass(frozen=True)
class WaveWeights:
    """Exponents of ``u_tt = r^a d_*(r^b d_*(r^c u)) - ell_term mu r^-2 u``."""

    a: float
    b: float
    c: float
    angular: float = 0.0


def scalar_weights(n: int, ell: int) -> WaveWeights:
    return WaveWeights(2.0 - n, n - 2.0, 0.0, ell * (ell + n - 3.0))


def omega_weights(n: int) -> WaveWeights:
    """Profile ``f`` of ``f omega`` (top-degree angular part)."""
    return WaveWeights(n - 2.0, 2.0 - n, 0.0)


def dtdr_weights(n: int) -> WaveWeights:
    """Coefficient ``E`` of ``E dt ^ dr``."""
    return WaveWeights(0.0, 2.0 - n, n - 2.0)


class LeapfrogWave:
    """Explicit leapfrog for one 1+1 equation with box-scheme outflow ends."""

    def __init__(self, params: SdsParams, grid: TortoiseGrid, weights: WaveWeights, cfl: float = 0.5):
        if not 0 < cfl <= MAX_CFL:
            raise CflViolation(f"CFL number {cfl} outside (0, {MAX_CFL}]")
        self.params, self.grid, self.w = params, grid, weights
        self.dt = cfl * grid.h
        r, rh = grid.r, grid.r_half
        self.pa = r**weights.a
        self.pb = rh**weights.b
        self.pc = r**weights.c
        self.pot = weights.angular * params.mu(r) / r**2

    def spatial(self, u):
        """Discrete right-hand side on interior nodes (ends are left at zero)."""
        h = self.grid.h
        w = self.pc * u
        flux = self.pb * np.diff(w) / h
        out = np.zeros_like(u)
        out[1:-1] = self.pa[1:-1] * np.diff(flux) / h - self.pot[1:-1] * u[1:-1]
        return out

    def _outflow(self, new, cur):
        # u_t = u_* at the left end and u_t = -u_* at the right end, box scheme
        rho = self.dt / self.grid.h
        for end, nb in ((0, 1), (-1, -2)):
            new[end] = (cur[end] * (1 - rho) + new[nb] * (rho - 1) + cur[nb] * (1 + rho)) / (1 + rho)

    def start(self, u0, v0):
        """Second-order Taylor start ``u1 = u0 + dt v0 + dt^2/2 L u0``."""
        dt = self.dt
        u1 = u0 + dt * v0 + 0.5 * dt**2 * self.spatial(u0)
        self._outflow(u1, u0)
        return u1

    def step(self, prev, cur):
        new = 2 * cur - prev + self.dt**2 * self.spatial(cur)
        self._outflow(new, cur)
        return new

    def energy(self, prev, cur):
        """Leapfrog-conserved energy between two levels (exact on interior for ``c = 0, a = -b``)."""
        h, dt = self.grid.h, self.dt
        m = 1.0 / self.pa
        kin = np.sum(m * ((cur - prev) / dt) ** 2)
        grad = np.sum(self.pb * np.diff(self.pc * cur) * np.diff(self.pc * prev)) / h**2
        pot = np.sum(m * self.pot * cur * prev)
        return 0.5 * h * (kin + grad + pot)


def _run_leapfrog(solver: LeapfrogWave, u0, v0, t_max, probes, record_every, name, with_energy):
    grid = solver.grid
    idx = [grid.nearest(p) for p in probes]
    steps = int(math.ceil(t_max / solver.dt))
    prev, cur = u0.copy(), solver.start(u0, v0)
    ts, samples, energy = [0.0], [u0[idx].copy()], []
    if with_energy:
        energy.append(solver.energy(prev, cur))
    for k in range(1, steps):
        prev, cur = cur, solver.step(prev, cur)
        if (k + 1) % record_every == 0:
            _check_finite(cur, (k + 1) * solver.dt)
            ts.append((k + 1) * solver.dt)
            samples.append(cur[idx].copy())
            if with_energy:
                energy.append(solver.energy(prev, cur))
    _check_finite(cur, steps * solver.dt)
    return Timeseries(np.array(ts), grid.r[idx], {name: np.array(samples).T}, {name: cur, "previous": prev},
                      np.array(energy) if with_energy else None, grid, solver.dt)


def _default_probes(params: SdsParams):
    h = params.horizons
    r_p = h.r_p
    return [0.5 * (h.r_minus + r_p), r_p, 0.5 * (r_p + h.r_plus)]


def evolve_scalar(params: SdsParams, initial, ell: int = 0, t_max: float = 200.0, N: int = 4000,
                  half_width: float | None = None, cfl: float = 0.5, probes=None, record_every: int = 10):
    """Scalar wave equation in the angular channel ``ell``.

    ``initial`` is a pair of callables ``(u0(r_*), v0(r_*))``.  ``half_width``
    defaults to ``t_max / 2 + 20``, so outgoing signals never return before
    ``t_max`` even in the absence of the outflow closure.
    """
    if ell < 0:
        raise ConfigError("ell must be nonnegative")
    L = half_width if half_width is not None else 0.5 * t_max + 20.0
    grid = TortoiseGrid.build(params, N, L)
    solver = LeapfrogWave(params, grid, scalar_weights(params.n, ell), cfl)
    u0, v0 = (np.asarray(f(grid.rstar), dtype=float) for f in initial)
    _check_interior(u0, "data")
    _check_interior(v0, "velocity")
    ts = _run_leapfrog(solver, u0, v0, t_max, probes or _default_probes(params), record_every, "u", True)
    ts.meta.update(sector="scalar", ell=ell, N=N, half_width=L)
    return ts


def evolve_twoform(params: SdsParams, initial_omega=None, initial_dtdr=None, t_max: float = 200.0,
                   N: int = 4000, half_width: float | None = None, cfl: float = 0.5, probes=None,
                   record_every: int = 10):
    """Spherically symmetric 2-forms ``f omega + E dt ^ dr`` in dimension 4.

    The two parts decouple; each is a pair of callables of ``r_*`` or None.
    In higher dimension ``f omega`` has degree ``n - 2`` and the two parts are
    no longer of the same degree, but the equations below remain valid.
    """
    L = half_width if half_width is not None else 0.5 * t_max + 20.0
    grid = TortoiseGrid.build(params, N, L)
    probes = probes or _default_probes(params)
    n = params.n
    out = None
    for name, data, weights in (("omega", initial_omega, omega_weights(n)), ("dtdr", initial_dtdr, dtdr_weights(n))):
        if data is None:
            continue
        solver = LeapfrogWave(params, grid, weights, cfl)
        u0, v0 = (np.asarray(f(grid.rstar), dtype=float) for f in data)
        _check_interior(u0, "data")
        _check_interior(v0, "velocity")
        ts = _run_leapfrog(solver, u0, v0, t_max, probes, record_every, name, False)
        if out is None:
            out = ts
        else:
            out.values.update(ts.values)
            out.final[name] = ts.final[name]
    if out is None:
        raise ConfigError("no 2-form initial data given")
    out.meta.update(sector="twoform", N=N, half_width=L)
    return out


# ---------------------------------------------------------------- 1-form sector, penetrating coordinates

@dataclass(frozen=True, eq=False)
class PenetratingGrid:
    r: np.ndarray
    h: float
    c: np.ndarray
    mu: np.ndarray
    dmu: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    order: int

    @classmethod
    def build(cls, params: SdsParams, N: int, overshoot: float = 0.0, order: int = 4) -> "PenetratingGrid":
        h = params.horizons
        width = h.r_plus - h.r_minus
        r = np.linspace(h.r_minus - overshoot * width, h.r_plus + overshoot * width, N)
        q = horizon_quotient(params)
        # q = -Q(r) r^(3-n) with Q the polynomial quotient; differentiate in closed form
        quot, _ = np.polydiv(mu_polynomial(params), np.poly([h.r_minus, h.r_plus]))
        n = params.n
        dq = -(np.polyval(np.polyder(quot), r) * r ** (3.0 - n) + (3.0 - n) * np.polyval(quot, r) * r ** (2.0 - n))
        qv = q(r)
        if np.any(qv <= 0):
            raise ConfigError("grid overshoot reaches a zero of the horizon quotient")
        kappa = 4.0 / (width**2 * qv)
        dkappa = -4.0 * dq / (width**2 * qv**2)
        c = (h.r_plus + h.r_minus - 2 * r) / width
        return cls(r, r[1] - r[0], c, params.mu(r), params.dmu(r), kappa, dkappa, order)

    def max_speed(self) -> float:
        return float(np.max((1 + np.abs(self.c)) / self.kappa))

    def nearest(self, radius: float) -> int:
        return int(np.argmin(np.abs(self.r - radius)))


def oneform_operators(params: SdsParams, grid: PenetratingGrid):
    """Sparse ``K, G, S`` with ``K Y_ss = G Y_s + S Y`` for ``Y = (A, B)``."""
    n = params.n
    N = len(grid.r)
    D1 = diff_matrix(N, grid.h, 1, grid.order)
    D2 = diff_matrix(N, grid.h, 2, grid.order)
    I = sp.identity(N, format="csr")
    dg = sp.diags
    r, c, mu, dmu = grid.r, grid.c, grid.mu, grid.dmu
    dc = -2.0 / (params.horizons.r_plus - params.horizons.r_minus)
    pc = dc + (n - 2) * c / r              # P^-1 (P c)'
    dpc = (n - 2) * (dc / r - c / r**2)     # its derivative (c is linear)
    g_aa = dg(2 * c) @ D1 + dg(pc)
    g_ab = dg(dmu)
    g_ba = dg(-grid.dkappa)
    g_bb = dg(2 * c) @ D1 + dg(pc)
    s_aa = dg(mu) @ D2 + dg((n - 2) * mu / r) @ D1
    s_ab = sp.csr_matrix((N, N))
    mu_op = dg(mu)
    s_bb = (D2 + dg((n - 2) / r) @ D1 - dg((n - 2) / r**2)) @ mu_op
    s_ba = dg(2 * dc * np.ones(N)) @ D1 + dg(dpc)
    K = sp.block_diag([dg(grid.kappa), dg(grid.kappa)]).tocsc()
    G = sp.bmat([[g_aa, g_ab], [g_ba, g_bb]]).tocsc()
    S = sp.bmat([[s_aa, s_ab], [s_ba, s_bb]]).tocsc()
    return K, G, S, I


class CentredOneForm:
    """Three-level centred scheme

        K (Y+ - 2Y + Y-)/dt^2 = G (Y+ - Y-)/(2 dt) + S Y

    which is invariant under ``(Y+, Y-, dt) -> (Y-, Y+, -dt)``.
    """

    def __init__(self, params: SdsParams, grid: PenetratingGrid, cfl: float = 0.5):
        if not 0 < cfl <= MAX_CFL:
            raise CflViolation(f"CFL number {cfl} outside (0, {MAX_CFL}]")
        self.params, self.grid = params, grid
        self.dt = cfl * grid.h / grid.max_speed()
        self.K, self.G, self.S, _ = oneform_operators(params, grid)
        self._lu = {}

    def _solver(self, dt):
        if dt not in self._lu:
            self._lu[dt] = splu((self.K / dt**2 - self.G / (2 * dt)).tocsc())
        return self._lu[dt]

    def step(self, prev, cur, dt=None):
        dt = self.dt if dt is None else dt
        rhs = self.S @ cur + self.K @ (2 * cur - prev) / dt**2 - self.G @ prev / (2 * dt)
        return self._solver(dt).solve(rhs)

    def start(self, y0, v0):
        """Taylor start using ``Y_ss = K^-1 (G v0 + S y0)``."""
        acc = (self.G @ v0 + self.S @ y0) / self.K.diagonal()
        return y0 + self.dt * v0 + 0.5 * self.dt**2 * acc


def u_pm_profiles(params: SdsParams, r):
    """``(A, B)`` of u_plus and u_minus in penetrating coordinates, regular at the horizons.

    ``B = (f1 - c f2)/mu`` is evaluated by dividing out the horizon factors
    of the polynomial ``r^(n-2) (f1 - c f2)``.
    """
    n = params.n
    h = params.horizons
    width = h.r_plus - h.r_minus
    basis = basis_u_pm(params)
    quot, _ = np.polydiv(mu_polynomial(params), np.poly([h.r_minus, h.r_plus]))
    r = np.asarray(r, dtype=float)
    out = {}
    cpoly = np.array([-2.0 / width, (h.r_plus + h.r_minus) / width])
    for label, (a1, a2, b1, b2) in basis.coefficients.items():
        # r^(n-2) f1 = a1 r^(n-1) + a2 ;  r^(n-2) f2 = b1 r^(n-2) + b2 r
        f1p = np.zeros(n)
        f1p[0], f1p[-1] = a1, a2
        f2p = np.zeros(n - 1)
        f2p[0], f2p[-2] = b1, b2
        num = np.polysub(f1p, np.polymul(cpoly, f2p))
        # mu r^(n-2) = r Q(r) (r - r_-)(r - r_+), Q the quotient of mu r^(n-3)
        quotient, _ = np.polydiv(num, np.poly([h.r_minus, h.r_plus]))
        A = basis.f2(label, r)
        B = np.polyval(quotient, r) / (np.polyval(quot, r) * r)
        out[label] = (A, B)
    return out


def evolve_oneform(params: SdsParams, initial, t_max: float = 200.0, N: int = 400, cfl: float = 0.5,
                   probes=None, record_every: int = 10, order: int = 4, overshoot: float = 0.0):
    """Spherically symmetric 1-forms ``A ds + B dr``.

    ``initial`` is ``(A0, B0, A_s0, B_s0)``: callables of ``r`` or arrays on the grid.
    Probe series are recorded for ``A``, ``B`` and the static-frame profiles
    ``f1 = mu B + c A`` and ``f2 = A``.
    """
    grid = PenetratingGrid.build(params, N, overshoot, order)
    scheme = CentredOneForm(params, grid, cfl)
    vals = [np.asarray(f(grid.r) if callable(f) else f, dtype=float) * np.ones(N) for f in initial]
    y0, v0 = np.concatenate(vals[:2]), np.concatenate(vals[2:])
    probes = probes or _default_probes(params)
    idx = np.array([grid.nearest(p) for p in probes])
    steps = int(math.ceil(t_max / scheme.dt))

    def sample(y):
        A, B = y[:N], y[N:]
        return A[idx], B[idx], grid.mu[idx] * B[idx] + grid.c[idx] * A[idx]

    prev, cur = y0, scheme.start(y0, v0)
    ts, rec = [0.0], [sample(y0)]
    for k in range(1, steps):
        prev, cur = cur, scheme.step(prev, cur)
        if (k + 1) % record_every == 0:
            _check_finite(cur, (k + 1) * scheme.dt)
            ts.append((k + 1) * scheme.dt)
            rec.append(sample(cur))
    _check_finite(cur, steps * scheme.dt)
    rec = np.array(rec)  # (time, field, probe)
    values = {"A": rec[:, 0].T, "B": rec[:, 1].T, "f1": rec[:, 2].T, "f2": rec[:, 0].T.copy()}
    final = {"A": cur[:N], "B": cur[N:], "previous": prev, "initial": y0}
    ts_out = Timeseries(np.array(ts), grid.r[idx], values, final, None, grid, scheme.dt)
    ts_out.meta.update(sector="oneform", N=N, order=order, steps=steps)
    ts_out.meta["scheme"] = scheme
    return ts_out


# ---------------------------------------------------------------- fits and projections

@dataclass
class DecayFit:
    asymptotic_value: float
    rate: float
    omega: float
    residual: float
    accepted: bool
    window: tuple[float, float]
    projection: dict = field(default_factory=dict)
    projection_residual: float = float("nan")


def fit_decay(t, y, window=None, kappa_starts=(0.02, 0.1, 0.3), omega_starts=(0.0, 0.1, 0.3, 0.6)) -> DecayFit:
    """Least-squares fit of ``c0 + exp(-kappa t) (a cos(w t) + b sin(w t))`` with multistart.

    Time is shifted to the window start.  Accepted when ``kappa > 0`` and the
    rms residual is below 1% of the signal range over the window.
    """
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    if window is None:
        window = (0.5 * t[-1], t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    ts, ys = t[sel] - window[0], y[sel]
    if len(ts) < 8:
        raise ConfigError("fit window holds fewer than 8 samples")
    scale = max(np.ptp(ys), 1e-300)

    def model(p):
        c0, k, w, a, b = p
        return c0 + np.exp(-k * ts) * (a * np.cos(w * ts) + b * np.sin(w * ts))

    best = None
    for k0 in kappa_starts:
        for w0 in omega_starts:
            p0 = [ys[-1], k0, w0, ys[0] - ys[-1], 0.0]
            res = least_squares(lambda p: (model(p) - ys) / scale, p0,
                                bounds=([-np.inf, 0.0, 0.0, -np.inf, -np.inf], [np.inf, 10.0, 10.0, np.inf, np.inf]),
                                x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=4000)
            if best is None or res.cost < best.cost:
                best = res
    c0, k, w, _, _ = best.x
    rms = float(np.sqrt(np.mean(best.fun**2)))
    return DecayFit(float(c0), float(k), float(w), rms, bool(k > 0 and rms < 0.01), window)


def project_oneform(params: SdsParams, grid: PenetratingGrid, A, B, reference_scale: float | None = None):
    """Least-squares coefficients on ``{u_plus, u_minus}`` over ``[r_-, r_+]`` and the max-norm remainder.

    The remainder is divided by ``reference_scale`` (default: max of |A|, |B|).
    """
    h = params.horizons
    inside = (grid.r >= h.r_minus) & (grid.r <= h.r_plus)
    prof = u_pm_profiles(params, grid.r[inside])
    M = np.column_stack([np.concatenate(prof[k]) for k in ("u_plus", "u_minus")])
    y = np.concatenate([A[inside], B[inside]])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    rem = y - M @ coef
    scale = reference_scale if reference_scale is not None else max(np.max(np.abs(y)), 1e-300)
    return {"u_plus": float(coef[0]), "u_minus": float(coef[1])}, float(np.max(np.abs(rem)) / scale)


def probe_projection(params: SdsParams, radius: float, A_inf: float, B_inf: float) -> dict:
    """Coefficients on ``{u_plus, u_minus}`` from asymptotic ``(A, B)`` at one radius."""
    prof = u_pm_profiles(params, np.array([radius]))
    M = np.array([[prof["u_plus"][0][0], prof["u_minus"][0][0]],
                  [prof["u_plus"][1][0], prof["u_minus"][1][0]]])
    cp, cm = np.linalg.solve(M, [A_inf, B_inf])
    return {"u_plus": float(cp), "u_minus": float(cm)}


def oneform_decay(params: SdsParams, ts: Timeseries, window=None) -> list[DecayFit]:
    """Per-probe fits of ``A`` and ``B`` turned into projection coefficients."""
    fits = []
    for i, radius in enumerate(ts.probe_radii):
        fa = fit_decay(ts.t, ts.values["A"][i], window)
        fb = fit_decay(ts.t, ts.values["B"][i], window)
        proj = probe_projection(params, radius, fa.asymptotic_value, fb.asymptotic_value)
        fit = DecayFit(fa.asymptotic_value, min(fa.rate, fb.rate), fa.omega, max(fa.residual, fb.residual),
                       fa.accepted and fb.accepted, fa.window, proj)
        fits.append(fit)
    scale = np.max(np.abs(ts.final["initial"]))
    coef, rem = project_oneform(params, ts.grid, ts.final["A"], ts.final["B"], scale)
    for f in fits:
        f.projection_residual = rem
    return fits


from .mode_scan import mode_scan  # noqa: E402  frequency-domain counterpart, re-exported here
