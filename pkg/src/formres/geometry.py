"""Schwarzschild-de Sitter metric function, horizons and derived constants.

The static metric is ``g = mu dt^2 - (mu^-1 dr^2 + r^2 domega^2)`` with

    mu(r) = 1 - 2 M / r^(n-3) - lam r^2,    lam = 2 Lambda / ((n-2)(n-1)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DegenerateSpacetime, RootBracketFailure

ROOT_RTOL = 1e-13


@dataclass(frozen=True)
class SdsParams:
    """Spacetime dimension ``n``, black hole mass and cosmological constant."""

    n: int
    mass: float
    cosmo: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ConfigError(f"spacetime dimension n must be an integer >= 4, got {self.n}")
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")
        if not self.cosmo > 0:
            raise ConfigError(f"cosmological constant must be positive, got {self.cosmo}")

    @classmethod
    def from_lambda(cls, n: int, mass: float, lam: float) -> "SdsParams":
        return cls(n, mass, lam * (n - 2) * (n - 1) / 2)

    @property
    def lam(self) -> float:
        return lambda_small(self)

    # duck-typed background interface used by form_ops / evolve
    def mu(self, r):
        return mu(self, r)

    def dmu(self, r):
        return dmu(self, r)

    @cached_property
    def horizons(self) -> "HorizonData":
        return horizons(self)

    @property
    def domain(self) -> tuple[float, float]:
        h = self.horizons
        return h.r_minus, h.r_plus

    def tortoise(self, r):
        return tortoise(self, r)

    def r_from_tortoise(self, rstar):
        return r_from_tortoise(self, rstar)


@dataclass(frozen=True)
class HorizonData:
    r_minus: float
    r_plus: float
    r_p: float
    beta_minus: float
    beta_plus: float

    @property
    def kappa_minus(self) -> float:
        """Surface gravity of the event horizon, mu'(r_-)/2."""
        return 1.0 / self.beta_minus

    @property
    def kappa_plus(self) -> float:
        return 1.0 / self.beta_plus


def lambda_small(p: SdsParams) -> float:
    return 2.0 * p.cosmo / ((p.n - 2) * (p.n - 1))


def mu(p: SdsParams, r):
    r = np.asarray(r, dtype=float) if not np.isscalar(r) else r
    return 1.0 - 2.0 * p.mass / r ** (p.n - 3) - lambda_small(p) * r**2


def dmu(p: SdsParams, r):
    return 2.0 * (p.n - 3) * p.mass / r ** (p.n - 2) - 2.0 * lambda_small(p) * r


def d2mu(p: SdsParams, r):
    return -2.0 * (p.n - 3) * (p.n - 2) * p.mass / r ** (p.n - 1) - 2.0 * lambda_small(p)


def mu_tilde(p: SdsParams, r):
    """``mu / r^2``; its unique critical point is the photon sphere."""
    return r**-2.0 - 2.0 * p.mass * r ** (1.0 - p.n) - lambda_small(p)


def dmu_tilde(p: SdsParams, r):
    return -2.0 * r ** (-float(p.n)) * (r ** (p.n - 3) - (p.n - 1) * p.mass)


def nondegeneracy_margin(p: SdsParams) -> float:
    """``(n-3)^(n-3)/(n-1)^(n-1) - M^2 lam^(n-3)``; positive iff two horizons exist."""
    n = p.n
    return (n - 3) ** (n - 3) / (n - 1) ** (n - 1) - p.mass**2 * lambda_small(p) ** (n - 3)


def check_nondegeneracy(p: SdsParams) -> bool:
    n = p.n
    return p.mass**2 * lambda_small(p) ** (n - 3) < (n - 3) ** (n - 3) / (n - 1) ** (n - 1)


def photon_sphere_radius(p: SdsParams) -> float:
    return ((p.n - 1) * p.mass) ** (1.0 / (p.n - 3))


def _polish(p, r):
    # one Newton step with the analytic derivative
    step = mu(p, r) / dmu(p, r)
    return r - step if abs(step) < 1e-8 * r else r


def horizons(p: SdsParams) -> HorizonData:
    if not check_nondegeneracy(p):
        raise DegenerateSpacetime(
            f"M^2 lam^(n-3) violates the nondegeneracy bound for n={p.n}, "
            f"M={p.mass}, lam={lambda_small(p)}"
        )
    r_p = photon_sphere_radius(p)
    if not mu(p, r_p) > 0:
        raise RootBracketFailure(f"mu(r_p) = {mu(p, r_p)} is not positive")

    lo = 0.5 * r_p
    while mu(p, lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise RootBracketFailure("no sign change of mu below the photon sphere")
    hi = max(math.sqrt(2.0 / lambda_small(p)), 2.0 * r_p)
    for _ in range(200):
        if mu(p, hi) < 0:
            break
        hi *= 2.0
    else:
        raise RootBracketFailure("no sign change of mu above the photon sphere")

    r_minus = brentq(lambda r: mu(p, r), lo, r_p, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
    r_plus = brentq(lambda r: mu(p, r), r_p, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
    r_minus, r_plus = _polish(p, r_minus), _polish(p, r_plus)
    beta_minus = 2.0 / dmu(p, r_minus)
    beta_plus = -2.0 / dmu(p, r_plus)
    if not (0 < r_minus < r_p < r_plus and beta_minus > 0 and beta_plus > 0):
        raise RootBracketFailure(f"inconsistent horizon data r-={r_minus}, rp={r_p}, r+={r_plus}")
    return HorizonData(r_minus, r_plus, r_p, beta_minus, beta_plus)


def mu_polynomial(p: SdsParams) -> np.ndarray:
    """Coefficients (highest power first) of ``r^(n-3) mu(r)``."""
    n = p.n
    coeffs = np.zeros(n)
    coeffs[0] = -lambda_small(p)  # r^(n-1)
    coeffs[2] = 1.0  # r^(n-3)
    coeffs[-1] -= 2.0 * p.mass
    return coeffs


def horizon_quotient(p: SdsParams):
    """Return ``q`` with ``mu(r) = (r - r_-)(r_+ - r) q(r)``, evaluated without cancellation.

    ``q`` is smooth and positive on a neighbourhood of ``[r_-, r_+]``.
    """
    h = p.horizons
    quot, _ = np.polydiv(mu_polynomial(p), np.poly([h.r_minus, h.r_plus]))

    def q(r):
        return -np.polyval(quot, r) / np.asarray(r, dtype=float) ** (p.n - 3)

    return q


def _tortoise_terms(p: SdsParams):
    roots = np.roots(mu_polynomial(p)).astype(complex)
    h = p.horizons
    # replace the two physical roots by the accurately bracketed values
    for exact in (h.r_minus, h.r_plus):
        k = int(np.argmin(np.abs(roots - exact)))
        roots[k] = exact
    dpoly = np.polyder(mu_polynomial(p))
    weights = roots ** (p.n - 3) / np.polyval(dpoly, roots)
    return roots, weights


def tortoise(p: SdsParams, r):
    """Tortoise coordinate ``r_*`` with ``dr_*/dr = 1/mu``, normalised to vanish at ``r_p``.

    Uses the partial fraction expansion of ``r^(n-3)/P(r)`` over the roots of
    ``P = r^(n-3) mu``; valid for ``r`` strictly between the horizons.
    """
    roots, weights = _tortoise_terms(p)
    r = np.asarray(r, dtype=float)
    r_p = photon_sphere_radius(p)

    def prim(x):
        x = np.asarray(x, dtype=complex)[..., None]
        return np.real(np.sum(weights * np.log(x - roots), axis=-1))

    return prim(r) - prim(r_p)


def r_from_tortoise(p: SdsParams, rstar):
    """Invert :func:`tortoise` pointwise by bracketed root finding."""
    h = p.horizons
    rstar = np.atleast_1d(np.asarray(rstar, dtype=float))
    out = np.empty_like(rstar)
    span = h.r_plus - h.r_minus
    for i, s in enumerate(rstar):
        lo, hi = h.r_minus, h.r_plus
        # tortoise diverges at the horizons; shrink the bracket geometrically
        eps = 1e-3 * span
        while tortoise(p, lo + eps) > s and eps > 1e-15 * span:
            eps *= 1e-2
        a = lo + eps
        eps = 1e-3 * span
        while tortoise(p, hi - eps) < s and eps > 1e-15 * span:
            eps *= 1e-2
        b = hi - eps
        fa, fb = tortoise(p, a) - s, tortoise(p, b) - s
        if fa > 0:
            out[i] = a
        elif fb < 0:
            out[i] = b
        else:
            out[i] = brentq(lambda r: tortoise(p, r) - s, a, b, xtol=1e-15 * span, rtol=1e-15)
    return out
