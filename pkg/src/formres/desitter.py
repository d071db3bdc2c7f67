"""Static de Sitter: indicial roots at future infinity and the stationary states of the static patch.

The static patch is ``g = alpha^2 dt^2 - (alpha^-2 dr^2 + r^2 domega^2)`` with
``alpha^2 = 1 - r^2`` on the unit ball, so the radial operators of
:mod:`formres.form_ops` apply with ``mu = 1 - r^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .form_ops import AngularSector, FormSection4, RadialGrid


@dataclass(frozen=True)
class DeSitter:
    """Background object for form_ops: ``mu(r) = 1 - r^2`` on ``0 < r < 1``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ConfigError(f"spacetime dimension n must be an integer >= 4, got {self.n}")

    @property
    def domain(self) -> tuple[float, float]:
        return 0.0, 1.0

    def mu(self, r):
        return 1.0 - np.asarray(r, dtype=float) ** 2

    def dmu(self, r):
        return -2.0 * np.asarray(r, dtype=float)

    def tortoise(self, r):
        return np.arctanh(r)

    def r_from_tortoise(self, rstar):
        return np.tanh(rstar)


# ---------------------------------------------------------------- indicial algebra

def indicial_polynomial_box(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Monic quadratics (coefficients, highest first) on tangential and normal k-forms."""
    if not 0 <= k <= n:
        raise ConfigError(f"form degree {k} outside 0..{n}")
    tangential = np.array([1.0, -(n - 1.0), k * (n - k - 1.0)])
    normal = np.array([1.0, -(n - 1.0), (k - 1.0) * (n - k)])
    return tangential, normal


def _quadratic_roots(c) -> tuple[int, int]:
    # integer roots by construction; round the exact quadratic formula
    b, c0 = c[1], c[2]
    disc = b * b - 4 * c0
    s = np.sqrt(disc)
    lo, hi = (-b - s) / 2, (-b + s) / 2
    return int(round(lo)), int(round(hi))


def indicial_roots_box(k: int, n: int) -> dict:
    """Roots of the wave operator's indicial polynomial; ``None`` where the component is absent."""
    tan, nor = indicial_polynomial_box(k, n)
    return {
        "tangential": None if k == n else tuple(sorted(_quadratic_roots(tan))),
        "normal": None if k == 0 else tuple(sorted(_quadratic_roots(nor))),
    }


def indicial_roots_ddelta(k: int, n: int) -> tuple[int, int]:
    """Roots of d + delta on degree-k forms, as a multiset."""
    if not 0 <= k <= n:
        raise ConfigError(f"form degree {k} outside 0..{n}")
    return tuple(sorted((k, n - k)))


@dataclass(frozen=True)
class IndicialTable:
    n: int
    tangential: dict
    normal: dict
    ddelta: dict

    def rows(self):
        """Rows (degree, tangential, normal, d+delta) with '-' for absent entries."""
        fmt = lambda v: "-" if v is None else ",".join(str(x) for x in v)
        return [(k, fmt(self.tangential[k]), fmt(self.normal[k]), fmt(self.ddelta[k]))
                for k in range(self.n + 1)]


def indicial_table(n: int) -> IndicialTable:
    if n < 4:
        raise ConfigError("n must be at least 4")
    tan, nor, dd = {}, {}, {}
    for k in range(n + 1):
        roots = indicial_roots_box(k, n)
        tan[k], nor[k] = roots["tangential"], roots["normal"]
        dd[k] = indicial_roots_ddelta(k, n)
    return IndicialTable(n, tan, nor, dd)


def zero_is_simple(table: IndicialTable) -> bool:
    """0 occurs at most once among all wave-operator roots of each degree."""
    for k in range(table.n + 1):
        roots = [*(table.tangential[k] or ()), *(table.normal[k] or ())]
        if roots.count(0) > 1:
            return False
    return True


def slowest_decay(n: int) -> dict:
    """Smallest positive d + delta root per degree, and which degrees carry a zero root."""
    out = {}
    for k in range(n + 1):
        roots = indicial_roots_ddelta(k, n)
        out[k] = {"zero_root": 0 in roots, "min_positive": min(r for r in roots if r > 0)}
    return out


# ---------------------------------------------------------------- static patch states

@dataclass(frozen=True)
class DsState:
    label: str
    degree: int
    section: FormSection4


def k1_generator(bg: DeSitter, grid: RadialGrid, time_weight: str = "one") -> FormSection4:
    """The stationary 1-form ``-alpha^-2 r dr + c(r) dt`` in the slot convention of form_ops.

    ``time_weight="one"`` uses ``c = 1`` (the differential of ``t + log alpha``),
    which is the element annihilated by the wave operator; ``"alpha_inv"``
    uses ``c = alpha^-1`` for comparison.
    """
    r = grid.r
    alpha = np.sqrt(bg.mu(r))
    if time_weight == "one":
        f2 = np.ones_like(r)
    elif time_weight == "alpha_inv":
        f2 = 1.0 / alpha
    else:
        raise ConfigError("time_weight must be 'one' or 'alpha_inv'")
    # u = f1 mu^-1 dr + f2 dt  ->  TN = f1/alpha, NT = f2/alpha
    return FormSection4.from_functions(AngularSector.constant(bg.n), 1, grid,
                                       tn=-r / alpha, nt=f2 / alpha)


def ds_static_states(n: int, grid: RadialGrid | None = None, N: int = 256) -> list[DsState]:
    bg = DeSitter(n)
    if grid is None:
        grid = RadialGrid.uniform(bg, N, bounds=(0.05, 0.95))
    one = FormSection4.from_functions(AngularSector.constant(n), 0, grid, tt=1.0)
    top = FormSection4.from_functions(AngularSector.volume(n), n, grid, nn=lambda r: r ** (n - 2.0))
    k1 = k1_generator(bg, grid)
    from .form_ops import hodge_star
    return [DsState("1", 0, one), DsState("-alpha^-2 r dr + dt", 1, k1),
            DsState("*(-alpha^-2 r dr + dt)", n - 1, hodge_star(k1, bg)),
            DsState("r^(n-2) dt^dr^omega", n, top)]
