"""Closed-form stationary states of d + delta and the wave operator on Schwarzschild-de Sitter.

Stationary 1-forms in the spherically symmetric sector are written

    u = alpha^-1 f1(r) alpha^-1 dr + alpha dt ^ alpha^-1 f2(r),

i.e. TN = f1/alpha and NT = f2/alpha.  The wave equation forces
f1 in span{r, r^(2-n)} and f2 in span{1, r^(3-n)}; smoothness across each
horizon ties the two together there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficiency, SectorMismatch
from .form_ops import AngularSector, FormSection4, RadialGrid, SectorKind, hodge_star
from .geometry import SdsParams


@dataclass(frozen=True)
class RadialOdeBasis:
    """Exponents spanning the kernels of the two radial ODEs for f1 and f2."""

    n: int
    f1_exponents: tuple[int, int]
    f2_exponents: tuple[int, int]


def radial_ode_basis(n: int) -> RadialOdeBasis:
    """f1 solves ``d/dr r^(2-n) d/dr r^(n-2) f1 = 0``; f2 solves ``r^(2-n) d/dr r^(n-2) d/dr f2 = 0``."""
    return RadialOdeBasis(n, (1, 2 - n), (0, 3 - n))


def f1_ode(n: int, f, r, h=1e-4):
    """Residual of the f1 equation evaluated by nested central differences (for checks)."""
    g = lambda x: x ** (n - 2) * f(x)
    inner = lambda x: x ** (2 - n) * (g(x + h) - g(x - h)) / (2 * h)
    return (inner(r + h) - inner(r - h)) / (2 * h)


def f2_ode(n: int, f, r, h=1e-4):
    inner = lambda x: x ** (n - 2) * (f(x + h) - f(x - h)) / (2 * h)
    return r ** (2 - n) * (inner(r + h) - inner(r - h)) / (2 * h)


def matching_system(params: SdsParams) -> np.ndarray:
    """2x4 matrix acting on (f11, f12, f21, f22) encoding f2 = f1 at r_- and f2 = -f1 at r_+."""
    n = params.n
    h = params.horizons
    rm, rp = h.r_minus, h.r_plus
    M = np.array([
        [rm, rm ** (2.0 - n), -1.0, -(rm ** (3.0 - n))],
        [rp, rp ** (2.0 - n), 1.0, rp ** (3.0 - n)],
    ])
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise RankDeficiency(f"matching system has numerical rank < 2 (singular values {s})")
    return M


@dataclass(frozen=True)
class ZeroModeBasis:
    """Coefficients (f11, f12, f21, f22) of the two 1-form zero modes u_plus and u_minus."""

    params: SdsParams
    coefficients: dict
    dual_labels: tuple[str, str] = ("*u_plus", "*u_minus")
    stationary_2forms: tuple[str, ...] = field(default=())

    @property
    def labels(self):
        return tuple(self.coefficients)

    def f1(self, label, r):
        c = self.coefficients[label]
        r = np.asarray(r, dtype=float)
        return c[0] * r + c[1] * r ** (2.0 - self.params.n)

    def f2(self, label, r):
        c = self.coefficients[label]
        r = np.asarray(r, dtype=float)
        return c[2] + c[3] * r ** (3.0 - self.params.n)

    def matching_residual(self, label) -> float:
        h = self.params.horizons
        return max(abs(self.f2(label, h.r_minus) - self.f1(label, h.r_minus)),
                   abs(self.f2(label, h.r_plus) + self.f1(label, h.r_plus)))

    def section(self, label, grid: RadialGrid) -> FormSection4:
        alpha = np.sqrt(self.params.mu(grid.r))
        return FormSection4.from_functions(
            AngularSector.constant(self.params.n), 1, grid,
            tn=self.f1(label, grid.r) / alpha, nt=self.f2(label, grid.r) / alpha,
        )


def basis_u_pm(params: SdsParams) -> ZeroModeBasis:
    """u_plus: f1(r_-) = 0, f1(r_+) = 1;  u_minus: f1(r_-) = 1, f1(r_+) = 0."""
    n = params.n
    h = params.horizons
    M = matching_system(params)
    norm = np.array([
        [h.r_minus, h.r_minus ** (2.0 - n), 0.0, 0.0],
        [h.r_plus, h.r_plus ** (2.0 - n), 0.0, 0.0],
    ])
    A = np.vstack([M, norm])
    coeffs = {
        "u_plus": np.linalg.solve(A, [0.0, 0.0, 0.0, 1.0]),
        "u_minus": np.linalg.solve(A, [0.0, 0.0, 1.0, 0.0]),
    }
    labels_2 = ("omega", "r^(2-n) dt^dr")
    return ZeroModeBasis(params, coeffs, stationary_2forms=labels_2)


@dataclass(frozen=True)
class H1Certificate:
    matrix: np.ndarray
    determinant: float
    normalized_determinant: float

    @property
    def trivial(self) -> bool:
        return self.normalized_determinant != 0.0


def h1_triviality_certificate(params: SdsParams) -> H1Certificate:
    """Closedness forces f2 constant, co-closedness forces f1 = f12 r^(2-n).

    The matching conditions then read ``M (f12, f21) = 0`` with
    ``M = [[r_-^(2-n), -1], [r_+^(2-n), 1]]``; a nonzero determinant
    leaves only the zero solution.
    """
    n = params.n
    h = params.horizons
    M = np.array([[h.r_minus ** (2.0 - n), -1.0], [h.r_plus ** (2.0 - n), 1.0]])
    det = float(np.linalg.det(M))
    normalized = 1.0 + (h.r_plus / h.r_minus) ** (2.0 - n)
    return H1Certificate(M, det, normalized)


# ---------------------------------------------------------------- stationary states by degree

@dataclass(frozen=True)
class StationaryState:
    """A stationary form in one angular sector with radial slot profiles given as callables."""

    label: str
    degree: int
    kind: SectorKind
    profiles: dict
    harmonic: bool  # True if also annihilated by d + delta

    def section(self, params, grid: RadialGrid) -> FormSection4:
        n = params.n
        sector = AngularSector.constant(n) if self.kind is SectorKind.CONSTANT else AngularSector.volume(n)
        return FormSection4.from_functions(sector, self.degree, grid, **{
            k: (lambda f: (lambda r: f(params, r)))(f) for k, f in self.profiles.items()})


def _alpha(params, r):
    return np.sqrt(params.mu(r))


def stationary_states(params: SdsParams) -> dict[int, list[StationaryState]]:
    """Bases of the stationary states of the wave operator, grouped by form degree."""
    n = params.n
    basis = basis_u_pm(params)
    one = lambda p, r: np.ones_like(r)
    out: dict[int, list[StationaryState]] = {k: [] for k in range(n + 1)}
    out[0].append(StationaryState("1", 0, SectorKind.CONSTANT, {"tt": one}, True))
    out[n].append(StationaryState("r^(n-2) dt^dr^omega", n, SectorKind.VOLUME,
                                  {"nn": lambda p, r: r ** (p.n - 2.0)}, True))
    for label in basis.labels:
        out[1].append(StationaryState(label, 1, SectorKind.CONSTANT, {
            "tn": (lambda lab: lambda p, r: basis.f1(lab, r) / _alpha(p, r))(label),
            "nt": (lambda lab: lambda p, r: basis.f2(lab, r) / _alpha(p, r))(label),
        }, False))
        # Hodge dual: TN -> NT and NT -> TN in the volume sector, scaled by r^(n-2)
        out[n - 1].append(StationaryState("*" + label, n - 1, SectorKind.VOLUME, {
            "nt": (lambda lab: lambda p, r: r ** (p.n - 2.0) * basis.f1(lab, r) / _alpha(p, r))(label),
            "tn": (lambda lab: lambda p, r: r ** (p.n - 2.0) * basis.f2(lab, r) / _alpha(p, r))(label),
        }, False))
    out[2].append(StationaryState("r^(2-n) dt^dr", 2, SectorKind.CONSTANT,
                                  {"nn": lambda p, r: r ** (2.0 - p.n)}, True))
    out[n - 2].append(StationaryState("omega", n - 2, SectorKind.VOLUME, {"tt": one}, True))
    return out


def dims_K(params: SdsParams) -> list[int]:
    return [len(v) for v in stationary_states(params).values()]


def dims_H(params: SdsParams) -> list[int]:
    return [sum(s.harmonic for s in v) for v in stationary_states(params).values()]


# ---------------------------------------------------------------- dual states

@dataclass(frozen=True)
class DualState:
    label: str
    degree: int
    support: str  # "interior" (indicator of X) or "r_minus"/"r_plus" (delta distribution)
    harmonic: bool  # dual state of d + delta (otherwise only of the wave operator)


def dual_state_table(n: int) -> dict:
    """Dual states graded by degree, and the orthogonality verdict from degree disjointness."""
    if n < 4:
        raise SectorMismatch("dimension must be at least 4")
    rows: list[DualState] = [
        DualState("1_X", 0, "interior", False),
        DualState("1_X r^(n-2) dt^dr^omega", n, "interior", False),
        DualState("1_X r^(2-n) dt^dr", 2, "interior", False),
        DualState("1_X omega", n - 2, "interior", False),
    ]
    for side in ("r_minus", "r_plus"):
        rows.append(DualState(f"delta_{side} dr", 1, side, True))
        rows.append(DualState(f"delta_{side} dr^omega", n - 1, side, True))
    K_star = [sum(1 for s in rows if s.degree == k) for k in range(n + 1)]
    H_star = [sum(1 for s in rows if s.degree == k and s.harmonic) for k in range(n + 1)]
    resonant_degrees = {0, 2, n - 2, n}
    dual_degrees = {s.degree for s in rows if s.harmonic}
    return {
        "states": rows,
        "dim_K_star": K_star,
        "dim_H_star": H_star,
        "dual_degrees": sorted(dual_degrees),
        "resonant_degrees": sorted(resonant_degrees),
        "orthogonal": resonant_degrees.isdisjoint(dual_degrees),
    }
