"""Radial block operators d, delta and the wave operator on forms over a static warped product.

A p-form is split as ``u = u_T + alpha dt ^ u_N`` and each piece further as
``v_T + alpha^-1 dr ^ v_N``.  The four resulting radial coefficient functions
(TT, TN, NT, NN) carry angular forms of degree p, p-1, p-1, p-2.  Angular
dependence is restricted to one closed harmonic sector, so every angular
operator acts as a scalar and each slot holds a single radial function.

The background only needs ``n``, ``mu(r)``, ``dmu(r)`` and ``domain``; both
:class:`formres.geometry.SdsParams` and :class:`formres.desitter.DeSitter`
qualify.  Time derivatives are replaced by ``-i sigma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, SectorMismatch

SLOTS = ("tt", "tn", "nt", "nn")
SLOT_SHIFT = (0, 1, 1, 2)  # angular degree = p - shift


# ---------------------------------------------------------------- angular sectors

class SectorKind(Enum):
    CONSTANT = "constant"
    HARMONIC = "harmonic"
    VOLUME = "volume"


@dataclass(frozen=True)
class AngularSector:
    """A closed angular channel on the sphere of dimension ``sphere_dim``.

    ``CONSTANT`` is spanned by the function 1, ``VOLUME`` by the round volume
    form, and ``HARMONIC`` by ``Y`` and ``dY`` for a spherical harmonic with
    Laplace eigenvalue ``eigenvalue``.
    """

    kind: SectorKind
    sphere_dim: int
    eigenvalue: float = 0.0

    def __post_init__(self):
        if self.sphere_dim < 1:
            raise ConfigError("sphere dimension must be positive")
        if self.kind is SectorKind.HARMONIC and not self.eigenvalue > 0:
            raise ConfigError("harmonic sector needs a positive eigenvalue; use CONSTANT for l=0")

    @classmethod
    def constant(cls, n: int) -> "AngularSector":
        return cls(SectorKind.CONSTANT, n - 2)

    @classmethod
    def volume(cls, n: int) -> "AngularSector":
        return cls(SectorKind.VOLUME, n - 2)

    @classmethod
    def harmonic(cls, n: int, ell: int) -> "AngularSector":
        if ell < 1:
            raise ConfigError("harmonic degree must be >= 1")
        return cls(SectorKind.HARMONIC, n - 2, float(ell * (ell + n - 3)))

    @property
    def degrees(self) -> tuple[int, ...]:
        """Angular form degrees present in the sector."""
        if self.kind is SectorKind.CONSTANT:
            return (0,)
        if self.kind is SectorKind.VOLUME:
            return (self.sphere_dim,)
        return (0, 1)

    def has(self, q: int) -> bool:
        return q in self.degrees

    def d(self, q: int) -> float:
        """Scalar action of the sphere differential from degree q to q+1."""
        if self.kind is SectorKind.HARMONIC and q == 0:
            return 1.0
        return 0.0

    def delta(self, q: int) -> float:
        """Scalar action of the sphere codifferential from degree q to q-1."""
        if self.kind is SectorKind.HARMONIC and q == 1:
            return self.eigenvalue
        return 0.0

    def laplacian(self, q: int) -> float:
        return self.eigenvalue if self.kind is SectorKind.HARMONIC else 0.0

    def norm2(self, q: int) -> float:
        """Squared L2 norm on the unit sphere of the basis element of degree q (up to the area)."""
        if self.kind is SectorKind.HARMONIC and q == 1:
            return self.eigenvalue
        return 1.0


# ---------------------------------------------------------------- grids and stencils

def fornberg_weights(x0: float, xs, m: int) -> np.ndarray:
    """Finite difference weights for the m-th derivative at x0 on nodes xs (Fornberg's recursion)."""
    xs = np.asarray(xs, dtype=float)
    N = len(xs)
    c = np.zeros((N, m + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, N):
        mn = min(i, m)
        c2, c5 = 1.0, c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def diff_matrix(N: int, h: float, m: int, order: int) -> sp.csr_matrix:
    """Sparse m-th derivative on N uniform points; centred inside, one-sided at the ends."""
    if order % 2 or order < 2:
        raise ConfigError(f"stencil order must be a positive even number, got {order}")
    width = order + 1
    ends = order + m  # one-sided stencils need one extra point per derivative order
    half = width // 2
    nodes = np.arange(N, dtype=float)
    rows, cols, vals = [], [], []
    for i in range(N):
        if half <= i < N - half:
            idx = np.arange(i - half, i + half + 1)
        elif i < half:
            idx = np.arange(0, min(ends, N))
        else:
            idx = np.arange(max(N - ends, 0), N)
        w = fornberg_weights(float(i), nodes[idx], m) / h**m
        rows.extend([i] * len(idx))
        cols.extend(idx)
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial samples ``r(x)`` on a uniform computational coordinate ``x`` with spacing ``h``.

    ``spacing`` is ``"r"`` (x = r) or ``"tortoise"`` (x = r_*, so dr/dx = mu).
    """

    r: np.ndarray
    r_x: np.ndarray
    h: float
    spacing: str
    order: int = 2
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.r) < 16:
            raise ConfigError("radial grid needs at least 16 points")
        if np.any(np.diff(self.r) <= 0):
            raise ConfigError("radial grid must be strictly increasing")

    @classmethod
    def uniform(cls, bg, N: int, margin: float = 0.0, order: int = 2,
                bounds: tuple[float, float] | None = None) -> "RadialGrid":
        """Uniform in r on ``bounds`` or on the background domain shrunk by ``margin`` of its width."""
        lo, hi = bounds if bounds is not None else bg.domain
        if bounds is None:
            w = hi - lo
            lo, hi = lo + margin * w, hi - margin * w
            if margin <= 0:
                # keep strictly inside the horizons
                lo, hi = lo + 1e-3 * w, hi - 1e-3 * w
        r = np.linspace(lo, hi, N)
        return cls(r, np.ones(N), r[1] - r[0], "r", order)

    @classmethod
    def tortoise(cls, bg, N: int, rstar_min: float, rstar_max: float, order: int = 2) -> "RadialGrid":
        s = np.linspace(rstar_min, rstar_max, N)
        r = np.asarray(bg.r_from_tortoise(s), dtype=float)
        return cls(r, np.asarray(bg.mu(r), dtype=float), s[1] - s[0], "tortoise", order)

    def __len__(self) -> int:
        return len(self.r)

    def _mat(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    @property
    def D1x(self):
        return self._mat(("D1x",), lambda: diff_matrix(len(self), self.h, 1, self.order))

    @property
    def D2x(self):
        return self._mat(("D2x",), lambda: diff_matrix(len(self), self.h, 2, self.order))

    @property
    def Dr(self):
        """d/dr on the grid."""
        return self._mat(("Dr",), lambda: (sp.diags(1.0 / self.r_x) @ self.D1x).tocsr())

    def second_order(self, a, b, c):
        """Discretise ``u -> a d/dr( b d/dr (c u))`` with a, b, c sampled arrays.

        Written as ``a/r_x d/dx(beta d/dx (c u))`` with ``beta = b/r_x``, expanded to
        ``beta D2 + (D1 beta) D1`` so the stencil stays compact.
        """
        beta = b / self.r_x
        inner = sp.diags(beta) @ self.D2x + sp.diags(self.D1x @ beta) @ self.D1x
        return (sp.diags(a / self.r_x) @ inner @ sp.diags(c)).tocsr()

    def quadrature(self) -> np.ndarray:
        """Weights approximating integration in r (trapezoid in x)."""
        w = np.full(len(self), self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w * self.r_x

    def buffer_mask(self, fraction: float = 0.05) -> np.ndarray:
        k = int(math.ceil(fraction * len(self)))
        mask = np.ones(len(self), dtype=bool)
        if k:
            mask[:k] = mask[-k:] = False
        return mask


# ---------------------------------------------------------------- sections

def slot_active(sector: AngularSector, p: int) -> tuple[bool, ...]:
    return tuple(sector.has(p - s) for s in SLOT_SHIFT)


@dataclass(frozen=True, eq=False)
class FormSection4:
    """The four radial coefficient functions of a degree-p form in one angular sector."""

    tt: np.ndarray
    tn: np.ndarray
    nt: np.ndarray
    nn: np.ndarray
    sector: AngularSector
    degree: int
    grid: RadialGrid

    def __post_init__(self):
        N = len(self.grid)
        for name, on in zip(SLOTS, slot_active(self.sector, self.degree)):
            arr = getattr(self, name)
            if len(arr) != (N if on else 0):
                raise SectorMismatch(
                    f"slot {name} of a degree-{self.degree} form in sector {self.sector.kind.value} "
                    f"must have length {N if on else 0}, got {len(arr)}"
                )

    @classmethod
    def from_functions(cls, sector, degree, grid, tt=None, tn=None, nt=None, nn=None):
        """Sample callables (or arrays, or None for zero) in the active slots."""
        vals = []
        for name, on, f in zip(SLOTS, slot_active(sector, degree), (tt, tn, nt, nn)):
            if not on:
                if f is not None:
                    raise SectorMismatch(f"slot {name} is empty for degree {degree} in this sector")
                vals.append(np.zeros(0))
            elif f is None:
                vals.append(np.zeros(len(grid)))
            elif callable(f):
                vals.append(np.asarray(f(grid.r)) * np.ones(len(grid)))
            else:
                vals.append(np.asarray(f) * np.ones(len(grid)))
        return cls(*vals, sector=sector, degree=degree, grid=grid)

    @classmethod
    def from_vector(cls, vec, sector, degree, grid):
        out, i = [], 0
        for on in slot_active(sector, degree):
            k = len(grid) if on else 0
            out.append(np.asarray(vec[i:i + k]))
            i += k
        return cls(*out, sector=sector, degree=degree, grid=grid)

    @property
    def slots(self) -> tuple[np.ndarray, ...]:
        return (self.tt, self.tn, self.nt, self.nn)

    def vector(self) -> np.ndarray:
        return np.concatenate(self.slots)


# ---------------------------------------------------------------- block operators

@dataclass(frozen=True, eq=False)
class BlockRadialOperator:
    """4x4 array of sparse radial blocks mapping degree ``in_degree`` to ``out_degree`` sections.

    ``source[i][j]`` records where each nonzero block came from (``"d"``,
    ``"delta"``, or the summand label of the wave operator).  ``sign`` documents
    the overall convention relative to the summed display.
    """

    blocks: tuple
    sector: AngularSector
    in_degree: int
    out_degree: int
    grid: RadialGrid
    source: tuple = ()
    sign: str = ""

    def apply(self, u: FormSection4) -> FormSection4:
        if u.degree != self.in_degree or u.sector != self.sector or u.grid is not self.grid:
            raise SectorMismatch("section does not match operator degree, sector or grid")
        out_on = slot_active(self.sector, self.out_degree)
        N = len(self.grid)
        dtype = np.result_type(*(u.slots), *(b.dtype for row in self.blocks for b in row if b is not None))
        out = []
        for i in range(4):
            if not out_on[i]:
                out.append(np.zeros(0, dtype=dtype))
                continue
            acc = np.zeros(N, dtype=dtype)
            for j in range(4):
                b = self.blocks[i][j]
                if b is not None and len(u.slots[j]):
                    acc = acc + b @ u.slots[j]
            out.append(acc)
        return FormSection4(*out, sector=self.sector, degree=self.out_degree, grid=self.grid)

    __call__ = apply

    def compose(self, other: "BlockRadialOperator") -> "BlockRadialOperator":
        """``self o other``."""
        if other.out_degree != self.in_degree or other.sector != self.sector or other.grid is not self.grid:
            raise SectorMismatch("cannot compose operators with mismatched degree, sector or grid")
        blocks = []
        for i in range(4):
            row = []
            for j in range(4):
                acc = None
                for k in range(4):
                    a, b = self.blocks[i][k], other.blocks[k][j]
                    if a is not None and b is not None:
                        acc = a @ b if acc is None else acc + a @ b
                row.append(acc)
            blocks.append(tuple(row))
        return BlockRadialOperator(tuple(blocks), self.sector, other.in_degree, self.out_degree,
                                   self.grid, source=(), sign="composite")

    def __add__(self, other: "BlockRadialOperator") -> "BlockRadialOperator":
        if (other.in_degree, other.out_degree) != (self.in_degree, self.out_degree):
            raise SectorMismatch("cannot add operators between different degrees")
        blocks = []
        for i in range(4):
            row = []
            for j in range(4):
                a, b = self.blocks[i][j], other.blocks[i][j]
                row.append(b if a is None else a if b is None else a + b)
            blocks.append(tuple(row))
        return BlockRadialOperator(tuple(blocks), self.sector, self.in_degree, self.out_degree,
                                   self.grid, source=(), sign="sum")

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "BlockRadialOperator":
        blocks = tuple(tuple(None if b is None else c * b for b in row) for row in self.blocks)
        return BlockRadialOperator(blocks, self.sector, self.in_degree, self.out_degree,
                                   self.grid, self.source, self.sign)

    def to_sparse(self) -> sp.csr_matrix:
        """The operator as one sparse matrix on stacked active slots."""
        N = len(self.grid)
        in_on = slot_active(self.sector, self.in_degree)
        out_on = slot_active(self.sector, self.out_degree)
        rows = [i for i in range(4) if out_on[i]]
        cols = [j for j in range(4) if in_on[j]]
        if not rows or not cols:
            return sp.csr_matrix((N * len(rows), N * len(cols)))
        grid = [[self.blocks[i][j] if self.blocks[i][j] is not None else sp.csr_matrix((N, N))
                 for j in cols] for i in rows]
        return sp.bmat(grid, format="csr")

    def bandwidth(self) -> int:
        bw = 0
        for row in self.blocks:
            for b in row:
                if b is not None and b.nnz:
                    coo = b.tocoo()
                    bw = max(bw, int(np.max(np.abs(coo.row - coo.col))))
        return bw


class _Builder:
    """Collects blocks for one operator; drops entries touching empty slots."""

    def __init__(self, sector, p_in, p_out, grid):
        self.sector, self.p_in, self.p_out, self.grid = sector, p_in, p_out, grid
        self.in_on = slot_active(sector, p_in)
        self.out_on = slot_active(sector, p_out)
        self.blocks = [[None] * 4 for _ in range(4)]
        self.source = [[""] * 4 for _ in range(4)]

    def add(self, i, j, mat, label):
        if not (self.out_on[i] and self.in_on[j]):
            return
        if np.isscalar(mat):
            if mat == 0:
                return
            mat = mat * sp.identity(len(self.grid), format="csr")
        elif isinstance(mat, np.ndarray):
            mat = sp.diags(mat)
        if mat.nnz == 0:
            return
        mat = mat.tocsr()
        self.blocks[i][j] = mat if self.blocks[i][j] is None else self.blocks[i][j] + mat
        self.source[i][j] = "+".join(filter(None, (self.source[i][j], label)))

    def build(self, sign=""):
        return BlockRadialOperator(tuple(tuple(r) for r in self.blocks), self.sector, self.p_in,
                                   self.p_out, self.grid, tuple(tuple(r) for r in self.source), sign)


def _check_degree(sector, p, n):
    if not 0 <= p <= n:
        raise SectorMismatch(f"form degree {p} outside 0..{n}")
    if sector.sphere_dim != n - 2:
        raise SectorMismatch(f"sector lives on a sphere of dimension {sector.sphere_dim}, need {n - 2}")
    if not any(slot_active(sector, p)):
        raise SectorMismatch(f"sector {sector.kind.value} carries no degree-{p} forms")


def _weights(bg, grid):
    r = grid.r
    m = np.asarray(bg.mu(r), dtype=float)
    if np.any(m <= 0):
        raise ConfigError("grid must lie strictly between the horizons")
    return r, m, np.sqrt(m), np.asarray(bg.dmu(r), dtype=float)


def partial_r_star(q: int, bg, grid: RadialGrid) -> sp.csr_matrix:
    """Discretised ``-alpha r^(2-n+2q) d/dr r^(n-2-2q)``, the weighted adjoint of d/dr on degree-q coefficients."""
    n = bg.n
    r, _, alpha, _ = _weights(bg, grid)
    return (sp.diags(-alpha * r ** (2.0 - n + 2 * q)) @ grid.Dr @ sp.diags(r ** (n - 2.0 - 2 * q))).tocsr()


def assemble_d(p: int, sector: AngularSector, bg, grid: RadialGrid, sigma: complex = 0.0):
    """Exterior derivative from degree p to p+1 with ``d/dt -> -i sigma``."""
    n = bg.n
    _check_degree(sector, p, n)
    r, _, alpha, _ = _weights(bg, grid)
    dt = -1j * sigma
    Dr = grid.Dr
    b = _Builder(sector, p, p + 1, grid)
    dS = sector.d
    b.add(0, 0, dS(p), "d")
    b.add(1, 0, sp.diags(alpha) @ Dr, "d")
    b.add(1, 1, -dS(p - 1), "d")
    b.add(2, 0, dt / alpha, "d")
    b.add(2, 2, -dS(p - 1), "d")
    b.add(3, 1, dt / alpha, "d")
    b.add(3, 2, -(Dr @ sp.diags(alpha)), "d")
    b.add(3, 3, dS(p - 2), "d")
    return b.build("d")


def assemble_delta(p: int, sector: AngularSector, bg, grid: RadialGrid, sigma: complex = 0.0):
    """Codifferential from degree p to p-1 with ``d/dt -> -i sigma``."""
    n = bg.n
    _check_degree(sector, p, n)
    r, _, alpha, _ = _weights(bg, grid)
    dt = -1j * sigma
    b = _Builder(sector, p, p - 1, grid)
    dS = sector.delta
    b.add(0, 0, -dS(p) / r**2, "delta")
    b.add(0, 1, -(sp.diags(1.0 / alpha) @ partial_r_star(p - 1, bg, grid) @ sp.diags(alpha)), "delta")
    b.add(0, 2, -dt / alpha, "delta")
    b.add(1, 1, dS(p - 1) / r**2, "delta")
    b.add(1, 3, -dt / alpha, "delta")
    b.add(2, 2, dS(p - 1) / r**2, "delta")
    b.add(2, 3, partial_r_star(p - 2, bg, grid), "delta")
    b.add(3, 3, -dS(p - 2) / r**2, "delta")
    return b.build("delta")


def assemble_box(p: int, sector: AngularSector, bg, grid: RadialGrid, sigma: complex = 0.0):
    """The wave operator on p-forms, ``-r^-2 (A + B + C)`` with the three summands

    A: angular Laplacians and first-order couplings, B: radial second-order
    terms, C: ``r^2 mu^-1 d_tt``.  Equals ``d delta + delta d`` to
    discretisation order.
    """
    n = bg.n
    _check_degree(sector, p, n)
    r, m, alpha, dm = _weights(bg, grid)
    s = sigma
    bld = _Builder(sector, p, p, grid)
    S = sector
    pre = -1.0 / r**2

    def add(i, j, mat, label):
        if np.isscalar(mat) or isinstance(mat, np.ndarray):
            bld.add(i, j, pre * mat * np.ones_like(r), label)
        else:
            bld.add(i, j, sp.diags(pre) @ mat, label)

    # A: angular part and first-order couplings
    for i, q in enumerate((p, p - 1, p - 1, p - 2)):
        add(i, i, S.laplacian(q), "A")
    add(0, 1, -2 * alpha * r * S.d(p - 1), "A")
    add(1, 0, -2 * alpha / r * S.delta(p), "A")
    add(1, 2, -(r**2) / m * dm * (-1j * s), "A")
    add(2, 1, -(r**2) / m * dm * (-1j * s), "A")
    add(2, 3, -2 * alpha * r * S.d(p - 2), "A")
    add(3, 2, -2 * alpha / r * S.delta(p - 1), "A")

    # B: radial second-order terms a d_r b d_r c
    add(0, 0, grid.second_order(-r ** (4.0 - n + 2 * p), r ** (n - 2.0 - 2 * p) * m, np.ones_like(r)), "B")
    add(1, 1, grid.second_order(-(r**2) * alpha, r ** (2.0 * p - n), r ** (n - 2.0 * p) * alpha), "B")
    add(2, 2, grid.second_order(-r ** (2.0 * p - n + 2) * alpha, r ** (n - 2.0 * p), alpha), "B")
    add(3, 3, grid.second_order(-(r**2), m * r ** (2.0 * p - n - 2), r ** (n + 2.0 - 2 * p)), "B")

    # C: time derivatives
    for i in range(4):
        add(i, i, -(s**2) * r**2 / m, "C")
    return bld.build("box = -r^-2 (A + B + C)")


def composed_laplacian(p: int, sector: AngularSector, bg, grid: RadialGrid, sigma: complex = 0.0):
    """``d delta + delta d`` on degree p, skipping a term whose intermediate degree is empty."""
    _check_degree(sector, p, bg.n)
    total = _Builder(sector, p, p, grid).build("d delta + delta d")
    if p < bg.n and any(slot_active(sector, p + 1)):
        total = total + assemble_delta(p + 1, sector, bg, grid, sigma).compose(assemble_d(p, sector, bg, grid, sigma))
    if p > 0 and any(slot_active(sector, p - 1)):
        total = total + assemble_d(p - 1, sector, bg, grid, sigma).compose(assemble_delta(p, sector, bg, grid, sigma))
    return total


def matching_matrix(side: str, alpha):
    """Weights relating horizon-smooth components to (TT, TN, NT, NN) near ``r_plus`` or ``r_minus``."""
    if side not in ("plus", "minus"):
        raise ConfigError("side must be 'plus' or 'minus'")
    sgn = -1.0 if side == "plus" else 1.0
    a = np.asarray(alpha, dtype=float)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.array([[o, z, z, z],
                     [z, a, sgn / a, z],
                     [z, z, 1.0 / a, z],
                     [z, z, z, o]])


def section_norm(u: FormSection4, bg, buffer: float = 0.05) -> float:
    """L2 norm with density ``alpha^-1 r^(n-2)`` and fibre weights ``r^(-2q)`` per angular degree."""
    g = u.grid
    r = g.r
    alpha = np.sqrt(np.asarray(bg.mu(r), dtype=float))
    mask = g.buffer_mask(buffer)
    base = g.quadrature() * r ** (bg.n - 2.0) / alpha
    total = 0.0
    for arr, shift in zip(u.slots, SLOT_SHIFT):
        if len(arr):
            q = u.degree - shift
            w = base * r ** (-2.0 * q) * u.sector.norm2(q)
            total += float(np.sum((w * np.abs(arr) ** 2)[mask]))
    return math.sqrt(total)


def annihilation_residual(op: BlockRadialOperator, state: FormSection4, bg, buffer: float = 0.05) -> float:
    return section_norm(op.apply(state), bg, buffer)


def spacetime_pairing(u: FormSection4, v: FormSection4, bg) -> complex:
    """Pairing under which d(sigma) and delta(conj sigma) are formally adjoint.

    Density ``r^(n-2)`` (spacetime volume per unit time), fibre weights
    ``r^(-2q)`` and the Lorentzian signs of the time-like slots.
    """
    if u.degree != v.degree or u.sector != v.sector:
        raise SectorMismatch("pairing needs equal degree and sector")
    g = u.grid
    r = g.r
    base = g.quadrature() * r ** (bg.n - 2.0)
    s = (-1) ** u.degree
    total = 0.0 + 0.0j
    for a, b, shift, sign in zip(u.slots, v.slots, SLOT_SHIFT, (s, s, -s, -s)):
        if len(a):
            q = u.degree - shift
            total += sign * np.sum(base * r ** (-2.0 * q) * u.sector.norm2(q) * a * np.conj(b))
    return total


def hodge_star(u: FormSection4, bg) -> FormSection4:
    """Hodge star for ``g = alpha^2 dt^2 - h`` between the constant and volume sectors.

    With the orthonormal coframe ``e0 = alpha dt``, ``e1 = alpha^-1 dr`` and the
    angular volume ``r^(n-2) omega``, the star swaps TT<->NN and TN<->NT and
    multiplies by ``r^(+-(n-2))``; the signs below follow from
    ``a ^ *b = <a, b> e0 ^ e1 ^ r^(n-2) omega``.
    """
    n = bg.n
    d = n - 2
    r = u.grid.r
    if u.sector.kind is SectorKind.CONSTANT:
        target, scale = AngularSector.volume(n), r ** float(d)
        signs = (1.0, 1.0, 1.0, -1.0)  # image of TT, TN, NT, NN
    elif u.sector.kind is SectorKind.VOLUME:
        target, scale = AngularSector.constant(n), r ** float(-d)
        s = (-1.0) ** d
        signs = (s, 1.0, 1.0, -s)
    else:
        raise SectorMismatch("Hodge star is only implemented for the constant and volume sectors")
    src = dict(zip(SLOTS, u.slots))
    out = {}
    for name, image, sgn in zip(SLOTS, ("nn", "nt", "tn", "tt"), signs):
        if len(src[name]):
            out[image] = sgn * scale * src[name]
    return FormSection4.from_functions(target, n - u.degree, u.grid, **out)
