"""Dimensions of stationary-state spaces from Betti numbers of the spatial slice and its boundary.

For the wave operator the count is exact:

    dim K^k = b^k(X) + b^{k-1}(X, dX) + b^{k-1}(dX).

For d + delta the boundary term only gives an upper bound, since the map to
boundary cohomology need not be onto.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class BettiData:
    """Betti numbers of a compact (n-1)-manifold with boundary, its boundary, and the pair."""

    n: int
    absolute: tuple[int, ...]
    boundary: tuple[int, ...]
    relative: tuple[int, ...]
    label: str = "custom"

    def __post_init__(self):
        if any(b < 0 for b in (*self.absolute, *self.boundary, *self.relative)):
            raise ConfigError("Betti numbers must be nonnegative")
        m = self.n - 1
        if len(self.absolute) != m + 1 or len(self.relative) != m + 1:
            raise ConfigError(f"absolute and relative Betti numbers need {m + 1} entries")
        if len(self.boundary) != m:
            raise ConfigError(f"boundary Betti numbers need {m} entries")
        if tuple(self.relative) != tuple(reversed(self.absolute)):
            raise ConfigError("relative Betti numbers must be the reversal of the absolute ones (duality)")

    @classmethod
    def from_absolute(cls, n: int, absolute, boundary, label="custom") -> "BettiData":
        return cls(n, tuple(absolute), tuple(boundary), tuple(reversed(tuple(absolute))), label)

    def _get(self, seq, k):
        return seq[k] if 0 <= k < len(seq) else 0

    def b_abs(self, k):
        return self._get(self.absolute, k)

    def b_rel(self, k):
        return self._get(self.relative, k)

    def b_bdy(self, k):
        return self._get(self.boundary, k)


def sphere_betti(d: int) -> tuple[int, ...]:
    return tuple(1 if k in (0, d) else 0 for k in range(d + 1))


def betti_sds(n: int) -> BettiData:
    """Slice deformation retracts onto S^(n-2); boundary is two copies of S^(n-2)."""
    if n < 4:
        raise ConfigError("n must be at least 4")
    s = sphere_betti(n - 2)
    return BettiData.from_absolute(n, (*s, 0), tuple(2 * b for b in s), label="sds")


def betti_ds(n: int) -> BettiData:
    """Slice is a closed ball; boundary is one S^(n-2)."""
    if n < 4:
        raise ConfigError("n must be at least 4")
    ball = tuple(1 if k == 0 else 0 for k in range(n))
    return BettiData.from_absolute(n, ball, sphere_betti(n - 2), label="ds")


def _check_k(k, betti):
    if not 0 <= k <= betti.n:
        raise ConfigError(f"form degree {k} outside 0..{betti.n}")


def dim_K(k: int, betti: BettiData) -> int:
    _check_k(k, betti)
    return betti.b_abs(k) + betti.b_rel(k - 1) + betti.b_bdy(k - 1)


def dim_H_bounds(k: int, betti: BettiData) -> tuple[int, int]:
    _check_k(k, betti)
    lower = betti.b_abs(k) + betti.b_rel(k - 1)
    return lower, lower + betti.b_bdy(k - 1)


def dim_H_exact(k: int, betti: BettiData) -> int | None:
    """Exact value where known: whenever the bounds coincide, and for the two model spacetimes.

    On both Schwarzschild-de Sitter and static de Sitter the boundary
    contributions in degrees 1 and n-1 are not realised by harmonic states,
    so the lower bound is attained there.
    """
    lo, hi = dim_H_bounds(k, betti)
    if lo == hi:
        return lo
    if betti.label in ("sds", "ds"):
        return lo
    return None


def table(betti: BettiData) -> dict:
    n = betti.n
    return {
        "K": [dim_K(k, betti) for k in range(n + 1)],
        "H_lower": [dim_H_bounds(k, betti)[0] for k in range(n + 1)],
        "H_upper": [dim_H_bounds(k, betti)[1] for k in range(n + 1)],
        "H_exact": [dim_H_exact(k, betti) for k in range(n + 1)],
    }
