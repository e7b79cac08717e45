"""Cubes, canonical grids, midpoint sample lattices and exact monomial integrals."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Cube:
    """Closed axis-parallel cube Q(center, side)."""

    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "side", float(self.side))
        if not self.side > 0:
            raise ConfigError(f"cube side must be positive, got {self.side}")

    @classmethod
    def from_corner(cls, corner, side) -> "Cube":
        corner = np.atleast_1d(np.asarray(corner, dtype=float))
        return cls(tuple(corner + side / 2.0), side)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - self.side / 2.0

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center) + self.side / 2.0

    def volume(self) -> float:
        return self.side ** self.n

    def scaled(self, k: float) -> "Cube":
        return Cube(self.center, k * self.side)

    def children(self) -> list["Cube"]:
        """The 2^n dyadic children, in lexicographic order of their lower corners."""
        half = self.side / 2.0
        lo = self.lower
        return [Cube.from_corner(lo + half * np.array(bits), half)
                for bits in itertools.product((0, 1), repeat=self.n)]

    def contains(self, points, tol=0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.lower - tol) & (p <= self.upper + tol), axis=1)

    def lattice(self, m: int) -> "SampleLattice":
        return SampleLattice(self, m)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "side": self.side}


@dataclass(frozen=True)
class Grid:
    """Canonical grid of step ``step``: cells step*z + [0, step]^n."""

    step: float
    n: int

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("grid step must be positive")
        if self.n < 1:
            raise ConfigError("grid dimension must be >= 1")

    def cell(self, z) -> Cube:
        z = np.atleast_1d(np.asarray(z))
        if z.shape != (self.n,):
            raise ConfigError(f"cell index must have length {self.n}")
        return Cube.from_corner(self.step * z.astype(float), self.step)

    def cells_in_box(self, half_width: float) -> list[Cube]:
        """All cells contained in [-half_width, half_width]^n."""
        k = int(np.floor(half_width / self.step + 1e-9))
        rng = range(-k, k)
        return [self.cell(np.array(z)) for z in itertools.product(rng, repeat=self.n)]


def cells_in_annulus(grid: Grid, r_inner: float, r_outer: float) -> list[Cube]:
    """Grid cells whose center c satisfies r_inner <= |c| < r_outer.

    Ordered by |c|, ties broken by descending lexicographic cell index so that the
    non-negative side comes first (in 1-d: [0,1], [-1,0], [1,2], [-2,-1], ...).
    """
    if not 0 <= r_inner < r_outer:
        raise ConfigError("need 0 <= r_inner < r_outer")
    n, s = grid.n, grid.step
    # |c|^2 = (s/2)^2 * sum (2z+1)^2; compare against integer bounds exactly where possible
    scale = (2.0 / s) ** 2
    lo2, hi2 = r_inner ** 2 * scale, r_outer ** 2 * scale
    zmax = int(np.ceil(r_outer / s)) + 1
    axis = np.arange(-zmax - 1, zmax + 1)
    odd2 = (2 * axis + 1) ** 2
    if n == 1:
        heads = np.zeros((1, 0), dtype=np.int64)
        head_sq = np.zeros(1)
    else:
        mesh = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
        heads = np.stack([m.ravel() for m in mesh], axis=1)
        head_sq = ((2 * heads + 1) ** 2).sum(axis=1).astype(float)
        keep = head_sq < hi2
        heads, head_sq = heads[keep], head_sq[keep]
    found = []
    for head, hsq in zip(heads, head_sq):
        tot = hsq + odd2
        sel = (tot >= lo2 * (1 - 1e-15)) & (tot < hi2 * (1 - 1e-15))
        for z_last, t in zip(axis[sel], tot[sel]):
            found.append((int(t), tuple(int(v) for v in head) + (int(z_last),)))
    # exact integer key: sum (2z+1)^2
    found.sort(key=lambda item: (item[0], tuple(-v for v in item[1])))
    return [grid.cell(np.array(z)) for _, z in found]


def annulus_cells(grid: Grid, radius: float, width: float | None = None) -> list[Cube]:
    """Cells of the shell [radius, radius + width); width defaults to the grid step."""
    return cells_in_annulus(grid, radius, radius + (grid.step if width is None else width))


@dataclass(frozen=True)
class SampleLattice:
    """Midpoint rule on a cube: m^n cell centers, each carrying weight |Q|/m^n."""

    cube: Cube
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ConfigError("points per axis must be >= 1")
        object.__setattr__(self, "m", int(self.m))

    @cached_property
    def axis_points(self) -> list[np.ndarray]:
        h = self.cube.side / self.m
        offs = (np.arange(self.m) + 0.5) * h
        return [lo + offs for lo in self.cube.lower]

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axis_points, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def size(self) -> int:
        return self.m ** self.cube.n

    @property
    def weight(self) -> float:
        return self.cube.volume() / self.size


def _power_integral(lo: float, hi: float, a: int) -> float:
    """int_lo^hi t^a dt expanded around the midpoint (positive terms only, no cancellation)."""
    c = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    total = 0.0
    for k in range(0, a + 1, 2):
        total += comb(a, k) * c ** (a - k) * 2.0 * half ** (k + 1) / (k + 1)
    return total


def monomial_integral(cube: Cube, exponents) -> float:
    """Exact integral of prod x_i^{a_i} over the cube."""
    exps = tuple(int(a) for a in np.atleast_1d(exponents))
    if len(exps) != cube.n:
        raise ConfigError(f"exponent length {len(exps)} != cube dimension {cube.n}")
    if any(a < 0 for a in exps):
        raise ConfigError("exponents must be non-negative")
    val = 1.0
    for lo, hi, a in zip(cube.lower, cube.upper, exps):
        val *= _power_integral(float(lo), float(hi), a)
    return val
