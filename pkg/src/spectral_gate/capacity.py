"""Discrete Wiener capacity, equilibrium potentials, superlevel-set search for
capacity-negligible sets, and the scalar and matrix Maz'ya-Shubin scans."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _kernels
from .errors import ConfigError, ConvergenceError
from .geometry import Cube, Grid, SampleLattice, annulus_cells
from .muckenhoupt import sphere_directions
from .potential import Potential, integrate
from .verdict import CriterionVerdict, Status, Witness, trend_status

DEFAULT_GAMMA = 0.05
DEFAULT_BOX_FACTOR = 8.0


@dataclass(frozen=True)
class IndicatorSet:
    """Compact F inside a cube, stored as a union of closed lattice cells."""

    cube: Cube
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        m = mask.shape[0]
        if mask.shape != (m,) * self.cube.n:
            raise ConfigError(f"mask shape {mask.shape} does not match an m^n lattice on the cube")
        object.__setattr__(self, "mask", mask)

    @property
    def m(self) -> int:
        return self.mask.shape[0]

    @property
    def cell_side(self) -> float:
        return self.cube.side / self.m

    def is_empty(self) -> bool:
        return not self.mask.any()

    def measure(self) -> float:
        return float(self.mask.sum()) * self.cell_side ** self.cube.n

    @classmethod
    def empty(cls, cube: Cube, m: int = 1) -> "IndicatorSet":
        return cls(cube, np.zeros((m,) * cube.n, dtype=bool))

    @classmethod
    def full(cls, cube: Cube, m: int = 1) -> "IndicatorSet":
        return cls(cube, np.ones((m,) * cube.n, dtype=bool))

    @classmethod
    def from_predicate(cls, cube: Cube, m: int, predicate) -> "IndicatorSet":
        """Cells whose center satisfies ``predicate(points) -> bool array``."""
        lat = SampleLattice(cube, m)
        return cls(cube, np.asarray(predicate(lat.nodes), dtype=bool).reshape((m,) * cube.n))

    @classmethod
    def ball(cls, cube: Cube, m: int, radius: float, center=None) -> "IndicatorSet":
        """Largest cell union contained in the closed ball (inner approximation)."""
        c = np.asarray(cube.center if center is None else center, dtype=float)
        half = cube.side / m / 2.0

        def inside(p):
            far = np.abs(p - c) + half
            return np.linalg.norm(far, axis=1) <= radius * (1 + 1e-12)

        return cls.from_predicate(cube, m, inside)

    def union(self, other: "IndicatorSet") -> "IndicatorSet":
        return IndicatorSet(self.cube, self.mask | other.mask)


@dataclass
class CapacityResult:
    value: float
    potential: np.ndarray | None
    residual: float
    iterations: int = 0
    h: float | None = None
    box: Cube | None = None


def _node_axis(box: Cube, h: float) -> tuple[np.ndarray, int]:
    M = int(round(box.side / h))
    if abs(M * h - box.side) > 1e-9 * box.side:
        raise ConfigError(f"mesh width {h} does not divide the computational box side {box.side}")
    return np.arange(1, M), M


def _nodes_in_set(F: IndicatorSet, box: Cube, h: float) -> np.ndarray:
    """Interior mesh nodes lying in the closed union of F's cells."""
    idx, _ = _node_axis(box, h)
    n, cs, m = F.cube.n, F.cell_side, F.m
    per_axis = []
    for ax in range(n):
        x = box.lower[ax] + idx * h
        t = (x - F.cube.lower[ax]) / cs
        lo = np.ceil(t - 1 - 1e-9).astype(int)
        hi = np.floor(t + 1e-9).astype(int)
        per_axis.append((lo, hi))
    shape = (len(idx),) * n
    inside = np.zeros(shape, dtype=bool)
    for combo in itertools.product((0, 1), repeat=n):
        ks = [per_axis[ax][c] for ax, c in enumerate(combo)]
        valid = [(k >= 0) & (k < m) for k in ks]
        grids = np.meshgrid(*[np.clip(k, 0, m - 1) for k in ks], indexing="ij")
        ok = np.ones(shape, dtype=bool)
        for ax, v in enumerate(valid):
            sh = [1] * n
            sh[ax] = -1
            ok &= v.reshape(sh)
        inside |= ok & F.mask[tuple(grids)]
    return inside


def dirichlet_energy(eta: np.ndarray, h: float) -> float:
    """h^(n-2) * sum over mesh edges of squared differences, zero padding outside."""
    n = eta.ndim
    pad = np.pad(eta, 1)
    total = 0.0
    for ax in range(n):
        total += float((np.diff(pad, axis=ax) ** 2).sum())
    return h ** (n - 2) * total


def computational_box(cube: Cube, box_factor: float = DEFAULT_BOX_FACTOR) -> Cube:
    if cube.n == 2:
        return cube.scaled(2.0)
    if box_factor < 2:
        raise ConfigError("box_factor must be >= 2")
    return cube.scaled(box_factor)


def capacity(F: IndicatorSet, h: float | None = None, box_factor: float = DEFAULT_BOX_FACTOR,
             tol: float = 1e-8, max_iter: int = 20000, keep_potential: bool = True) -> CapacityResult:
    """Discrete capacity of F.

    n >= 3: zero Dirichlet data on box_factor*Q; n = 2: relative to 2Q;
    n = 1: 0 for the empty set and 1/side otherwise.
    """
    n, Q = F.cube.n, F.cube
    if n == 1:
        return CapacityResult(0.0 if F.is_empty() else 1.0 / Q.side, None, 0.0)
    h = F.cell_side if h is None else float(h)
    k = Q.side / h
    if abs(k - round(k)) > 1e-9 * k:
        raise ConfigError(f"mesh width {h} must divide the cube side {Q.side}")
    box = computational_box(Q, box_factor)
    if F.is_empty():
        return CapacityResult(0.0, None, 0.0, 0, h, box)
    fixed = _nodes_in_set(F, box, h)
    if not fixed.any():
        return CapacityResult(0.0, None, 0.0, 0, h, box)
    shape = fixed.shape
    free = (~fixed).astype(float)
    ones = np.ones(shape)
    ind = fixed.astype(float)
    rhs = (-_kernels.masked_laplacian(ind, ones) * free).ravel()

    def matvec(x):
        return _kernels.masked_laplacian(x.reshape(shape), free).ravel()

    op = LinearOperator((rhs.size, rhs.size), matvec=matvec, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = cg(op, rhs, rtol=tol * 0.5, atol=0.0, maxiter=max_iter, callback=cb)
    bnorm = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(rhs - matvec(x)) / bnorm) if bnorm > 0 else 0.0
    if info != 0 or residual > tol:
        raise ConvergenceError(f"capacity CG did not converge (residual {residual:.3e})",
                               residual=residual, iterations=count[0])
    eta = x.reshape(shape) * free + ind
    val = dirichlet_energy(eta, h)
    return CapacityResult(val, eta if keep_potential else None, residual, count[0], h, box)


@lru_cache(maxsize=256)
def _cube_capacity(n: int, side: float, h: float, box_factor: float) -> float:
    Q = Cube((0.0,) * n, side)
    return capacity(IndicatorSet.full(Q, int(round(side / h))), h, box_factor, keep_potential=False).value


def cube_capacity(Q: Cube, h: float, box_factor: float = DEFAULT_BOX_FACTOR) -> float:
    """Capacity of the whole cube; translation invariant, so cached on (n, side, h)."""
    if Q.n == 1:
        return 1.0 / Q.side
    return _cube_capacity(Q.n, Q.side, float(h), float(box_factor))


@dataclass(frozen=True)
class NegligibleResult:
    set: IndicatorSet
    value: float
    total: float
    capacity: float
    budget: float


def _cell_values(W: Potential, Q: Cube, m: int) -> tuple[np.ndarray, float]:
    lat = SampleLattice(Q, m)
    vals = W.evaluate(lat.nodes)[:, 0, 0].real
    return vals.reshape((m,) * Q.n), lat.weight


def negligible_search(W: Potential, Q: Cube, gamma: float = DEFAULT_GAMMA, h: float | None = None,
                      box_factor: float = DEFAULT_BOX_FACTOR, u=None) -> NegligibleResult:
    """Remove the largest superlevel set of W (cell union) whose capacity stays within
    gamma * Cap(Q); returns it with the remaining integral, an upper bound for the infimum."""
    if not 0 < gamma < 1:
        raise ConfigError("gamma must lie in (0, 1)")
    if u is not None:
        W = W.direction(u)
    if W.d != 1:
        raise ConfigError("negligible_search needs a scalar potential or a direction u")
    if Q.n == 1:
        total = float(integrate(W, Q, 256)[0, 0].real)
        return NegligibleResult(IndicatorSet.empty(Q), total, total, 0.0, gamma / Q.side)
    h = Q.side / 8 if h is None else float(h)
    m = int(round(Q.side / h))
    vals, w = _cell_values(W, Q, m)
    total = float(vals.sum() * w)
    budget = gamma * cube_capacity(Q, h, box_factor)
    levels = np.unique(vals)[::-1]
    cap_of = {}

    def cap_at(k):
        if k not in cap_of:
            cap_of[k] = capacity(IndicatorSet(Q, vals >= levels[k]), h, box_factor,
                                 keep_potential=False).value
        return cap_of[k]

    lo, hi = -1, len(levels) - 1  # lo: largest admissible index found so far
    if cap_at(0) > budget:
        return NegligibleResult(IndicatorSet.empty(Q, m), total, total, 0.0, budget)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if cap_at(mid) <= budget:
            lo = mid
        else:
            hi = mid - 1
    F = IndicatorSet(Q, vals >= levels[lo])
    value = float(vals[~F.mask].sum() * w)
    return NegligibleResult(F, value, total, cap_at(lo), budget)


def greedy_negligible_search(W: Potential, Q: Cube, gamma: float = DEFAULT_GAMMA, h: float | None = None,
                             box_factor: float = DEFAULT_BOX_FACTOR, u=None) -> NegligibleResult:
    """Cell-by-cell removal in decreasing W order, skipping cells that break the budget.

    Costs one capacity solve per cell; meant as a coarse-mesh diagnostic next to
    :func:`negligible_search`.
    """
    if u is not None:
        W = W.direction(u)
    if Q.n == 1:
        return negligible_search(W, Q, gamma, h, box_factor)
    h = Q.side / 8 if h is None else float(h)
    m = int(round(Q.side / h))
    vals, w = _cell_values(W, Q, m)
    total = float(vals.sum() * w)
    budget = gamma * cube_capacity(Q, h, box_factor)
    mask = np.zeros_like(vals, dtype=bool)
    cap = 0.0
    for flat in np.argsort(-vals, axis=None, kind="stable"):
        trial = mask.copy()
        trial.flat[flat] = True
        c = capacity(IndicatorSet(Q, trial), h, box_factor, keep_potential=False).value
        if c <= budget:
            mask, cap = trial, c
    return NegligibleResult(IndicatorSet(Q, mask), float(vals[~mask].sum() * w), total, cap, budget)


def negligible_gap(W: Potential, Q: Cube, gamma: float = DEFAULT_GAMMA, h: float | None = None,
                   box_factor: float = DEFAULT_BOX_FACTOR) -> dict:
    sup = negligible_search(W, Q, gamma, h, box_factor)
    gr = greedy_negligible_search(W, Q, gamma, h, box_factor)
    return {"superlevel": sup.value, "greedy": gr.value, "gap": sup.value - gr.value}


def _scan(values_for_cell, n: int, ell: float, radii, width, threshold, params) -> CriterionVerdict:
    radii = [float(r) for r in radii]
    if not radii:
        raise ConfigError("radii must be non-empty")
    grid = Grid(ell, n)
    table, minima, witnesses = [], [], []
    for r in radii:
        cells = annulus_cells(grid, r, width)
        if not cells:
            table.append({"radius": r, "cells": 0, "min_value": None})
            continue
        vals = [values_for_cell(q) for q in cells]
        k = int(np.argmin(vals))
        minima.append(vals[k])
        table.append({"radius": r, "cells": len(cells), "min_value": vals[k],
                      "argmin_center": list(cells[k].center)})
        witnesses.append(Witness(vals[k], cells[k].center, cells[k].side, label=f"annulus r={r}"))
    ok = len(minima) == len(radii) and trend_status(minima, threshold)
    status = Status.SATISFIED_HEURISTIC if ok else Status.INCONCLUSIVE
    return CriterionVerdict(status, witnesses, params, table,
                            notes=["values are upper bounds for the infimum over negligible sets"])


def mazya_shubin_scan(W: Potential, ell: float, gamma: float = DEFAULT_GAMMA, radii=(4, 8, 16),
                      h: float | None = None, box_factor: float = DEFAULT_BOX_FACTOR,
                      threshold: float = 1.0, width: float | None = None) -> CriterionVerdict:
    """Per-annulus minima of the negligible-set-trimmed integral of a scalar W."""
    if W.d != 1:
        raise ConfigError("mazya_shubin_scan takes a scalar potential; use matrix_ms_scan")

    def cell_value(q):
        return negligible_search(W, q, gamma, h, box_factor).value

    return _scan(cell_value, W.n, ell, radii, width, threshold,
                 {"ell": ell, "gamma": gamma, "radii": list(radii), "h": h, "box_factor": box_factor,
                  "threshold": threshold})


def matrix_ms_scan(V: Potential, ell: float, gamma: float = DEFAULT_GAMMA, radii=(4, 8, 16),
                   h: float | None = None, u_samples: int = 64, box_factor: float = DEFAULT_BOX_FACTOR,
                   threshold: float = 1.0, width: float | None = None) -> CriterionVerdict:
    """Per cell: min over sampled unit u (plus the eigenvectors of int_Q V) of the
    trimmed integral of (V u, u)."""
    base = sphere_directions(V.d, u_samples) if V.d > 1 else np.ones((1, 1), dtype=complex)

    def cell_value(q):
        _, vecs = np.linalg.eigh(integrate(V, q, 64))
        dirs = np.vstack([vecs.T.astype(complex), base])
        return min(negligible_search(V, q, gamma, h, box_factor, u=u).value for u in dirs)

    return _scan(cell_value, V.n, ell, radii, width, threshold,
                 {"ell": ell, "gamma": gamma, "radii": list(radii), "h": h, "u_samples": u_samples,
                  "box_factor": box_factor, "threshold": threshold})
