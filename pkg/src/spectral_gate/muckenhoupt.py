"""Sampled checks of the matrix A_infinity,loc inequality, the subset-integral
condition and the A_2,loc bracket."""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .errors import ConfigError, HypothesisError
from .geometry import Cube, Grid, SampleLattice
from .linalg import min_eigenvalues, op_norm, psd_sqrt, psd_tolerance
from .potential import Potential, integrate
from .verdict import CriterionVerdict, Status, Witness

DEFAULT_DELTA = 0.1
DEFAULT_C = 0.1


@dataclass(frozen=True)
class AInfinityParams:
    delta: float = DEFAULT_DELTA
    c: float = DEFAULT_C
    ell0: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if not 0 < self.c < 1:
            raise ConfigError("c must lie in (0, 1)")
        if not self.ell0 > 0:
            raise ConfigError("ell0 must be positive")


def ainfty_fraction(W: Potential, Q: Cube, delta: float, m: int = 64) -> float:
    """Fraction of lattice nodes x in Q with W(x) >= (delta/|Q|) int_Q W as quadratic forms."""
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    lat = SampleLattice(Q, m)
    B = delta / Q.volume() * integrate(W, Q, m)
    vals = W.evaluate(lat.nodes)
    gap = min_eigenvalues(vals - B[None])
    return float(np.mean(gap >= -psd_tolerance(B)))


def ainfty_scan(W: Potential, delta: float = DEFAULT_DELTA, c: float = DEFAULT_C, ell0: float = 1.0,
                region: float = 4.0, m: int = 32, levels: int = 3,
                max_witnesses: int = 10) -> CriterionVerdict:
    """Evaluate the A_infinity fraction on every grid cube of sides ell0, ell0/2, ell0/4
    inside [-region, region]^n."""
    params = AInfinityParams(delta, c, ell0)
    witnesses, table = [], []
    worst = (np.inf, None)
    for lev in range(levels):
        side = ell0 / 2 ** lev
        cubes = Grid(side, W.n).cells_in_box(region)
        fracs = [ainfty_fraction(W, q, delta, m) for q in cubes]
        for q, f in zip(cubes, fracs):
            if f < c and len(witnesses) < max_witnesses:
                witnesses.append(Witness(f, q.center, q.side, label="fraction below c"))
            if f < worst[0]:
                worst = (f, q)
        table.append({"side": side, "cubes": len(cubes),
                      "min_fraction": min(fracs) if fracs else None})
    status = Status.VIOLATED if witnesses else Status.SATISFIED_SAMPLED
    if worst[1] is not None and not witnesses:
        witnesses.append(Witness(worst[0], worst[1].center, worst[1].side, label="smallest fraction"))
    return CriterionVerdict(status, witnesses,
                            {"delta": params.delta, "c": params.c, "ell0": params.ell0,
                             "region": region, "m": m}, table)


def sphere_directions(d: int, count: int = 256, real: bool = False) -> np.ndarray:
    """Deterministic low-discrepancy unit vectors on the sphere of C^d (or R^d)."""
    dim = d if real else 2 * d
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    g = _normal.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    u = g if real else g[:, :d] + 1j * g[:, d:]
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    if real:
        u = u.astype(complex)
    basis = np.eye(d, dtype=complex)
    return np.vstack([basis, u])


@dataclass(frozen=True)
class ConditionBMargin:
    beta: float
    direction: np.ndarray

    def __float__(self):
        return self.beta


def condition_b_margin(W: Potential, Q: Cube, alpha: float, m: int = 64,
                       u_samples=256) -> ConditionBMargin:
    """Worst-case ratio int_A (Wu,u) / int_Q (Wu,u) over |A| >= alpha|Q| and sampled u.

    For fixed u the worst A of a given measure is a sublevel set of x -> (W(x)u,u),
    so at lattice resolution it is the ceil(alpha m^n) smallest nodes.
    """
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    lat = SampleLattice(Q, m)
    vals = W.evaluate(lat.nodes)
    if np.ndim(u_samples) == 0:
        dirs = sphere_directions(W.d, int(u_samples))
        _, vecs = np.linalg.eigh(integrate(W, Q, m))
        dirs = np.vstack([dirs, vecs.T.astype(complex)])
    else:
        dirs = np.atleast_2d(np.asarray(u_samples, dtype=complex))
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    k = int(ceil(alpha * lat.size - 1e-9))
    quad = np.einsum("ui,nij,uj->un", dirs.conj(), vals, dirs).real
    total = quad.sum(axis=1)
    part = np.sort(quad, axis=1)[:, :k].sum(axis=1)
    best_beta, best_u = np.inf, dirs[0]
    for j in range(dirs.shape[0]):
        if total[j] <= 0.0:
            return ConditionBMargin(0.0, dirs[j])
        b = part[j] / total[j]
        if b < best_beta:
            best_beta, best_u = b, dirs[j]
    return ConditionBMargin(float(min(best_beta, 1.0)), best_u)


def a2loc_bracket(W: Potential, cubes, m: int = 32) -> float:
    """max over cubes of |(avg W)^{1/2} (avg W^{-1})^{1/2}|_op by lattice quadrature."""
    worst = 0.0
    for q in cubes:
        lat = SampleLattice(q, m)
        vals = W.evaluate(lat.nodes)
        lam = min_eigenvalues(vals)
        scale = np.abs(vals).reshape(len(vals), -1).max(axis=1)
        bad = np.nonzero(lam <= 1e-12 * np.maximum(scale, 1e-300))[0]
        if bad.size:
            node = lat.nodes[bad[0]]
            raise HypothesisError(f"W is singular at node {node.tolist()}", node=node)
        avg = vals.mean(axis=0)
        avg_inv = np.linalg.inv(vals).mean(axis=0)
        worst = max(worst, op_norm(psd_sqrt(avg) @ psd_sqrt(avg_inv)))
    return float(worst)
