"""Subspace-valued fields, their oscillation on cubes, delta-separation of subspace
families, and the glued rank-deficient potential built from them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import ConfigError, HypothesisError, NumericalError
from .geometry import Cube, Grid, SampleLattice, annulus_cells
from .linalg import min_eigenvalues, op_norms
from .muckenhoupt import sphere_directions
from .potential import Potential, _as_points
from .verdict import CriterionVerdict, Status, Witness, trend_status

ORTHO_TOL = 1e-10


def orthonormal_frame(basis) -> np.ndarray:
    """Orthonormal columns spanning the columns of ``basis`` (rank-revealing QR via SVD)."""
    B = np.asarray(basis, dtype=complex)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2:
        raise ConfigError("subspace basis must be a matrix")
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(s.max(initial=0.0), 1.0)))
    if rank == 0:
        raise ConfigError("subspace must be non-trivial")
    return u[:, :rank]


def projector(frame) -> np.ndarray:
    F = np.asarray(frame, dtype=complex)
    return F @ F.conj().T


class SubspaceField:
    """x -> S(x), exposed as orthogonal projectors of shape (N, d, d)."""

    n: int
    d: int

    def projectors(self, points) -> np.ndarray:
        raise NotImplementedError

    def complement_projectors(self, points) -> np.ndarray:
        return np.eye(self.d)[None] - self.projectors(points)

    def rotated(self, U) -> "SubspaceField":
        return _RotatedField(self, np.asarray(U, dtype=complex))


class ConstantSubspace(SubspaceField):
    def __init__(self, n: int, basis):
        self.frame = orthonormal_frame(basis)
        self.n, self.d = int(n), self.frame.shape[0]
        self._P = projector(self.frame)

    def projectors(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        return np.broadcast_to(self._P, (p.shape[0], self.d, self.d)).copy()


class FunctionSubspaceField(SubspaceField):
    """Wraps ``func(points) -> (N, d, d)`` projector stacks."""

    def __init__(self, n: int, d: int, func):
        self.n, self.d, self.func = int(n), int(d), func

    def projectors(self, points) -> np.ndarray:
        return np.asarray(self.func(_as_points(points, self.n)), dtype=complex)


class _RotatedField(SubspaceField):
    def __init__(self, base: SubspaceField, U):
        self.base, self.U, self.n, self.d = base, U, base.n, base.d

    def projectors(self, points) -> np.ndarray:
        P = self.base.projectors(points)
        return self.U[None] @ P @ self.U.conj().T[None]


# -------------------------------------------------------------------- families and partitions

@dataclass
class SubspaceFamilySpec:
    """Subspaces S_1..S_N of C^d and an axis-aligned partition A_1..A_N of [0,1]^n.

    ``kind="stripes"`` cuts along the first axis at the cumulative fractions;
    ``kind="checkerboard"`` (two parts, fractions 1/2 each) colours the 2^n half-cubes
    by parity.
    """

    subspaces: list
    fractions: list | None = None
    kind: str = "stripes"
    frames: list = field(init=False)

    def __post_init__(self):
        self.frames = [orthonormal_frame(s) for s in self.subspaces]
        dims = {f.shape[0] for f in self.frames}
        if len(dims) != 1:
            raise ConfigError("all subspaces must live in the same C^d")
        N = len(self.frames)
        if self.fractions is None:
            self.fractions = [1.0 / N] * N
        self.fractions = [float(x) for x in self.fractions]
        if len(self.fractions) != N or any(x <= 0 for x in self.fractions):
            raise ConfigError("need one strictly positive fraction per subspace")
        if abs(sum(self.fractions) - 1.0) > 1e-12:
            raise ConfigError("fractions must sum to 1")
        if self.kind not in ("stripes", "checkerboard"):
            raise ConfigError(f"unknown partition kind {self.kind!r}")
        if self.kind == "checkerboard" and (N != 2 or abs(self.fractions[0] - 0.5) > 1e-12):
            raise ConfigError("checkerboard partitions have two parts of fraction 1/2")
        self._projectors = np.stack([projector(f) for f in self.frames])

    @property
    def d(self) -> int:
        return self.frames[0].shape[0]

    @property
    def N(self) -> int:
        return len(self.frames)

    @property
    def projector_stack(self) -> np.ndarray:
        return self._projectors

    def trivial_intersection(self, tol: float = 1e-10) -> bool:
        """True iff the intersection of all S_j is {0}: sum_j (I - P_j) is then non-singular."""
        total = (np.eye(self.d)[None] - self._projectors).sum(axis=0)
        return bool(np.linalg.eigvalsh(total)[0] > tol)

    def part_index(self, t) -> np.ndarray:
        """Part index j for local coordinates t in [0,1)^n, shape (N, n)."""
        t = np.atleast_2d(t)
        if self.kind == "stripes":
            edges = np.cumsum(self.fractions)[:-1]
            return np.searchsorted(edges, t[:, 0], side="right")
        return (np.floor(2.0 * t).astype(int).sum(axis=1)) % 2

    def to_dict(self) -> dict:
        frames = []
        for f in self.frames:
            frames.append({"re": f.real.tolist(), "im": f.imag.tolist()})
        return {"subspaces": frames, "partition": {"kind": self.kind, "fractions": self.fractions}}

    @classmethod
    def from_dict(cls, doc: dict) -> "SubspaceFamilySpec":
        try:
            subs = []
            for s in doc["subspaces"]:
                if isinstance(s, dict):
                    re = np.asarray(s["re"], dtype=float)
                    im = np.asarray(s.get("im", np.zeros_like(re)), dtype=float)
                    subs.append(re + 1j * im)
                else:
                    subs.append(np.asarray(s, dtype=complex))
            part = doc.get("partition", {})
            return cls(subs, part.get("fractions"), part.get("kind", "stripes"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed subspace family: {exc}") from exc

    @classmethod
    def coordinate(cls, d: int, kind: str = "stripes") -> "SubspaceFamilySpec":
        """S_j = span{e_k : k != j}; for d = 2 these are the two coordinate lines."""
        eye = np.eye(d)
        subs = [np.delete(eye, j, axis=1) for j in range(d)]
        return cls(subs, None, kind)


@dataclass
class PartitionScheme:
    """Sequences a_m >= 2 and increasing b_m; level m covers [-b_m, b_m]^n minus
    [-b_{m-1}, b_{m-1}]^n with cubes of step 1/(a_1 ... a_m).

    Points beyond b_last keep the finest listed step.
    """

    a: list
    b: list

    def __post_init__(self):
        self.a = [int(x) for x in self.a]
        self.b = [int(x) for x in self.b]
        if not self.a or len(self.a) != len(self.b):
            raise ConfigError("a and b must be non-empty and of equal length")
        if any(x < 2 for x in self.a):
            raise ConfigError("every a_m must be >= 2")
        if any(y <= x for x, y in zip([0] + self.b, self.b)):
            raise ConfigError("b must be positive and strictly increasing")
        self.steps = 1.0 / np.cumprod(self.a).astype(float)

    def level(self, points) -> np.ndarray:
        r = np.max(np.abs(np.atleast_2d(points)), axis=1)
        lev = np.searchsorted(np.asarray(self.b, dtype=float), r, side="right")
        return np.minimum(lev, len(self.b) - 1)

    def step_at(self, points) -> np.ndarray:
        return self.steps[self.level(points)]

    def local_coordinates(self, points) -> np.ndarray:
        """T_Q(x) in [0,1)^n for the scheme cube Q containing x."""
        p = np.atleast_2d(points)
        s = self.step_at(p)[:, None]
        q = p / s
        return q - np.floor(q)

    def satisfies_star(self, m: int, samples: int = 8) -> bool:
        """Check (at sample points) that grid cubes of step 1/(a_1...a_m) outside
        [-b_{m-1}, b_{m-1}]^n are unions of scheme cubes."""
        idx = m - 1
        step = self.steps[idx]
        inner = self.b[idx - 1] if idx > 0 else 0
        outer = self.b[-1]
        grid = Grid(step, 1)
        for cube in grid.cells_in_box(outer):
            if cube.upper[0] <= inner:
                continue
            if cube.lower[0] >= -inner and cube.upper[0] <= inner:
                continue
            xs = cube.lower[0] + (np.arange(samples) + 0.5) * step / samples
            sub = self.step_at(xs[:, None])
            ratio = step / sub
            if np.any(np.abs(ratio - np.round(ratio)) > 1e-9) or np.any(ratio < 1 - 1e-12):
                return False
        return True

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, doc: dict) -> "PartitionScheme":
        try:
            return cls(doc["a"], doc["b"])
        except KeyError as exc:
            raise ConfigError(f"partition scheme needs 'a' and 'b': {exc}") from exc


class PiecewiseSubspaceField(SubspaceField):
    """S constant on each part A_j of a single cube (mapped affinely to [0,1]^n)."""

    def __init__(self, family: SubspaceFamilySpec, cube: Cube):
        self.family, self.cube = family, cube
        self.n, self.d = cube.n, family.d

    def part_index(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        t = np.clip((p - self.cube.lower) / self.cube.side, 0.0, np.nextafter(1.0, 0.0))
        return self.family.part_index(t)

    def projectors(self, points) -> np.ndarray:
        return self.family.projector_stack[self.part_index(points)]


class GluedSubspaceField(SubspaceField):
    """S(x) = S_0(T_Q(x)) on every cube Q of a partition scheme."""

    def __init__(self, family: SubspaceFamilySpec, scheme: PartitionScheme, n: int = 1):
        self.family, self.scheme = family, scheme
        self.n, self.d = int(n), family.d

    def part_index(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        return self.family.part_index(self.scheme.local_coordinates(p))

    def projectors(self, points) -> np.ndarray:
        return self.family.projector_stack[self.part_index(points)]


# -------------------------------------------------------------------- oscillation

@dataclass(frozen=True)
class OmegaResult:
    omega: float
    raw: float
    best_average: float
    direction: np.ndarray
    history: tuple = ()

    def __float__(self):
        return self.omega


def _maximize_section_average(P: np.ndarray, starts: np.ndarray, max_iter: int = 500,
                              tol: float = 1e-14):
    """Multi-start fixed point b <- normalize(avg P b/|P b|) for max_b avg |P b|."""
    best = (-1.0, starts[0], ())
    for b in starts:
        b = b / np.linalg.norm(b)
        f, g = _kernels.section_step(P, b)
        hist = [f]
        for _ in range(max_iter):
            gn = np.linalg.norm(g)
            if gn == 0.0:
                break
            b = g / gn
            f_new, g = _kernels.section_step(P, b)
            if f_new < f - 1e-12:
                raise NumericalError(f"fixed-point iteration decreased the objective ({f} -> {f_new})")
            hist.append(f_new)
            done = f_new - f <= tol
            f = f_new
            if done:
                break
        if f > best[0]:
            best = (f, b, tuple(hist))
    return best


def _polish(P: np.ndarray, b: np.ndarray, f0: float):
    """BFGS on b -> avg |P b/|b||; the fixed point converges only linearly near flat optima."""
    d = b.shape[0]

    def negf(x):
        c = x[:d] + 1j * x[d:]
        nrm = np.linalg.norm(c)
        f, g = _kernels.section_step(P, c / nrm)
        grad = (g - f * c / nrm) / nrm
        return -f, -np.concatenate([grad.real, grad.imag])

    res = minimize(negf, np.concatenate([b.real, b.imag]), jac=True, method="BFGS",
                   options={"gtol": 1e-13, "maxiter": 200})
    c = res.x[:d] + 1j * res.x[d:]
    c = c / np.linalg.norm(c)
    f = _kernels.section_step(P, c)[0]
    return (f, c) if f > f0 else (f0, b)


def omega(Q: Cube, S: SubspaceField, m: int = 32, starts: int = 16) -> OmegaResult:
    """Oscillation of S on Q: sqrt(1 - G^2), G = max_{|b|=1} avg_Q |P_{S(x)} b|."""
    lat = SampleLattice(Q, m)
    P = np.ascontiguousarray(S.projectors(lat.nodes), dtype=complex)
    avgP = P.mean(axis=0)
    _, vecs = np.linalg.eigh(avgP)
    cand = np.vstack([vecs.T[::-1], sphere_directions(S.d, starts)])
    G, b, hist = _maximize_section_average(P, cand)
    G, b = _polish(P, b, G)
    raw = 1.0 - G * G
    om = float(np.sqrt(min(max(raw, 0.0), 1.0)))
    return OmegaResult(om, float(np.sign(raw) * np.sqrt(abs(raw))), float(G), b, hist)


@dataclass(frozen=True)
class OmegaInfinity:
    value: float
    per_annulus: list

    def __float__(self):
        return self.value


def omega_infinity(ell: float, S: SubspaceField, radii, m: int = 16,
                   width: float | None = None) -> OmegaInfinity:
    """Minimum of omega over grid cells of step ``ell`` in the outermost shell, with the
    per-shell minima for trend inspection."""
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii must be increasing")
    grid = Grid(ell, S.n)
    rows = []
    for r in radii:
        cells = annulus_cells(grid, r, width)
        if not cells:
            rows.append({"radius": r, "cells": 0, "min_omega": None})
            continue
        vals = [omega(q, S, m).omega for q in cells]
        k = int(np.argmin(vals))
        rows.append({"radius": r, "cells": len(cells), "min_omega": vals[k],
                     "argmin_center": list(cells[k].center)})
    if rows[-1]["cells"] == 0:
        raise ConfigError("no grid cells in the outermost annulus")
    return OmegaInfinity(rows[-1]["min_omega"], rows)


def delta_separation(family: SubspaceFamilySpec, sphere_samples: int = 256) -> float:
    """min_j min_{v in S_j, |v|=1} max_{k != j} (1 - |P_{S_k} v|)."""
    if family.N < 2:
        raise ConfigError("need at least two subspaces")
    Ps = family.projector_stack
    best = np.inf
    for j, F in enumerate(family.frames):
        others = [k for k in range(family.N) if k != j]
        r = F.shape[1]

        def objective(c, F=F, others=others):
            v = F @ c
            v = v / np.linalg.norm(v)
            return max(1.0 - np.linalg.norm(Ps[k] @ v) for k in others)

        coeffs = sphere_directions(r, sphere_samples) if r > 1 else np.ones((1, 1), dtype=complex)
        vals = np.array([objective(c) for c in coeffs])
        i0 = int(np.argmin(vals))
        local = vals[i0]
        if r > 1:
            c0 = coeffs[i0]
            x0 = np.concatenate([c0.real, c0.imag])

            def real_obj(x, r=r):
                c = x[:r] + 1j * x[r:]
                nrm = np.linalg.norm(c)
                return objective(c / nrm) if nrm > 1e-12 else 1.0

            res = minimize(real_obj, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            local = min(local, float(res.fun))
        best = min(best, local)
    return float(min(max(best, 0.0), 1.0))


def omega_lower_bound_check(Q: Cube, family: SubspaceFamilySpec, m: int = 32,
                            sphere_samples: int = 256) -> tuple[float, float]:
    """(omega, sqrt(delta * min_j eta_j)) for the piecewise-constant field of ``family`` on Q."""
    S = PiecewiseSubspaceField(family, Q)
    om = omega(Q, S, m).omega
    if family.N < 2:
        return om, 0.0
    lat = SampleLattice(Q, m)
    parts = S.part_index(lat.nodes)
    eta = min(np.mean(parts == j) for j in range(family.N))
    bound = float(np.sqrt(delta_separation(family, sphere_samples) * eta))
    if om < bound - 1e-6:
        raise NumericalError(f"oscillation {om} below the separation bound {bound}")
    return om, bound


# -------------------------------------------------------------------- degenerate potentials

GROWTH = {
    "power": lambda r2, p: r2 ** (p / 2.0),
    "log": lambda r2, p: np.log(2.0 + r2),
}


class DegeneratePotential(Potential):
    """V(x) = growth(x) * P_{L(x)}, zero on S(x) and growth(x) on its complement L(x)."""

    def __init__(self, field: GluedSubspaceField, growth: str = "power", p: float = 2.0):
        if growth not in GROWTH:
            raise ConfigError(f"unknown growth {growth!r}; known: {sorted(GROWTH)}")
        self.field, self.growth, self.p = field, growth, float(p)
        self.n, self.d = field.n, field.d

    @property
    def subspace_field(self) -> SubspaceField:
        return self.field

    def growth_values(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        return GROWTH[self.growth]((p ** 2).sum(axis=1), self.p)

    def evaluate(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        L = self.field.complement_projectors(p)
        out = self.growth_values(p)[:, None, None] * L
        if np.abs(out.imag).max(initial=0.0) == 0.0:
            out = out.real
        return out


def build_degenerate_potential(scheme: PartitionScheme, family: SubspaceFamilySpec,
                               growth: str = "power", p: float = 2.0, n: int = 1) -> DegeneratePotential:
    if not family.trivial_intersection():
        raise ConfigError("the subspaces have a non-trivial common intersection")
    if growth == "power" and p <= 0:
        raise ConfigError("power growth needs p > 0 so that growth -> infinity")
    return DegeneratePotential(GluedSubspaceField(family, scheme, n), growth, p)


def _restricted_min_eig(V: np.ndarray, PL: np.ndarray) -> np.ndarray:
    """lambda(V(x)|_{L(x)}) for stacks of V and complement projectors."""
    out = np.empty(V.shape[0])
    w, vecs = np.linalg.eigh(PL)
    for i in range(V.shape[0]):
        F = vecs[i][:, w[i] > 0.5]
        if F.shape[1] == 0:
            out[i] = np.inf
            continue
        out[i] = np.linalg.eigvalsh(F.conj().T @ V[i] @ F)[0]
    return out


def theorem13_check(V: Potential, S: SubspaceField, ells, radii, m: int = 16,
                    lambda_threshold: float = 1.0, omega_threshold: float = 1.0,
                    width: float | None = None) -> CriterionVerdict:
    """Sampled check of (i) lambda(V|_L) -> infinity and (ii) ell^{-1} omega_inf(ell) growing.

    Raises HypothesisError when S and L = S^perp are not V-invariant at a node.
    """
    ells = [float(e) for e in ells]
    radii = [float(r) for r in radii]
    if (V.n, V.d) != (S.n, S.d):
        raise ConfigError("potential and subspace field shapes differ")
    rows_i, minima = [], []
    grid = Grid(min(ells), V.n)
    for r in radii:
        cells = annulus_cells(grid, r, width)
        if not cells:
            rows_i.append({"radius": r, "min_lambda_L": None})
            continue
        pts = np.vstack([SampleLattice(q, 4).nodes for q in cells])
        vals = V.evaluate(pts)
        PS = S.projectors(pts)
        PL = np.eye(V.d)[None] - PS
        leak = op_norms(PL @ vals @ PS)
        lim = 1e-9 * (1.0 + op_norms(vals))
        bad = np.nonzero(leak > lim)[0]
        if bad.size:
            node = pts[bad[0]]
            raise HypothesisError(f"S/L split is not V-invariant at node {node.tolist()}", node=node)
        lamL = _restricted_min_eig(vals, PL)
        finite = lamL[np.isfinite(lamL)]
        if finite.size and finite.min() <= 0:
            k = int(np.argmin(lamL))
            raise HypothesisError(f"V vanishes on L(x) at node {pts[k].tolist()}", node=pts[k])
        mn = float(finite.min()) if finite.size else np.inf
        minima.append(mn)
        rows_i.append({"radius": r, "min_lambda_L": mn})
    rows_ii, scaled = [], []
    for ell in ells:
        oi = omega_infinity(ell, S, [radii[-1]], m, width)
        scaled.append(oi.value / ell)
        rows_ii.append({"ell": ell, "omega_inf": oi.value, "scaled": oi.value / ell})
    ok_i = len(minima) == len(radii) and trend_status(minima, lambda_threshold)
    order = np.argsort(ells)[::-1]
    scaled_sorted = [scaled[i] for i in order]
    ok_ii = trend_status(scaled_sorted, omega_threshold)
    status = Status.SATISFIED_SAMPLED if (ok_i and ok_ii) else Status.INCONCLUSIVE
    witnesses = [Witness(minima[-1] if minima else float("nan"), label="outer min lambda(V|L)"),
                 Witness(scaled_sorted[-1], label="smallest-ell scaled oscillation")]
    return CriterionVerdict(status, witnesses,
                            {"ells": ells, "radii": radii, "m": m,
                             "lambda_threshold": lambda_threshold, "omega_threshold": omega_threshold},
                            [{"part": "i", **r} for r in rows_i] + [{"part": "ii", **r} for r in rows_ii],
                            notes=[f"condition (i) trend: {ok_i}", f"condition (ii) trend: {ok_ii}"])


def load_family(path) -> SubspaceFamilySpec:
    with open(path) as fh:
        return SubspaceFamilySpec.from_dict(json.load(fh))
