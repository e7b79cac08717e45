"""Matrix-valued potentials: exact polynomials, generic callables, lattice samples."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError
from .geometry import Cube, Grid, SampleLattice, annulus_cells, monomial_integral
from .linalg import min_eigenvalue, op_norms
from .verdict import CriterionVerdict, Status, Witness, trend_status

HERMITIAN_TOL = 1e-12


def _as_points(points, n: int) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1, 1)
    elif p.ndim == 1:
        p = p.reshape(1, -1) if p.shape[0] == n else p.reshape(-1, 1)
    if p.shape[1] != n:
        raise DimensionError(f"points have dimension {p.shape[1]}, potential expects {n}")
    return p


class Potential:
    """Anything with ``n``, ``d`` and a vectorized ``evaluate(points) -> (N, d, d)``."""

    n: int
    d: int

    def evaluate(self, points) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise DimensionError(f"point has dimension {x.shape[0]}, potential expects {self.n}")
        return self.evaluate(x[None, :])[0]

    def integrate(self, cube: Cube, m: int = 64) -> np.ndarray:
        lat = SampleLattice(cube, m)
        return self.evaluate(lat.nodes).sum(axis=0) * lat.weight

    def direction(self, u) -> "FunctionPotential":
        """The scalar potential x -> (V(x)u, u)."""
        u = np.asarray(u, dtype=complex)
        u = u / np.linalg.norm(u)

        def f(p, _V=self, _u=u):
            vals = _V.evaluate(p)
            return np.einsum("i,nij,j->n", _u.conj(), vals, _u).real

        return FunctionPotential(self.n, 1, f)


class FunctionPotential(Potential):
    """Wraps ``func(points (N, n)) -> (N, d, d)`` (or ``(N,)`` when d == 1)."""

    def __init__(self, n: int, d: int, func, name: str = ""):
        self.n, self.d, self.func, self.name = int(n), int(d), func, name

    def evaluate(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        vals = np.asarray(self.func(p))
        if self.d == 1 and vals.ndim == 1:
            vals = vals[:, None, None]
        if vals.shape != (p.shape[0], self.d, self.d):
            raise DimensionError(f"potential function returned shape {vals.shape}")
        return vals


class MatrixPolynomial(Potential):
    """d x d Hermitian-valued polynomial in n real variables.

    ``coefficients`` maps exponent tuples to d x d Hermitian matrices.
    """

    def __init__(self, n: int, d: int, coefficients: dict):
        self.n, self.d = int(n), int(d)
        if self.n < 1 or self.d < 1:
            raise ConfigError("n and d must be >= 1")
        coeffs = {}
        for exps, mat in coefficients.items():
            exps = tuple(int(a) for a in np.atleast_1d(exps))
            if len(exps) != self.n or any(a < 0 for a in exps):
                raise ConfigError(f"bad exponent tuple {exps} for n={self.n}")
            mat = np.atleast_2d(np.asarray(mat))
            if mat.shape != (self.d, self.d):
                raise DimensionError(f"coefficient for {exps} has shape {mat.shape}")
            scale = 1.0 + np.abs(mat).max()
            if np.abs(mat - mat.conj().T).max() > HERMITIAN_TOL * scale:
                raise ConfigError(f"coefficient for {exps} is not Hermitian")
            mat = 0.5 * (mat + mat.conj().T)
            if np.iscomplexobj(mat) and np.abs(mat.imag).max() == 0.0:
                mat = mat.real
            if np.any(mat != 0):
                coeffs[exps] = coeffs.get(exps, 0) + mat
        self.coefficients = dict(sorted(coeffs.items()))

    @property
    def is_real(self) -> bool:
        return all(not np.iscomplexobj(c) for c in self.coefficients.values())

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coefficients), default=0)

    @property
    def dtype(self):
        return float if self.is_real else complex

    def evaluate(self, points) -> np.ndarray:
        p = _as_points(points, self.n)
        out = np.zeros((p.shape[0], self.d, self.d), dtype=self.dtype)
        for exps, mat in self.coefficients.items():
            mono = np.prod(p ** np.asarray(exps, dtype=float), axis=1)
            out += mono[:, None, None] * mat
        return out

    def integrate(self, cube: Cube, m: int | None = None) -> np.ndarray:
        """Exact integral over the cube, term by term."""
        if cube.n != self.n:
            raise DimensionError("cube dimension does not match the potential")
        out = np.zeros((self.d, self.d), dtype=self.dtype)
        for exps, mat in self.coefficients.items():
            out += monomial_integral(cube, exps) * mat
        return out

    def normalized_integral(self, cube: Cube) -> np.ndarray:
        """M(Q) = side^(2-n) * integral over Q."""
        return cube.side ** (2 - self.n) * self.integrate(cube)

    def derivative(self, j: int) -> "MatrixPolynomial":
        coeffs = {}
        for exps, mat in self.coefficients.items():
            if exps[j] > 0:
                new = list(exps)
                new[j] -= 1
                coeffs[tuple(new)] = coeffs.get(tuple(new), 0) + exps[j] * mat
        return MatrixPolynomial(self.n, self.d, coeffs)

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        if (other.n, other.d) != (self.n, self.d):
            raise DimensionError("cannot add polynomials of different shape")
        coeffs = dict(self.coefficients)
        for e, m in other.coefficients.items():
            coeffs[e] = coeffs.get(e, 0) + m
        return MatrixPolynomial(self.n, self.d, coeffs)

    def scaled(self, factor: float) -> "MatrixPolynomial":
        return MatrixPolynomial(self.n, self.d, {e: factor * m for e, m in self.coefficients.items()})

    def conjugated(self, U) -> "MatrixPolynomial":
        """x -> U^H V(x) U."""
        U = np.asarray(U)
        return MatrixPolynomial(self.n, self.d, {e: U.conj().T @ m @ U for e, m in self.coefficients.items()})

    def is_zero(self) -> bool:
        return not self.coefficients

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        terms = []
        for exps, mat in self.coefficients.items():
            mat = np.asarray(mat, dtype=complex)
            terms.append({"exponents": list(exps),
                          "matrix_re": mat.real.tolist(),
                          "matrix_im": mat.imag.tolist()})
        return {"n": self.n, "d": self.d, "terms": terms}

    @classmethod
    def from_dict(cls, doc: dict) -> "MatrixPolynomial":
        try:
            n, d = int(doc["n"]), int(doc["d"])
            coeffs = {}
            for t in doc["terms"]:
                re = np.asarray(t["matrix_re"], dtype=float)
                im = np.asarray(t.get("matrix_im", np.zeros_like(re)), dtype=float)
                mat = re + 1j * im if np.any(im) else re
                e = tuple(int(a) for a in t["exponents"])
                coeffs[e] = coeffs.get(e, 0) + mat
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed potential document: {exc}") from exc
        return cls(n, d, coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MatrixPolynomial":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"potential JSON does not parse: {exc}") from exc

    @classmethod
    def load(cls, path) -> "MatrixPolynomial":
        return cls.from_json(Path(path).read_text())

    def __repr__(self):
        return f"MatrixPolynomial(n={self.n}, d={self.d}, terms={len(self.coefficients)})"


@dataclass(frozen=True)
class SampledPotential:
    """Values of a potential at the nodes of a sample lattice."""

    lattice: SampleLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[0] != self.lattice.size or v.shape[1] != v.shape[2]:
            raise DimensionError("value count must equal node count, each value d x d")
        if np.abs(v - np.swapaxes(v, 1, 2).conj()).max() > HERMITIAN_TOL * (1 + np.abs(v).max()):
            raise ConfigError("sampled values must be Hermitian")

    @classmethod
    def sample(cls, V: Potential, lattice: SampleLattice) -> "SampledPotential":
        return cls(lattice, V.evaluate(lattice.nodes))

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def integral(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.lattice.weight

    def average(self) -> np.ndarray:
        return self.values.mean(axis=0)


def integrate(V: Potential, cube: Cube, m: int = 64) -> np.ndarray:
    """Integral of V over the cube; exact for polynomials, midpoint quadrature otherwise."""
    return V.integrate(cube) if isinstance(V, MatrixPolynomial) else V.integrate(cube, m)


# -------------------------------------------------------------------- gallery

def _w1_coeffs(n: int, axis: int) -> dict:
    def e(p):
        t = [0] * n
        t[axis] = p
        return tuple(t)

    return {e(4): [[1.0, 0.0], [0.0, 0.0]],
            e(5): [[0.0, 1.0], [1.0, 0.0]],
            e(6): [[0.0, 0.0], [0.0, 1.0]]}


def _square_norm_coeffs(n: int, mat) -> dict:
    out = {}
    for j in range(n):
        e = [0] * n
        e[j] = 2
        out[tuple(e)] = np.asarray(mat, dtype=float)
    return out


GALLERY = {
    "W0": "[[1, x], [x, x^2]] (n=1, d=2): rank one everywhere, det = 0",
    "W1": "x^4 [[1, x], [x, x^2]] (n=1, d=2)",
    "Wn": "sum_j W1(x_j) (d=2, any n)",
    "Wnd": "block-diag(Wn(x), |x|^2 I_{d-2}) (d>=3)",
    "harmonic": "|x|^2 I_d",
    "diag-powers": "diag(sum_j x_j^p_1, ..., sum_j x_j^p_d) for even powers p (param 'powers')",
}


def gallery(name: str, n: int = 1, d: int | None = None, params: dict | None = None) -> MatrixPolynomial:
    params = dict(params or {})
    if name == "W0":
        if n != 1 or d not in (None, 2):
            raise ConfigError("W0 is defined for n=1, d=2")
        return MatrixPolynomial(1, 2, {(0,): [[1.0, 0.0], [0.0, 0.0]],
                                       (1,): [[0.0, 1.0], [1.0, 0.0]],
                                       (2,): [[0.0, 0.0], [0.0, 1.0]]})
    if name == "W1":
        if n != 1 or d not in (None, 2):
            raise ConfigError("W1 is defined for n=1, d=2")
        return MatrixPolynomial(1, 2, _w1_coeffs(1, 0))
    if name == "Wn":
        if d not in (None, 2) or n < 1:
            raise ConfigError("Wn is defined for d=2, n>=1")
        total = MatrixPolynomial(n, 2, {})
        for j in range(n):
            total = total + MatrixPolynomial(n, 2, _w1_coeffs(n, j))
        return total
    if name == "Wnd":
        if d is None or d < 3 or n < 1:
            raise ConfigError("Wnd requires d >= 3")
        coeffs = {}
        for e, m in gallery("Wn", n, 2).coefficients.items():
            big = np.zeros((d, d))
            big[:2, :2] = m
            coeffs[e] = big
        lower = np.zeros((d, d))
        lower[2:, 2:] = np.eye(d - 2)
        for e, m in _square_norm_coeffs(n, lower).items():
            coeffs[e] = coeffs.get(e, 0) + m
        return MatrixPolynomial(n, d, coeffs)
    if name == "harmonic":
        d = 1 if d is None else d
        return MatrixPolynomial(n, d, _square_norm_coeffs(n, np.eye(d)))
    if name == "diag-powers":
        powers = [int(p) for p in params.get("powers", [2, 4])]
        if d is not None and d != len(powers):
            raise ConfigError("diag-powers: d must equal the number of powers")
        if any(p < 0 or p % 2 for p in powers):
            raise ConfigError("diag-powers needs even non-negative powers")
        d = len(powers)
        coeffs: dict = {}
        for i, p in enumerate(powers):
            for j in range(n):
                e = [0] * n
                e[j] = p
                mat = np.zeros((d, d))
                mat[i, i] = 1.0
                coeffs[tuple(e)] = coeffs.get(tuple(e), 0) + mat
        return MatrixPolynomial(n, d, coeffs)
    raise ConfigError(f"unknown gallery potential {name!r}; known: {sorted(GALLERY)}")


# -------------------------------------------------------------------- criteria

def min_eig_integral_scan(V: Potential, ell: float, radii, threshold: float = 1.0,
                          width: float | None = None, m: int = 32) -> CriterionVerdict:
    """Per-annulus minimum of lambda(integral of V over grid cells of side ``ell``).

    A finite scan can support but never refute divergence, so the verdict is either
    satisfied (sampled) or inconclusive.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ConfigError("radii must be non-empty")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii must be strictly increasing")
    grid = Grid(ell, V.n)
    table, witnesses, minima = [], [], []
    for r in radii:
        cells = annulus_cells(grid, r, width)
        if not cells:
            table.append({"radius": r, "cells": 0, "min_value": None})
            continue
        vals = [min_eigenvalue(integrate(V, q, m)) for q in cells]
        k = int(np.argmin(vals))
        best = cells[k]
        cnorm = float(np.linalg.norm(best.center))
        minima.append(vals[k])
        table.append({"radius": r, "cells": len(cells), "min_value": vals[k],
                      "argmin_center": list(best.center),
                      "ratio_to_r2": vals[k] / cnorm ** 2 if cnorm > 0 else None})
        witnesses.append(Witness(vals[k], best.center, best.side, label=f"annulus r={r}"))
    ok = len(minima) == len(radii) and trend_status(minima, threshold)
    return CriterionVerdict(Status.SATISFIED_SAMPLED if ok else Status.INCONCLUSIVE, witnesses,
                            {"ell": ell, "radii": radii, "threshold": threshold,
                             "width": grid.step if width is None else width}, table)


def grad_norm_inequality_check(V: MatrixPolynomial, cubes, m: int = 32) -> float:
    """Empirical constant max_{Q,j} side^2 int_Q |d_j V|_op^2 / int_Q |V|_op^2."""
    if V.is_zero():
        raise ConfigError("V must be non-zero")
    derivs = [V.derivative(j) for j in range(V.n)]
    worst = 0.0
    for q in cubes:
        lat = SampleLattice(q, m)
        denom = (op_norms(V.evaluate(lat.nodes)) ** 2).sum() * lat.weight
        for dV in derivs:
            num = (op_norms(dV.evaluate(lat.nodes)) ** 2).sum() * lat.weight if not dV.is_zero() else 0.0
            if denom == 0.0:
                if num > 0.0:
                    raise NumericalError(f"zero denominator with non-zero derivative on cube {q}")
                continue
            worst = max(worst, q.side ** 2 * num / denom)
    return float(worst)
