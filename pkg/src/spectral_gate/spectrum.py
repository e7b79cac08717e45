"""Finite-difference Dirichlet discretization of -Laplace + V on boxes, eigenvalue
counting on expanding boxes, and the good/bad cube classifier for 2x2 potentials."""
from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConfigError, ConvergenceError, NumericalError
from .geometry import Cube, SampleLattice
from .linalg import extreme_eigenvalues, min_eigenvalues, op_norms
from .potential import FunctionPotential, Potential
from .verdict import CriterionVerdict, Status, Witness, _jsonable

DENSE_LIMIT = 2000
STABLE_RATIO = 1.05
GROWTH_RATIO = 1.5
COUNTING_CAVEAT = ("eigenvalue-count stabilization on Dirichlet boxes is consistent with, "
                   "but not equivalent to, discreteness of the spectrum")


@dataclass
class DiscreteOperator:
    L: float
    h: float
    n: int
    d: int
    matrix: sp.csr_matrix
    nodes: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def points_per_axis(self) -> int:
        return int(round(2 * self.L / self.h)) - 1

    def energy(self, psi) -> float:
        """psi^H A psi h^n, the discrete energy form."""
        psi = np.asarray(psi).ravel()
        return float(np.real(np.vdot(psi, self.matrix @ psi)) * self.h ** self.n)


def _laplacian_1d(k: int, h: float) -> sp.csr_matrix:
    main = np.full(k, 2.0)
    off = np.full(k - 1, -1.0)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h ** 2


def assemble(V: Potential, L: float, h: float) -> DiscreteOperator:
    """-Laplace_h (componentwise, (2n+1)-point) plus the block-diagonal V(node) on the
    open box (-L, L)^n, Dirichlet outside."""
    M = 2.0 * L / h
    if abs(M - round(M)) > 1e-9 * M or M < 2:
        raise ConfigError(f"mesh width {h} must divide 2L = {2 * L}")
    k = int(round(M)) - 1
    n, d = V.n, V.d
    axis = -L + h * np.arange(1, k + 1)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)
    lap1 = _laplacian_1d(k, h)
    eye1 = sp.identity(k, format="csr")
    lap = sp.csr_matrix((k ** n, k ** n))
    for ax in range(n):
        term = None
        for j in range(n):
            f = lap1 if j == ax else eye1
            term = f if term is None else sp.kron(term, f, format="csr")
        lap = lap + term
    vals = V.evaluate(nodes)
    dtype = complex if np.iscomplexobj(vals) else float
    blocks = sp.bsr_matrix((vals.astype(dtype), np.arange(len(nodes)), np.arange(len(nodes) + 1)),
                           shape=(len(nodes) * d, len(nodes) * d)).tocsr()
    A = (sp.kron(lap, sp.identity(d), format="csr") + blocks).tocsr()
    warnings = []
    lam = min_eigenvalues(vals)
    tol = 1e-9 * (1.0 + op_norms(vals))
    for i in np.nonzero(lam < -tol)[0][:10]:
        warnings.append(Witness(float(lam[i]), tuple(nodes[i]), label="V not >= 0 at node"))
    return DiscreteOperator(float(L), float(h), n, d, A, nodes, warnings)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E: float | None = None
    L_values: list = field(default_factory=list)
    counts: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        out = [None]
        for a, b in zip(self.counts, self.counts[1:]):
            out.append(b / a if a > 0 else (np.inf if b > 0 else 1.0))
        return out

    def rows(self) -> list[dict]:
        return [{"L": L, "E": self.E, "N": N, "ratio": r}
                for L, N, r in zip(self.L_values, self.counts, self.ratios)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["L", "E", "N", "ratio"])
        for r in self.rows():
            w.writerow([r["L"], r["E"], r["N"], "" if r["ratio"] is None else r["ratio"]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(_jsonable({"eigenvalues": self.eigenvalues, "E": self.E, "rows": self.rows()}),
                          sort_keys=True)


def _dense_eigs(A, k=None, cap=None) -> np.ndarray:
    dense = A.toarray()
    if cap is not None:
        return sla.eigh(dense, eigvals_only=True, subset_by_value=(-np.inf, cap))
    hi = min(k, dense.shape[0]) - 1
    return sla.eigh(dense, eigvals_only=True, subset_by_index=(0, hi))


def _shift(A) -> float:
    diag = A.diagonal().real
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(min(0.0, (diag - radius).min()) - 1.0)


def _lanczos(A, k: int) -> np.ndarray:
    try:
        vals = eigsh(A, k=k, sigma=_shift(A), which="LM", tol=1e-12, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge for k={k}", iterations=k) from exc
    return np.sort(vals.real)


def lowest_eigenvalues(op: DiscreteOperator, k: int | None = None, cap: float | None = None,
                       method: str = "auto") -> SpectralReport:
    """Smallest k eigenvalues, or all eigenvalues <= cap."""
    if k is None and cap is None:
        raise ConfigError("give k >= 1 or an energy cap")
    if k is not None and k < 1:
        raise ConfigError("k must be >= 1")
    A, size = op.matrix, op.size
    use_dense = method == "dense" or (method == "auto" and size <= DENSE_LIMIT)
    if method not in ("auto", "dense", "lanczos"):
        raise ConfigError(f"unknown eigensolver method {method!r}")
    if use_dense:
        vals = _dense_eigs(A, k, cap)
    elif cap is None:
        vals = _lanczos(A, min(k, size - 2)) if k < size - 1 else _dense_eigs(A, k)
    else:
        kk = 16
        while True:
            if kk >= size - 1:
                vals = _dense_eigs(A, cap=cap)
                break
            vals = _lanczos(A, kk)
            if vals[-1] > cap:
                vals = vals[vals <= cap]
                break
            kk *= 2
    return SpectralReport(np.asarray(vals), cap)


def count_eigenvalues(V: Potential, E: float, L_sequence, h: float, method: str = "auto") -> SpectralReport:
    Ls = [float(L) for L in L_sequence]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ConfigError("L_sequence must be increasing")
    counts, last = [], np.zeros(0)
    for L in Ls:
        rep = lowest_eigenvalues(assemble(V, L, h), cap=E, method=method)
        counts.append(int(rep.eigenvalues.size))
        last = rep.eigenvalues
    return SpectralReport(last, float(E), Ls, counts)


def discreteness_probe(V: Potential, E: float, L_sequence, h: float,
                       method: str = "auto") -> CriterionVerdict:
    """Classify N(E; L) over a doubling L-sequence: growth >= 50% per step suggests
    essential spectrum below E, a last-step ratio <= 1.05 suggests discreteness."""
    if len(list(L_sequence)) < 2:
        raise ConfigError("need at least two box sizes")
    rep = count_eigenvalues(V, E, L_sequence, h, method)
    ratios = [r for r in rep.ratios[1:]]
    if all(r >= GROWTH_RATIO for r in ratios):
        status = Status.ESSENTIAL
    elif rep.counts[-1] > 0 and ratios[-1] <= STABLE_RATIO:
        status = Status.DISCRETE
    else:
        status = Status.INCONCLUSIVE
    wit = [Witness(float(N), label=f"N(E={E}; L={L})") for L, N in zip(rep.L_values, rep.counts)]
    return CriterionVerdict(status, wit, {"E": E, "L_sequence": rep.L_values, "h": h,
                                          "stable_ratio": STABLE_RATIO, "growth_ratio": GROWTH_RATIO},
                            rep.rows(), notes=[COUNTING_CAVEAT])


def min_eigenvalue_potential(V: Potential) -> FunctionPotential:
    """Scalar potential x -> lambda(V(x))."""
    return FunctionPotential(V.n, 1, lambda p: min_eigenvalues(V.evaluate(p)), name="lambda(V)")


@dataclass
class Comparison:
    vector: CriterionVerdict
    scalar: CriterionVerdict

    @property
    def inconsistent(self) -> bool:
        """True when H_lambda looks discrete but H_V does not, which the elementary
        comparison between the two energy forms forbids."""
        return self.scalar.status is Status.DISCRETE and self.vector.status is Status.ESSENTIAL

    def to_dict(self) -> dict:
        return {"H_V": self.vector.to_dict(), "H_lambda": self.scalar.to_dict(),
                "inconsistent": self.inconsistent}


def compare_HV_Hlambda(V: Potential, E: float, L_sequence, h: float, method: str = "auto") -> Comparison:
    vec = discreteness_probe(V, E, L_sequence, h, method)
    sca = discreteness_probe(min_eigenvalue_potential(V), E, L_sequence, h, method)
    return Comparison(vec, sca)


# -------------------------------------------------------------------- good / bad cubes

class ClassificationError(NumericalError):
    pass


@dataclass(frozen=True)
class CubeClassification:
    parent: Cube
    sub: Cube
    kind: str
    c: float

    def to_dict(self) -> dict:
        return {"parent": self.parent.to_dict(), "sub": self.sub.to_dict(), "kind": self.kind, "c": self.c}


def _tr_det(V: Potential, points):
    vals = V.evaluate(points)
    if vals.shape[1:] != (2, 2):
        raise ConfigError("classify_cube needs a 2x2 potential")
    if np.iscomplexobj(vals) and np.abs(vals.imag).max() > 0:
        raise ConfigError("classify_cube needs a real symmetric potential")
    vals = vals.real
    tr = vals[:, 0, 0] + vals[:, 1, 1]
    det = vals[:, 0, 0] * vals[:, 1, 1] - vals[:, 0, 1] * vals[:, 1, 0]
    lam, mu = extreme_eigenvalues(vals)
    return tr, det, lam, mu


def cube_kind(V: Potential, Q: Cube, m: int, tol: float = 1e-12) -> str | None:
    """'good', 'bad', or None when the sampled data do not pin down a kind on Q."""
    pts = SampleLattice(Q, m).nodes
    tr, det, lam, mu = _tr_det(V, pts)
    scale = tol * np.maximum(tr ** 2, 1e-300)
    a = tr ** 2 / 8.0 - det
    b = tr ** 2 / 4.0 - det
    if not np.all(b > scale):
        return None
    if np.all(a < -scale):
        return "good"
    if np.all(a > scale):
        return "bad" if mu.max() <= 4.0 * mu.min() else "bad-unsettled"
    return None


def classify_cube(V: Potential, Q: Cube, m: int = 16, max_depth: int = 6) -> CubeClassification:
    """Breadth-first dyadic descent for a subcube where the two eigenvalues are
    comparable (good) or separated with nearly constant top eigenvalue (bad)."""
    queue = deque([(Q, 0)])
    while queue:
        cube, depth = queue.popleft()
        kind = cube_kind(V, cube, m)
        if kind in ("good", "bad"):
            return CubeClassification(Q, cube, kind, cube.side / Q.side)
        if depth < max_depth:
            queue.extend((ch, depth + 1) for ch in cube.children())
    raise ClassificationError(f"no admissible subcube of {Q} within depth {max_depth} "
                              "(sampling too coarse or eigenvalues coincide)")


def validate_classification(V: Potential, result: CubeClassification, m: int) -> bool:
    """Re-check the defining inequalities of the classification on an m-point lattice."""
    pts = SampleLattice(result.sub, m).nodes
    _, _, lam, mu = _tr_det(V, pts)
    if not np.all(lam < mu):
        return False
    if result.kind == "good":
        return bool(np.all(mu / 8.0 <= lam))
    return bool(np.all(2.0 * lam <= mu) and mu.max() <= 4.0 * mu.min())
