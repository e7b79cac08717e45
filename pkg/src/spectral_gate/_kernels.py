"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba path is used when numba imports and ``SPECTRAL_GATE_NUMBA`` is not
set to ``0``.  Both flavours are always importable under ``*_numpy`` /
``*_numba`` names so tests and ``benchmarks/`` can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SPECTRAL_GATE_NUMBA", "1") != "0"
BACKEND = "numba" if USE_NUMBA else "numpy"


def set_threads(count: int | None) -> None:
    if count and HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------- 2x2 Hermitian eigenvalues

def herm2_eigvals_numpy(a, b, c):
    """Eigenvalues (lam, mu) of [[a, b], [conj(b), c]] for arrays a, c real and b complex.

    The root of larger magnitude comes from the quadratic formula without cancellation;
    the other is det divided by it, which keeps full relative accuracy when |lam| << |mu|.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    bb = np.abs(b) ** 2
    tr = a + c
    root = np.sqrt((a - c) ** 2 + 4.0 * bb)
    det = a * c - bb
    pos = tr >= 0.0
    big = np.where(pos, 0.5 * (tr + root), 0.5 * (tr - root))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big != 0.0, det / np.where(big != 0.0, big, 1.0), 0.0)
    lam = np.where(pos, small, big)
    mu = np.where(pos, big, small)
    return lam, mu


def _herm2_eigvals_loop(a, b2, c, lam, mu):
    for i in range(a.shape[0]):
        tr = a[i] + c[i]
        root = np.sqrt((a[i] - c[i]) ** 2 + 4.0 * b2[i])
        det = a[i] * c[i] - b2[i]
        if tr >= 0.0:
            big = 0.5 * (tr + root)
        else:
            big = 0.5 * (tr - root)
        small = det / big if big != 0.0 else 0.0
        if tr >= 0.0:
            lam[i] = small
            mu[i] = big
        else:
            lam[i] = big
            mu[i] = small


if HAVE_NUMBA:
    _herm2_eigvals_jit = njit(cache=True)(_herm2_eigvals_loop)

    def herm2_eigvals_numba(a, b, c):
        a = np.ascontiguousarray(np.asarray(a, dtype=float).ravel())
        c = np.ascontiguousarray(np.asarray(c, dtype=float).ravel())
        b2 = np.ascontiguousarray((np.abs(np.asarray(b)) ** 2).astype(float).ravel())
        lam = np.empty_like(a)
        mu = np.empty_like(a)
        _herm2_eigvals_jit(a, b2, c, lam, mu)
        return lam, mu


# ---------------------------------------------------------------- oscillation fixed point

def section_step_numpy(P, b):
    """Return (mean_x |P(x) b|, mean_x P(x) b / |P(x) b|) with zero contributions where P b = 0."""
    y = np.einsum("nij,j->ni", P, b)
    r = np.linalg.norm(y, axis=1)
    safe = r > 1e-300
    g = (y[safe] / r[safe, None]).sum(axis=0) / P.shape[0]
    return float(r.mean()), g


def _section_step_loop(P, b):
    n, d, _ = P.shape
    g = np.zeros(d, dtype=np.complex128)
    y = np.empty(d, dtype=np.complex128)
    total = 0.0
    for k in range(n):
        s = 0.0
        for i in range(d):
            acc = 0j
            for j in range(d):
                acc += P[k, i, j] * b[j]
            y[i] = acc
            s += acc.real * acc.real + acc.imag * acc.imag
        r = np.sqrt(s)
        total += r
        if r > 1e-300:
            for i in range(d):
                g[i] += y[i] / r
    return total / n, g / n


if HAVE_NUMBA:
    _section_step_jit = njit(cache=True)(_section_step_loop)

    def section_step_numba(P, b):
        f, g = _section_step_jit(np.ascontiguousarray(P, dtype=np.complex128),
                                 np.ascontiguousarray(b, dtype=np.complex128))
        return float(f), g


# ---------------------------------------------------------------- masked graph Laplacian

def masked_laplacian_numpy(u, free):
    """Unscaled (2n+1)-point graph Laplacian of ``u*free`` restricted to ``free`` nodes.

    Nodes outside the array are Dirichlet zeros.
    """
    v = u * free
    out = 2 * v.ndim * v
    for ax in range(v.ndim):
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        out[tuple(lo)] -= v[tuple(hi)]
        out[tuple(hi)] -= v[tuple(lo)]
    return out * free


def _lap1(v, free, out):
    n0 = v.shape[0]
    for i in range(n0):
        if free[i] == 0.0:
            out[i] = 0.0
            continue
        s = 2.0 * v[i]
        if i > 0:
            s -= v[i - 1] * free[i - 1]
        if i < n0 - 1:
            s -= v[i + 1] * free[i + 1]
        out[i] = s


def _lap2(v, free, out):
    n0, n1 = v.shape
    for i in range(n0):
        for j in range(n1):
            if free[i, j] == 0.0:
                out[i, j] = 0.0
                continue
            s = 4.0 * v[i, j]
            if i > 0:
                s -= v[i - 1, j] * free[i - 1, j]
            if i < n0 - 1:
                s -= v[i + 1, j] * free[i + 1, j]
            if j > 0:
                s -= v[i, j - 1] * free[i, j - 1]
            if j < n1 - 1:
                s -= v[i, j + 1] * free[i, j + 1]
            out[i, j] = s


def _lap3(v, free, out):
    n0, n1, n2 = v.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if free[i, j, k] == 0.0:
                    out[i, j, k] = 0.0
                    continue
                s = 6.0 * v[i, j, k]
                if i > 0:
                    s -= v[i - 1, j, k] * free[i - 1, j, k]
                if i < n0 - 1:
                    s -= v[i + 1, j, k] * free[i + 1, j, k]
                if j > 0:
                    s -= v[i, j - 1, k] * free[i, j - 1, k]
                if j < n1 - 1:
                    s -= v[i, j + 1, k] * free[i, j + 1, k]
                if k > 0:
                    s -= v[i, j, k - 1] * free[i, j, k - 1]
                if k < n2 - 1:
                    s -= v[i, j, k + 1] * free[i, j, k + 1]
                out[i, j, k] = s


if HAVE_NUMBA:
    _lap_jit = {1: njit(cache=True)(_lap1), 2: njit(cache=True)(_lap2), 3: njit(cache=True)(_lap3)}

    def masked_laplacian_numba(u, free):
        if u.ndim not in _lap_jit:
            return masked_laplacian_numpy(u, free)
        out = np.empty_like(u)
        _lap_jit[u.ndim](np.ascontiguousarray(u), np.ascontiguousarray(free), out)
        return out


if USE_NUMBA:
    herm2_eigvals = herm2_eigvals_numba
    section_step = section_step_numba
    masked_laplacian = masked_laplacian_numba
else:
    herm2_eigvals = herm2_eigvals_numpy
    section_step = section_step_numpy
    masked_laplacian = masked_laplacian_numpy
