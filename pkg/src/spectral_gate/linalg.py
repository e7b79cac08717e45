"""Pointwise spectral data of Hermitian matrices (single and batched)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class PointSpectrum:
    """Ascending eigenvalues and the matching orthonormal eigenvector frame (columns)."""

    eigenvalues: np.ndarray
    frame: np.ndarray

    @property
    def smallest(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> np.ndarray:
        return (self.frame * self.eigenvalues) @ self.frame.conj().T


def hermitian_part(A):
    A = np.asarray(A)
    return 0.5 * (A + np.swapaxes(A, -1, -2).conj())


def point_spectrum(A) -> PointSpectrum:
    w, v = np.linalg.eigh(hermitian_part(A))
    return PointSpectrum(w, v)


def extreme_eigenvalues(As):
    """Batched (lambda, mu) for a stack of Hermitian matrices of shape (..., d, d)."""
    As = np.asarray(As)
    d = As.shape[-1]
    lead = As.shape[:-2]
    if d == 1:
        v = As[..., 0, 0].real.astype(float)
        return v, v.copy()
    if d == 2:
        flat = As.reshape(-1, 2, 2)
        lam, mu = _kernels.herm2_eigvals(flat[:, 0, 0].real, flat[:, 0, 1], flat[:, 1, 1].real)
        return lam.reshape(lead), mu.reshape(lead)
    w = np.linalg.eigvalsh(hermitian_part(As))
    return w[..., 0], w[..., -1]


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue; closed form for 2x2, symmetric eigensolver otherwise."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    lam, _ = extreme_eigenvalues(A[None])
    return float(lam[0])


def min_eigenvalues(As) -> np.ndarray:
    return extreme_eigenvalues(As)[0]


def op_norm(A) -> float:
    """Largest singular value, via the Hermitian eigensolver applied to A^H A."""
    A = np.asarray(A)
    return float(np.sqrt(max(np.linalg.eigvalsh(A.conj().T @ A)[-1], 0.0)))


def op_norms(As) -> np.ndarray:
    As = np.asarray(As)
    gram = np.swapaxes(As, -1, -2).conj() @ As
    return np.sqrt(np.clip(np.linalg.eigvalsh(gram)[..., -1], 0.0, None))


def psd_sqrt(A) -> np.ndarray:
    """Square root of a non-negative Hermitian matrix by spectral decomposition."""
    w, v = np.linalg.eigh(hermitian_part(A))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def psd_tolerance(B) -> float:
    """Slack used when testing A >= B in the quadratic-form sense."""
    return 1e-10 * (1.0 + op_norm(B))
