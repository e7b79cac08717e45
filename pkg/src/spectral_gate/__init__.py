"""Numerical criteria for discreteness of the spectrum of matrix Schroedinger operators."""
from ._kernels import BACKEND
from .errors import ConfigError, ConvergenceError, HypothesisError, NumericalError, SpectralGateError
from .geometry import Cube, Grid, SampleLattice, cells_in_annulus, monomial_integral
from .linalg import PointSpectrum, min_eigenvalue, point_spectrum
from .potential import MatrixPolynomial, SampledPotential, gallery, integrate
from .verdict import CriterionVerdict, Status, Witness

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "ConvergenceError", "CriterionVerdict", "Cube", "Grid", "HypothesisError",
    "MatrixPolynomial", "NumericalError", "PointSpectrum", "SampleLattice", "SampledPotential",
    "SpectralGateError", "Status", "Witness", "cells_in_annulus", "gallery", "integrate", "min_eigenvalue",
    "monomial_integral", "point_spectrum", "__version__",
]
