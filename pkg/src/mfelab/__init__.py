"""Numerical laboratory for the mean field equation on the unit sphere."""
from .kernels import BACKEND
from .sphere_grid import HarmonicCoeffs, SphereField, SphereGrid, default_grid

__version__ = "0.1.0"
