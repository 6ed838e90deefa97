"""Exact cohomology computations for Hilbert schemes of points on surfaces."""
from .errors import HilbError
from .frobenius import SurfaceModel, builtin, load_surface, synthetic

__all__ = ["HilbError", "SurfaceModel", "builtin", "load_surface", "synthetic"]
__version__ = "0.1.0"
