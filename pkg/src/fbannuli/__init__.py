"""Free-boundary and capillary minimal annuli with spherical curvature lines.

The package is organised bottom-up: elliptic functions on rectangular
lattices, the root-pair parameter space, the (alpha, beta) Hamiltonian
flow, the period map, the Weierstrass surface synthesis, the annulus
pipeline, numerical verification and the command line.
"""

from .config import Settings, get_settings, set_settings
from .elliptic import compute_lattice, eval_weierstrass, lattice_from_roots
from .errors import DomainError, FBAnnuliError, NumericalFailure
from .params import classify_domain, derive_spectral
from .period import per, trace_level
from .pipeline import build_capillary, height, solve_free_boundary
from .verify import verify_chart

__version__ = "0.1.0"

__all__ = [
    "Settings", "get_settings", "set_settings", "compute_lattice", "eval_weierstrass",
    "lattice_from_roots", "DomainError", "FBAnnuliError", "NumericalFailure",
    "classify_domain", "derive_spectral", "per", "trace_level", "build_capillary", "height",
    "solve_free_boundary", "verify_chart",
]
