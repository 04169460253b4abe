"""Polynomial first integrals of magnetic geodesic flows on the 2-torus.

Fields live in conformal coordinates ds^2 = L (dx^2 + dy^2); an integral of
degree N on the unit energy level is a real trigonometric polynomial in the
momentum angle whose coefficients solve a quasi-linear system. The modules
build that system, its Riemann invariants and conservation laws, and check
everything numerically.
"""

__version__ = "0.1.0"

from .errors import MagflowError  # noqa: F401
from .fields import FieldGrid, FieldPoint, FourierFieldSpec, Jet, coeff_a, eval_jet, grid_jet  # noqa: F401
from .trigpoly import TrigPoly, critical_points, vieta_product  # noqa: F401
