"""
Quantum information manifold toolkit.
Norms, expansional series, nearby relations and the dual affine geometry of
faithful finite-dimensional density operators, each checkable numerically.
"""

__version__ = "0.1.0"
