"""Shabat polynomials of three-branch trees, the elliptic curves they define, and
certificates for their torsion points and Lamé monodromy."""

__version__ = "0.1.0"
