"""Thin insulating layer eigenvalue toolkit.

Finite element and semi-analytic solvers for a two-phase Laplace eigenvalue
problem with a thin low-conductivity coating, its Robin limit, and the
first-order correction in the coating parameter.
"""

__version__ = "0.1.0"
