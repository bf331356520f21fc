"""Numerical laboratory for sparse domination of the heat flow, Muckenhoupt
and Morrey constants, and mild solutions of the potential-driven semilinear
heat equation."""

__version__ = "0.1.0"
