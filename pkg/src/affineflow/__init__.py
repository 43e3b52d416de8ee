"""Finite difference solvers for motion of level sets by affine curvature."""

__version__ = "0.1.0"
