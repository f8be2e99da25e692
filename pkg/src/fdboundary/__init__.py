"""Boundary behaviour of finite-distortion maps on hyperbolic Riemann surfaces."""

__version__ = "0.1.0"
