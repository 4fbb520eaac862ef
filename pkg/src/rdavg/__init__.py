"""Spectral simulation and averaging checks for reaction-diffusion equations
with rapidly oscillating quasi-periodic coefficients."""

__version__ = "0.1.0"
