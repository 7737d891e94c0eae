"""Traveling breather ground states for cubic nonlinear Maxwell waveguides."""

__version__ = "0.1.0"
