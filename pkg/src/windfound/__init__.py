"""Quasi-static nonlinear FE simulation of a circular wind-turbine spread foundation."""

__version__ = "0.1.0"
