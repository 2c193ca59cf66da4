"""Finite-stiffness simulations of n_t = div(n grad p(n)) + div(n grad V) + n g and
measurements of their convergence to the incompressible limit."""

from __future__ import annotations

from .core import BC, Field, Grid, VectorField, divergence, gradient, laplacian, mass
from .errors import StiffPressError
from .pressure import PressureLaw
from .solver import SimConfig, Trajectory, solve, stable_dt, step

__version__ = "0.1.0"

__all__ = ["BC", "Field", "Grid", "VectorField", "divergence", "gradient", "laplacian", "mass",
           "StiffPressError", "PressureLaw", "SimConfig", "Trajectory", "solve", "stable_dt", "step"]
