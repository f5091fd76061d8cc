"""Finite-volume / Radau IIA solver for the instationary viscous Cosserat rod in rotational spinning."""

from .state import DimensionlessParams, PhysicalParams, Setup, nondimensionalize
from .assembly import Grid, SemiDiscreteSystem, assemble_rhs, semidiscrete_residual
from .radau import NewtonError, NewtonOptions, RadauIntegrator, radau_tableau

__all__ = [
    "DimensionlessParams", "PhysicalParams", "Setup", "nondimensionalize",
    "Grid", "SemiDiscreteSystem", "assemble_rhs", "semidiscrete_residual",
    "NewtonError", "NewtonOptions", "RadauIntegrator", "radau_tableau",
]
