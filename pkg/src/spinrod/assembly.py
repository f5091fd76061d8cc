"""Finite-volume grid, numerical-flux wiring and the semi-discrete residual.

For cell ``i`` with edges ``i-1/2`` and ``i+1/2``::

    d/dt z_i = (H(phi_i, phi_i+1) - H(phi_i-1, phi_i)) / ds + P(phi_i-1, phi_i) + q(phi_i)

``H`` is upwind + downwind + central.  At the nozzle edge the upwind and
central fluxes use the prescribed boundary state, the downwind flux the
first cell; at the free end/outflow the central and downwind fluxes vanish
and the upwind flux is taken from the last cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import eulerian, lagrangian
from .rotation import quat_normalize
from .state import DimensionlessParams, Setup, algebraic_mask, z_of_state

# guards floor() against round-off in t/dsigma when t is a multiple of dsigma
_FLOOR_SLACK = 1e-9


def cell_count(length: float, dsigma: float) -> int:
    if dsigma <= 0:
        raise ValueError("cell size must be positive")
    if length < 0:
        raise ValueError("length must be non-negative")
    return int(math.floor(length / dsigma + _FLOOR_SLACK))


@dataclass(frozen=True)
class Grid:
    cell_size: float
    n_dynamic: int
    setup: Setup
    dim: int
    length: float
    n_static: int = 0

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell size must be positive")

    @classmethod
    def eulerian(cls, params: DimensionlessParams, n_cells: int) -> "Grid":
        return cls(params.ell / n_cells, n_cells, Setup.EULERIAN_INFLOW_OUTFLOW, params.dim, params.ell)

    @classmethod
    def lagrangian(cls, params: DimensionlessParams, dsigma: float, t: float, dt: float = 0.0) -> "Grid":
        n = cell_count(t, dsigma)
        static = cell_count(t + dt, dsigma) - n if dt > 0 else 0
        return cls(dsigma, n, Setup.LAGRANGIAN_INFLOW, params.dim, t, static)

    def centers(self) -> np.ndarray:
        i = np.arange(self.n_dynamic)
        if self.setup is Setup.LAGRANGIAN_INFLOW:
            # jet end sits at sigma = 0, cells extend towards the nozzle
            return -(self.n_dynamic - i - 0.5) * self.cell_size
        return (i + 0.5) * self.cell_size


def boundary_state(params: DimensionlessParams) -> np.ndarray:
    if params.lagrangian:
        return lagrangian.lag_nozzle_state(params)
    return eulerian.eul_inflow_state(params)


def grow(field: np.ndarray, t: float, dt: float, dsigma: float, params: DimensionlessParams) -> np.ndarray:
    """Activate the cells that leave the nozzle during ``[t, t + dt]``.

    New cells are prepended on the nozzle side with nozzle values; existing
    cells are untouched.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = cell_count(t + dt, dsigma) - cell_count(t, dsigma)
    if m <= 0:
        return np.array(field, dtype=float, copy=True)
    fresh = np.tile(boundary_state(params), (m, 1))
    return np.vstack([fresh, np.asarray(field, dtype=float).reshape(-1, fresh.shape[1])])


def _pieces(params):
    if params.lagrangian:
        return (lagrangian._flux_up3, lagrangian._flux_down3, lagrangian._central3) if params.dim == 3 else \
               (lagrangian._flux_up2, lagrangian._flux_down2, lagrangian._central2)
    return (eulerian._flux_up3, eulerian._flux_down3, eulerian._central3) if params.dim == 3 else \
           (eulerian._flux_up2, eulerian._flux_down2, eulerian._central2)


def _source(prev, phi, ds, params):
    if params.lagrangian:
        return lagrangian.lag_source(prev, phi, ds, params)
    return eulerian.eul_source_unchecked(prev, phi, ds, params)


def edge_fluxes(field: np.ndarray, ds: float, params: DimensionlessParams) -> np.ndarray:
    """Total numerical flux at the N+1 edges (nozzle edge first)."""
    up, down, central = _pieces(params)
    noz = boundary_state(params)
    ext = np.vstack([noz, field])
    n = len(field)
    flux = up(ext, params)
    flux[:n] += down(field, params)
    at = 0.5 * (ext[:-1] + ext[1:])
    at[0] = noz
    flux[:n] += central(at, ext[:-1], ext[1:], ds, params)
    return flux


def assemble_rhs(field, ds: float, params: DimensionlessParams) -> np.ndarray:
    """Right-hand side of the semi-discrete system, one row block per cell."""
    field = np.asarray(field, dtype=float)
    if field.ndim != 2 or len(field) == 0:
        raise ValueError("field must be a non-empty (N, ncomp) array")
    flux = edge_fluxes(field, ds, params)
    prev = np.vstack([boundary_state(params), field[:-1]])
    return (flux[1:] - flux[:-1]) / ds + _source(prev, field, ds, params)


def semidiscrete_residual(field, grid: Grid, params: DimensionlessParams, dzdt=None) -> np.ndarray:
    """``dz/dt - rhs`` per cell; algebraic rows get ``dz/dt = 0``.

    With ``dzdt=None`` this is the steady residual.
    """
    field = np.asarray(field, dtype=float)
    if field.shape[0] != grid.n_dynamic:
        raise ValueError(f"field has {field.shape[0]} cells, grid expects {grid.n_dynamic}")
    rhs = assemble_rhs(field, grid.cell_size, params)
    if dzdt is None:
        return -rhs
    dzdt = np.array(dzdt, dtype=float, copy=True)
    if dzdt.shape != rhs.shape:
        raise ValueError("dzdt shape mismatch")
    dzdt[:, algebraic_mask(params)] = 0.0
    return dzdt - rhs


def initial_field(grid: Grid, params: DimensionlessParams) -> np.ndarray:
    if params.lagrangian:
        return np.tile(lagrangian.lag_nozzle_state(params), (grid.n_dynamic, 1))
    return eulerian.eul_initial_state(grid.centers(), params)


def renormalize(field: np.ndarray, params: DimensionlessParams) -> np.ndarray:
    if params.dim == 3 and len(field):
        field[:, 6:10] = quat_normalize(field[:, 6:10])
    return field


@dataclass
class SemiDiscreteSystem:
    """The cell DAE ``d/dt z(phi) = F(phi)`` in the form the Radau stepper consumes."""

    params: DimensionlessParams
    cell_size: float

    @property
    def algebraic(self) -> np.ndarray:
        return algebraic_mask(self.params)

    coupling = 1

    def z(self, phi):
        return z_of_state(phi, self.params)

    def rhs(self, phi, t):
        return assemble_rhs(phi, self.cell_size, self.params)

    def post(self, phi):
        return renormalize(phi, self.params)
