"""Parameters, state layouts and the differential/algebraic split.

Every state is stored as a flat float vector ``phi`` whose component order is
fixed per (setup, dim).  Numerical code works on arrays of shape
``(..., ncomp)`` so the same functions serve single states and whole cell
fields.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np


class Setup(str, enum.Enum):
    LAGRANGIAN_INFLOW = "a"
    EULERIAN_INFLOW_OUTFLOW = "b"

    @classmethod
    def parse(cls, value) -> "Setup":
        if isinstance(value, Setup):
            return value
        key = str(value).strip().lower()
        aliases = {
            "a": cls.LAGRANGIAN_INFLOW,
            "lagrangian": cls.LAGRANGIAN_INFLOW,
            "lagrangianinflow": cls.LAGRANGIAN_INFLOW,
            "b": cls.EULERIAN_INFLOW_OUTFLOW,
            "eulerian": cls.EULERIAN_INFLOW_OUTFLOW,
            "eulerianinflowoutflow": cls.EULERIAN_INFLOW_OUTFLOW,
        }
        if key not in aliases:
            raise ValueError(f"unknown setup {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class PhysicalParams:
    density: float
    viscosity: float
    velocity: float
    drum_radius: float
    diameter: float
    length: float
    frequency: float = 0.0
    gravity: float = 0.0


@dataclass(frozen=True)
class DimensionlessParams:
    Re: float
    RbInv: float = 0.0
    FrInv: float = 0.0
    eps: float = 0.1
    ell: float = 1.0
    dim: int = 2
    setup: Setup = Setup.EULERIAN_INFLOW_OUTFLOW

    def __post_init__(self):
        object.__setattr__(self, "setup", Setup.parse(self.setup))
        if not (self.Re > 0 and math.isfinite(self.Re)):
            raise ValueError(f"Re must be positive and finite, got {self.Re}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be positive and finite, got {self.eps}")
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise ValueError(f"ell must be positive and finite, got {self.ell}")
        for name in ("RbInv", "FrInv"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")

    @property
    def lagrangian(self) -> bool:
        return self.setup is Setup.LAGRANGIAN_INFLOW

    def replace(self, **changes) -> "DimensionlessParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return DimensionlessParams(**kw)


def nondimensionalize(p: PhysicalParams, dim: int = 3, setup=Setup.EULERIAN_INFLOW_OUTFLOW) -> DimensionlessParams:
    """Map the eight physical parameters onto Re, 1/Rb, 1/Fr, eps and ell."""
    for name in ("density", "viscosity", "velocity", "drum_radius", "diameter", "length"):
        if not getattr(p, name) > 0:
            raise ValueError(f"{name} must be positive, got {getattr(p, name)}")
    if p.frequency < 0 or p.gravity < 0:
        raise ValueError("frequency and gravity must be non-negative")
    U, R = p.velocity, p.drum_radius
    return DimensionlessParams(
        Re=p.density * U * R / p.viscosity,
        RbInv=p.frequency * R / U,
        FrInv=math.sqrt(p.gravity * R) / U,
        eps=p.diameter / R,
        ell=p.length / R,
        dim=dim,
        setup=setup,
    )


# component names in storage order; also the CSV column headers
LAG3_NAMES = ("n1", "n2", "e", "r1", "r2", "r3", "q0", "q1", "q2", "q3",
              "k1", "k2", "k3", "v1", "v2", "v3", "varpi1", "varpi2", "varpi3")
LAG2_NAMES = ("n1", "e", "r1", "r2", "alpha", "k", "v1", "v2", "varpi")
EUL3_NAMES = ("n1", "n2", "u", "r1", "r2", "r3", "q0", "q1", "q2", "q3",
              "k1", "k2", "k3", "A", "v1", "v2", "v3", "w1", "w2", "w3")
EUL2_NAMES = ("n1", "u", "r1", "r2", "alpha", "k", "A", "v1", "v2", "w")

_NAMES = {
    (Setup.LAGRANGIAN_INFLOW, 3): LAG3_NAMES,
    (Setup.LAGRANGIAN_INFLOW, 2): LAG2_NAMES,
    (Setup.EULERIAN_INFLOW_OUTFLOW, 3): EUL3_NAMES,
    (Setup.EULERIAN_INFLOW_OUTFLOW, 2): EUL2_NAMES,
}
_ALGEBRAIC = {
    (Setup.LAGRANGIAN_INFLOW, 3): ("n1", "n2"),
    (Setup.LAGRANGIAN_INFLOW, 2): ("n1",),
    (Setup.EULERIAN_INFLOW_OUTFLOW, 3): ("n1", "n2", "u"),
    (Setup.EULERIAN_INFLOW_OUTFLOW, 2): ("n1", "u"),
}


def component_names(params: DimensionlessParams) -> tuple[str, ...]:
    return _NAMES[(params.setup, params.dim)]


def ncomp(params: DimensionlessParams) -> int:
    return len(component_names(params))


class VariableKind(str, enum.Enum):
    DIFFERENTIAL = "differential"
    ALGEBRAIC = "algebraic"


def classify_variables(params: DimensionlessParams) -> tuple[VariableKind, ...]:
    alg = _ALGEBRAIC[(params.setup, params.dim)]
    return tuple(VariableKind.ALGEBRAIC if n in alg else VariableKind.DIFFERENTIAL
                 for n in component_names(params))


def algebraic_mask(params: DimensionlessParams) -> np.ndarray:
    return np.array([k is VariableKind.ALGEBRAIC for k in classify_variables(params)])


def z_of_state(phi, params: DimensionlessParams) -> np.ndarray:
    """Differential projection: the quantities that carry a time derivative.

    Rows of algebraic unknowns hold a constant zero; they are the constraint
    rows of the semi-discrete system.
    """
    phi = np.asarray(phi, dtype=float)
    z = phi.copy()
    if params.lagrangian:
        na = 2 if params.dim == 3 else 1
        z[..., :na] = 0.0
        return z
    if params.dim == 3:
        A = phi[..., 13:14]
        z[..., :3] = 0.0
        z[..., 14:17] = A * phi[..., 14:17]
        z[..., 17:20] = (A**2) * phi[..., 17:20]
        z[..., 19] *= 2.0
    else:
        A = phi[..., 6:7]
        z[..., :2] = 0.0
        z[..., 7:9] = A * phi[..., 7:9]
        z[..., 9] = phi[..., 6] ** 2 * phi[..., 9]
    return z


@dataclass(frozen=True)
class DiagScale:
    """P_k = diag(1, 1, k) acting on the last axis."""

    k: float

    def apply(self, x) -> np.ndarray:
        return scale3(np.asarray(x, dtype=float), self.k)

    def inverse(self) -> "DiagScale":
        return DiagScale(1.0 / self.k)

    def matrix(self) -> np.ndarray:
        return np.diag([1.0, 1.0, self.k])


def scale3(x: np.ndarray, k: float) -> np.ndarray:
    out = np.array(x, dtype=float, copy=True)
    out[..., 2] *= k
    return out


# -- named state records ------------------------------------------------------

class _Packed:
    """Mixin turning a dataclass of scalars/vectors into the flat phi vector."""

    def pack(self) -> np.ndarray:
        parts = [np.atleast_1d(np.asarray(getattr(self, f.name), dtype=float)) for f in fields(self)]
        return np.concatenate(parts)

    @classmethod
    def unpack(cls, phi):
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (cls.NCOMP,):
            raise ValueError(f"{cls.__name__} expects {cls.NCOMP} components, got shape {phi.shape}")
        kw, i = {}, 0
        for f, width in zip(fields(cls), cls._WIDTHS):
            kw[f.name] = float(phi[i]) if width == 1 else phi[i:i + width].copy()
            i += width
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class LagrangianState(_Packed):
    n1: float
    n2: float
    e: float
    rOuter: np.ndarray
    quat: np.ndarray
    kappa: np.ndarray
    vel: np.ndarray
    varpi: np.ndarray
    _WIDTHS = (1, 1, 1, 3, 4, 3, 3, 3)
    NCOMP = 19


@dataclass(frozen=True, eq=False)
class LagrangianState2D(_Packed):
    n1: float
    e: float
    rOuter: np.ndarray
    alpha: float
    kappa: float
    vel: np.ndarray
    varpi: float
    _WIDTHS = (1, 1, 2, 1, 1, 2, 1)
    NCOMP = 9


@dataclass(frozen=True, eq=False)
class EulerianState(_Packed):
    n1: float
    n2: float
    u: float
    rOuter: np.ndarray
    quat: np.ndarray
    kappa: np.ndarray
    A: float
    vel: np.ndarray
    omega: np.ndarray
    _WIDTHS = (1, 1, 1, 3, 4, 3, 1, 3, 3)
    NCOMP = 20


@dataclass(frozen=True, eq=False)
class EulerianState2D(_Packed):
    n1: float
    u: float
    rOuter: np.ndarray
    alpha: float
    kappa: float
    A: float
    vel: np.ndarray
    omega: float
    _WIDTHS = (1, 1, 2, 1, 1, 1, 2, 1)
    NCOMP = 10


def state_type(params: DimensionlessParams):
    return {
        (Setup.LAGRANGIAN_INFLOW, 3): LagrangianState,
        (Setup.LAGRANGIAN_INFLOW, 2): LagrangianState2D,
        (Setup.EULERIAN_INFLOW_OUTFLOW, 3): EulerianState,
        (Setup.EULERIAN_INFLOW_OUTFLOW, 2): EulerianState2D,
    }[(params.setup, params.dim)]
