"""Pointwise physics of the inflow-outflow set-up on a fixed domain (arc-length description).

Convective fluxes are upwinded from the left (the intrinsic velocity points
from nozzle to outflow), contact-force multipliers downwinded, viscous terms
central.  Conserved products ``A v`` and ``A^2 w`` are the evolved
quantities, see :func:`spinrod.state.z_of_state`.

3D rows: n1 n2 u | r(3) | q(4) | kappa(3) | A | v(3) | w(3)
2D rows: n1 u | r(2) | alpha | kappa | A | v(2) | w
"""

from __future__ import annotations

import numpy as np

from .lagrangian import _e3_cross, _mtv, _mv, _perp
from .rotation import nozzle_quaternion, quat_rate, rot2d, rotation_matrix
from .state import DimensionlessParams, scale3


class UnsupportedRegimeError(ValueError):
    """Raised when the intrinsic velocity reverses (upwind direction invalid)."""


def _check(phi, params):
    u = phi[..., 2] if params.dim == 3 else phi[..., 1]
    A = phi[..., 13] if params.dim == 3 else phi[..., 6]
    if np.any(A <= 0):
        raise ValueError("cross-sectional area must be positive")
    if np.any(u < 0):
        raise UnsupportedRegimeError("negative intrinsic velocity; upwinding assumes u >= 0")


# -- 3D ----------------------------------------------------------------------

def _flux_up3(phi, p):
    u, kap, A, v, w = phi[..., 2], phi[..., 10:13], phi[..., 13], phi[..., 14:17], phi[..., 17:20]
    ub, Ab = u[..., None], A[..., None]
    f = np.zeros_like(phi)
    f[..., 0:3] = v
    f[..., 2] -= u
    f[..., 10:13] = w - ub * kap
    f[..., 13] = -u * A
    f[..., 14:17] = -ub * Ab * v
    f[..., 17:20] = (-ub * scale3(Ab**2 * w, 2.0)
                     + 3.0 / p.Re * Ab**2 * scale3(np.cross(kap, w), 2.0 / 3.0))
    return f


def _flux_down3(phi, p):
    f = np.zeros_like(phi)
    f[..., 14] = phi[..., 0] / p.Re
    f[..., 15] = phi[..., 1] / p.Re
    return f


def _central3(at, left, right, ds, p):
    A = at[..., 13]
    du = (right[..., 2] - left[..., 2]) / ds
    dw = (right[..., 17:20] - left[..., 17:20]) / ds
    f = np.zeros(np.broadcast_shapes(at.shape, left.shape))
    f[..., 16] = 3.0 / p.Re * A * du
    f[..., 17:20] = (3.0 / p.Re * A**2)[..., None] * scale3(dw, 2.0 / 3.0)
    return f


def _source3(prev, phi, ds, p):
    n1, n2, u = phi[..., 0], phi[..., 1], phi[..., 2]
    r, q, kap, A = phi[..., 3:6], phi[..., 6:10], phi[..., 10:13], phi[..., 13]
    v, w = phi[..., 14:17], phi[..., 17:20]
    ub, Ab = u[..., None], A[..., None]
    du = (u - prev[..., 2]) / ds
    dw = (w - prev[..., 17:20]) / ds
    R = rotation_matrix(q)
    f = np.zeros_like(phi)
    f[..., 0:3] = np.cross(kap, v) + _e3_cross(w)
    rel = v.copy()
    rel[..., 2] -= u
    f[..., 3:6] = _mtv(R, rel)
    f[..., 6:10] = quat_rate(w - ub * kap, q)
    f[..., 10:13] = np.cross(kap, w)

    n = np.stack([n1, n2, 3.0 * A * du], axis=-1)
    axis = R[..., :, 0]
    r_perp = np.zeros_like(r)
    r_perp[..., 1:] = -r[..., 1:]
    k_rot = -2.0 * p.RbInv * np.cross(axis, Ab * v) - p.RbInv**2 * Ab * _mv(R, r_perp)
    f[..., 14:17] = (np.cross(kap, n) / p.Re + Ab * np.cross(v, w)
                     - p.FrInv**2 * Ab * axis + k_rot)

    wa = p.RbInv * axis
    wt = w + wa
    A2 = Ab**2
    l_rot = np.cross(scale3(A2 * wt, 2.0), wt) + scale3(np.cross(A2 * w, wa) + A2 * du[..., None] * wa, 2.0)
    m = 3.0 / p.Re * A2 * scale3(dw + np.cross(kap, w), 2.0 / 3.0)
    f[..., 17:20] = np.cross(kap, m) + 16.0 / (p.eps**2 * p.Re) * _e3_cross(n) + l_rot
    return f


# -- 2D ----------------------------------------------------------------------

def _flux_up2(phi, p):
    u, kap, A, v, w = phi[..., 1], phi[..., 5], phi[..., 6], phi[..., 7:9], phi[..., 9]
    f = np.zeros_like(phi)
    f[..., 0] = v[..., 0]
    f[..., 1] = v[..., 1] - u
    f[..., 5] = w - u * kap
    f[..., 6] = -u * A
    f[..., 7:9] = -(u * A)[..., None] * v
    f[..., 9] = -u * A**2 * w
    return f


def _flux_down2(phi, p):
    f = np.zeros_like(phi)
    f[..., 7] = phi[..., 0] / p.Re
    return f


def _central2(at, left, right, ds, p):
    A = at[..., 6]
    du = (right[..., 1] - left[..., 1]) / ds
    dw = (right[..., 9] - left[..., 9]) / ds
    f = np.zeros(np.broadcast_shapes(at.shape, left.shape))
    f[..., 8] = 3.0 / p.Re * A * du
    f[..., 9] = 3.0 / p.Re * A**2 * dw
    return f


def _source2(prev, phi, ds, p):
    n1, u, r, alpha = phi[..., 0], phi[..., 1], phi[..., 2:4], phi[..., 4]
    kap, A, v, w = phi[..., 5], phi[..., 6], phi[..., 7:9], phi[..., 9]
    du = (u - prev[..., 1]) / ds
    R = rot2d(alpha)
    vperp = _perp(v)
    Ab = A[..., None]
    f = np.zeros_like(phi)
    f[..., 0] = -kap * v[..., 1] + w
    f[..., 1] = kap * v[..., 0]
    rel = v.copy()
    rel[..., 1] -= u
    f[..., 2:4] = _mtv(R, rel)
    f[..., 4] = w - u * kap
    nperp = np.stack([-3.0 * A * du, n1], axis=-1)
    f[..., 7:9] = ((kap / p.Re)[..., None] * nperp - (A * w)[..., None] * vperp
                   - 2.0 * p.RbInv * Ab * vperp + p.RbInv**2 * Ab * _mv(R, r))
    f[..., 9] = -16.0 / (p.eps**2 * p.Re) * n1 + p.RbInv * A**2 * du
    return f


# -- public surface ------------------------------------------------------------

def eul_flux_up(phi, params: DimensionlessParams) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return (_flux_up3 if params.dim == 3 else _flux_up2)(phi, params)


def eul_flux_down(phi, params: DimensionlessParams) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return (_flux_down3 if params.dim == 3 else _flux_down2)(phi, params)


def eul_flux_central_at(at, left, right, ds, params: DimensionlessParams) -> np.ndarray:
    return (_central3 if params.dim == 3 else _central2)(at, left, right, ds, params)


def eul_edge_flux(phi_left, phi_right, ds, params: DimensionlessParams) -> np.ndarray:
    """Numerical flux at an interior edge: upwind(left) + downwind(right) + central(mean)."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    left = np.asarray(phi_left, dtype=float)
    right = np.asarray(phi_right, dtype=float)
    _check(left, params)
    _check(right, params)
    return (eul_flux_up(left, params) + eul_flux_down(right, params)
            + eul_flux_central_at(0.5 * (left + right), left, right, ds, params))


def eul_source(phi_prev, phi, ds, params: DimensionlessParams) -> np.ndarray:
    """Cell source; s-derivatives inside it are backward differences against ``phi_prev``."""
    phi = np.asarray(phi, dtype=float)
    A = phi[..., 13] if params.dim == 3 else phi[..., 6]
    if np.any(A <= 0):
        raise ValueError("cross-sectional area must be positive")
    return (_source3 if params.dim == 3 else _source2)(np.asarray(phi_prev, dtype=float), phi, ds, params)


def eul_source_unchecked(phi_prev, phi, ds, params):
    return (_source3 if params.dim == 3 else _source2)(phi_prev, phi, ds, params)


def eul_inflow_state(params: DimensionlessParams) -> np.ndarray:
    if params.dim == 3:
        phi = np.zeros(20)
        phi[2] = 1.0
        phi[3:6] = (0.0, 1.0, 0.0)
        phi[6:10] = nozzle_quaternion()
        phi[13] = 1.0
        phi[16] = 1.0
        return phi
    phi = np.zeros(10)
    phi[1] = 1.0
    phi[2:4] = (1.0, 0.0)
    phi[6] = 1.0
    phi[8] = 1.0
    return phi


def eul_initial_state(s, params: DimensionlessParams) -> np.ndarray:
    """Straight jet leaving the nozzle perpendicularly to the drum surface."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > params.ell * (1 + 1e-12)):
        raise ValueError(f"arc-length outside [0, {params.ell}]")
    base = eul_inflow_state(params)
    phi = np.broadcast_to(base, s_arr.shape + base.shape).copy()
    if params.dim == 3:
        phi[..., 4] = 1.0 + s_arr
    else:
        phi[..., 2] = 1.0 + s_arr
    return phi
