"""Pointwise physics of the inflow set-up with growing domain (material description).

The balance laws are split as ``d/dt z = d/dsigma (f_up + f_down + f_central) + p + q``.
All functions take arrays of shape ``(..., ncomp)``; row layouts follow
:func:`spinrod.state.z_of_state`.

3D rows: n1 n2 e | r(3) | q(4) | kappa(3) | v(3) | varpi(3)
2D rows: n1 e | r(2) | alpha | kappa | v(2) | varpi
"""

from __future__ import annotations

import numpy as np

from .rotation import nozzle_quaternion, rot2d, rotation_matrix, quat_rate
from .state import DimensionlessParams, scale3

E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def _check_e(e):
    if np.any(np.asarray(e) <= 0):
        raise ValueError("elongation must be positive")


def _mv(R, x):
    return np.einsum("...ij,...j->...i", R, x)


def _mtv(R, x):
    return np.einsum("...ji,...j->...i", R, x)


def _e3_cross(x):
    """e3 x x for vectors on the last axis."""
    out = np.zeros_like(x)
    out[..., 0] = -x[..., 1]
    out[..., 1] = x[..., 0]
    return out


def _perp(x):
    """(x1, x2) -> (-x2, x1)."""
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


# -- 3D ----------------------------------------------------------------------

def _flux_up3(phi, p):
    e, kap, v, vp = phi[..., 2], phi[..., 10:13], phi[..., 13:16], phi[..., 16:19]
    f = np.zeros_like(phi)
    f[..., 0:3] = v
    f[..., 10:13] = e[..., None] * vp
    c = 3.0 / p.Re / e**2
    f[..., 15] = c * (kap[..., 0] * v[..., 1] - kap[..., 1] * v[..., 0])
    f[..., 16:19] = c[..., None] * scale3(np.cross(kap, vp), 1.0 / 3.0)
    return f


def _flux_down3(phi, p):
    f = np.zeros_like(phi)
    f[..., 13] = phi[..., 0] / p.Re
    f[..., 14] = phi[..., 1] / p.Re
    return f


def _diffs3(left, right, ds):
    dv3 = (right[..., 15] - left[..., 15]) / ds
    dw = (right[..., 2:3] * right[..., 16:19] - left[..., 2:3] * left[..., 16:19]) / ds
    return dv3, dw


def _central3(at, left, right, ds, p):
    e = at[..., 2]
    dv3, dw = _diffs3(left, right, ds)
    f = np.zeros(np.broadcast_shapes(at.shape, left.shape))
    f[..., 15] = 3.0 / p.Re / e**2 * dv3
    f[..., 16:19] = (3.0 / p.Re / e**3)[..., None] * scale3(dw, 1.0 / 3.0)
    return f


def _source_p3(prev, phi, ds, p):
    e, kap = phi[..., 2], phi[..., 10:13]
    dv3, dw = _diffs3(prev, phi, ds)
    f = np.zeros_like(phi)
    axial = np.zeros_like(kap)
    axial[..., 2] = dv3
    f[..., 13:16] = (3.0 / p.Re / e**2)[..., None] * np.cross(kap, axial)
    f[..., 16:19] = (3.0 / p.Re / e**3)[..., None] * scale3(np.cross(kap, scale3(dw, 2.0 / 3.0)), 0.5)
    return f


def _source_q3(prev, phi, ds, p):
    n1, n2, e = phi[..., 0], phi[..., 1], phi[..., 2]
    r, q, kap, v, vp = phi[..., 3:6], phi[..., 6:10], phi[..., 10:13], phi[..., 13:16], phi[..., 16:19]
    eb = e[..., None]
    w = eb * vp
    R = rotation_matrix(q)
    f = np.zeros_like(phi)
    f[..., 0:3] = np.cross(kap, v) + eb * _e3_cross(w)
    f[..., 3:6] = _mtv(R, v)
    f[..., 6:10] = quat_rate(w, q)
    f[..., 10:13] = np.cross(kap, w)

    strain = kap[..., 0] * v[..., 1] - kap[..., 1] * v[..., 0]
    n = np.stack([n1, n2, 3.0 / e**2 * strain], axis=-1)
    axis = R[..., :, 0]  # director coordinates of the drum axis a1
    r_perp = np.zeros_like(r)
    r_perp[..., 1:] = -r[..., 1:]  # e1 x (e1 x r)
    k_rot = -2.0 * p.RbInv * np.cross(axis, v) - p.RbInv**2 * _mv(R, r_perp)
    f[..., 13:16] = np.cross(kap, n) / p.Re + np.cross(v, w) - p.FrInv**2 * axis + k_rot

    dv3 = (phi[..., 15] - prev[..., 15]) / ds
    de_dt = dv3 + strain
    wa = p.RbInv * axis
    wt = w + wa
    l_rot = np.cross(scale3(wt, 2.0) / eb, wt) + scale3(np.cross(w / eb, wa) + (de_dt / e**2)[..., None] * wa, 2.0)
    ang = ((3.0 / p.Re / e**3)[..., None] * np.cross(kap, scale3(np.cross(kap, w), 2.0 / 3.0))
           + 16.0 / (p.eps**2 * p.Re) * eb * _e3_cross(n)
           + l_rot)
    f[..., 16:19] = scale3(ang, 0.5)
    return f


# -- 2D ----------------------------------------------------------------------

def _flux_up2(phi, p):
    e, kap, v, vp = phi[..., 1], phi[..., 5], phi[..., 6:8], phi[..., 8]
    f = np.zeros_like(phi)
    f[..., 0:2] = v
    f[..., 5] = e * vp
    f[..., 7] = 3.0 / p.Re / e**2 * kap * v[..., 0]
    return f


def _flux_down2(phi, p):
    f = np.zeros_like(phi)
    f[..., 6] = phi[..., 0] / p.Re
    return f


def _diffs2(left, right, ds):
    dv2 = (right[..., 7] - left[..., 7]) / ds
    dw = (right[..., 1] * right[..., 8] - left[..., 1] * left[..., 8]) / ds
    return dv2, dw


def _central2(at, left, right, ds, p):
    e = at[..., 1]
    dv2, dw = _diffs2(left, right, ds)
    f = np.zeros(np.broadcast_shapes(at.shape, left.shape))
    f[..., 7] = 3.0 / p.Re / e**2 * dv2
    f[..., 8] = 3.0 / p.Re / e**3 * dw
    return f


def _source_p2(prev, phi, ds, p):
    e, kap = phi[..., 1], phi[..., 5]
    dv2, _ = _diffs2(prev, phi, ds)
    f = np.zeros_like(phi)
    f[..., 6] = -3.0 / p.Re / e**2 * kap * dv2
    return f


def _source_q2(prev, phi, ds, p):
    n1, e, r, alpha = phi[..., 0], phi[..., 1], phi[..., 2:4], phi[..., 4]
    kap, v, vp = phi[..., 5], phi[..., 6:8], phi[..., 8]
    w = e * vp
    R = rot2d(alpha)
    vperp = _perp(v)
    f = np.zeros_like(phi)
    f[..., 0] = -kap * v[..., 1] + e * w
    f[..., 1] = kap * v[..., 0]
    f[..., 2:4] = _mtv(R, v)
    f[..., 4] = w
    n2a = 3.0 / e**2 * kap * v[..., 0]
    nperp = np.stack([-n2a, n1], axis=-1)
    f[..., 6:8] = ((kap / p.Re)[..., None] * nperp - w[..., None] * vperp
                   - 2.0 * p.RbInv * vperp + p.RbInv**2 * _mv(R, r))
    dv2 = (phi[..., 7] - prev[..., 7]) / ds
    de_dt = dv2 + kap * v[..., 0]
    f[..., 8] = -16.0 / (p.eps**2 * p.Re) * e * n1 + p.RbInv * de_dt / e**2
    return f


# -- public surface ------------------------------------------------------------

def _pick(params, f3, f2):
    return f3 if params.dim == 3 else f2


def _e_of(phi, params):
    return phi[..., 2] if params.dim == 3 else phi[..., 1]


def lag_flux_up(phi, params: DimensionlessParams) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    _check_e(_e_of(phi, params))
    return _pick(params, _flux_up3, _flux_up2)(phi, params)


def lag_flux_down(phi, params: DimensionlessParams) -> np.ndarray:
    return _pick(params, _flux_down3, _flux_down2)(np.asarray(phi, dtype=float), params)


def lag_flux_central_at(at, left, right, dsigma, params: DimensionlessParams) -> np.ndarray:
    """Central viscous flux evaluated at ``at`` with the difference quotient of left/right."""
    return _pick(params, _central3, _central2)(at, left, right, dsigma, params)


def lag_flux_central(phi_left, phi_right, dsigma, params: DimensionlessParams) -> np.ndarray:
    if dsigma <= 0:
        raise ValueError("dsigma must be positive")
    left = np.asarray(phi_left, dtype=float)
    right = np.asarray(phi_right, dtype=float)
    mean = 0.5 * (left + right)
    _check_e(_e_of(mean, params))
    return lag_flux_central_at(mean, left, right, dsigma, params)


def lag_source_p(phi_prev, phi, dsigma, params: DimensionlessParams) -> np.ndarray:
    if dsigma <= 0:
        raise ValueError("dsigma must be positive")
    phi = np.asarray(phi, dtype=float)
    _check_e(_e_of(phi, params))
    return _pick(params, _source_p3, _source_p2)(np.asarray(phi_prev, dtype=float), phi, dsigma, params)


def lag_source_q(phi_prev, phi, dsigma, params: DimensionlessParams) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    _check_e(_e_of(phi, params))
    return _pick(params, _source_q3, _source_q2)(np.asarray(phi_prev, dtype=float), phi, dsigma, params)


def lag_source(phi_prev, phi, dsigma, params: DimensionlessParams) -> np.ndarray:
    """p + q without argument checks (residual hot path)."""
    if params.dim == 3:
        return _source_p3(phi_prev, phi, dsigma, params) + _source_q3(phi_prev, phi, dsigma, params)
    return _source_p2(phi_prev, phi, dsigma, params) + _source_q2(phi_prev, phi, dsigma, params)


def lag_nozzle_state(params: DimensionlessParams) -> np.ndarray:
    if params.dim == 3:
        phi = np.zeros(19)
        phi[2] = 1.0
        phi[3:6] = (0.0, 1.0, 0.0)
        phi[6:10] = nozzle_quaternion()
        phi[15] = 1.0
        return phi
    phi = np.zeros(9)
    phi[1] = 1.0
    phi[2:4] = (1.0, 0.0)
    phi[7] = 1.0
    return phi


def lag_free_end_values(dim: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Stress-free jet end: contact force and couple vanish."""
    return np.zeros(dim if dim == 3 else 2), np.zeros(3 if dim == 3 else 1)
