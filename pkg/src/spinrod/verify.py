"""Error norms, convergence orders, steady-state and invariant checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import Grid, semidiscrete_residual
from .rotation import angle_from_quat
from .state import DimensionlessParams, algebraic_mask


def l2_error(field_, reference, delta: float, mask=None) -> float:
    """Discrete L2 norm ``sqrt(sum_i delta * |phi_i - ref_i|^2)`` over the selected components."""
    a = np.asarray(field_, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    if d.ndim == 1:
        d = d[:, None]
    if mask is not None:
        d = d[:, np.asarray(mask, dtype=bool)]
    return math.sqrt(delta * float(np.sum(d * d)))


def observed_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    if e_coarse < 0 or e_fine < 0:
        raise ValueError("errors must be non-negative")
    if e_coarse == e_fine:
        return 0.0
    if e_fine == 0.0:
        return math.inf
    return math.log(e_coarse / e_fine) / math.log(ratio)


def fitted_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    h = np.log(np.asarray(steps, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(h, e, 1)[0])


@dataclass
class ConvergenceTable:
    steps: list = field(default_factory=list)
    err_diff: list = field(default_factory=list)
    err_alg: list = field(default_factory=list)

    def add(self, step: float, e_diff: float, e_alg: float):
        if self.steps and not step < self.steps[-1]:
            raise ValueError("step parameter must decrease strictly")
        self.steps.append(float(step))
        self.err_diff.append(float(e_diff))
        self.err_alg.append(float(e_alg))

    def _pair_orders(self, errs):
        out = [math.nan]
        for k in range(1, len(errs)):
            out.append(observed_order(errs[k - 1], errs[k], self.steps[k - 1] / self.steps[k]))
        return out

    @property
    def order_diff(self):
        return self._pair_orders(self.err_diff)

    @property
    def order_alg(self):
        return self._pair_orders(self.err_alg)

    def fitted(self) -> tuple[float, float]:
        return fitted_order(self.steps, self.err_diff), fitted_order(self.steps, self.err_alg)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "err_diff", "err_alg", "order_diff", "order_alg"])
        for row in zip(self.steps, self.err_diff, self.err_alg, self.order_diff, self.order_alg):
            w.writerow(["" if (isinstance(x, float) and math.isnan(x)) else f"{x:.17g}" for x in row])
        return buf.getvalue()


def steady_residual(field_, grid: Grid, params: DimensionlessParams) -> float:
    """Sup norm of the semi-discrete residual with zero time derivative."""
    return float(np.max(np.abs(semidiscrete_residual(field_, grid, params))))


def constraint_residual(rhs: np.ndarray, params: DimensionlessParams) -> float:
    """Largest algebraic-row entry of an assembled right-hand side."""
    return float(np.max(np.abs(rhs[:, algebraic_mask(params)]), initial=0.0))


def mass_defect(area_old, area_new, ds, dt, b, stage_flux_out, flux_in=1.0) -> float:
    """One-step defect of ``sum A ds`` against the boundary mass fluxes over the stages."""
    change = ds * float(np.sum(np.asarray(area_new) - np.asarray(area_old)))
    return abs(change - dt * float(np.dot(b, flux_in - np.asarray(stage_flux_out))))


def mass_balance(record) -> float:
    """Accumulated mass-balance drift of an Eulerian run."""
    if record.mass_defects is None:
        raise ValueError("mass balance is only tracked for the fixed-domain set-up")
    return float(np.sum(record.mass_defects))


def project_planar(phi3, params3: DimensionlessParams) -> np.ndarray:
    """Map 3D Eulerian states with planar data onto the 2D layout."""
    phi3 = np.asarray(phi3, dtype=float)
    if params3.dim != 3 or params3.lagrangian:
        raise ValueError("expects a 3D fixed-domain state")
    out = np.empty(phi3.shape[:-1] + (10,))
    out[..., 0] = phi3[..., 1]
    out[..., 1] = phi3[..., 2]
    out[..., 2:4] = phi3[..., 4:6]
    out[..., 4] = angle_from_quat(phi3[..., 6:10])
    out[..., 5] = phi3[..., 10]
    out[..., 6] = phi3[..., 13]
    out[..., 7:9] = phi3[..., 15:17]
    out[..., 9] = phi3[..., 17]
    return out


def planar_embedding_check(run3d, run2d) -> float:
    """Max componentwise deviation between matched snapshots of a 3D and a 2D run."""
    if len(run3d.snapshots) != len(run2d.snapshots):
        raise ValueError("runs have different snapshot counts")
    worst = 0.0
    for (t3, f3), (t2, f2) in zip(run3d.snapshots, run2d.snapshots):
        if abs(t3 - t2) > 1e-12 * max(1.0, abs(t2)):
            raise ValueError(f"snapshot times differ: {t3} vs {t2}")
        d = project_planar(f3, run3d.params) - f2
        # angles are only defined modulo 2 pi
        d[..., 4] = np.angle(np.exp(1j * d[..., 4]))
        worst = max(worst, float(np.max(np.abs(d), initial=0.0)))
    return worst


def centerline(field_, params: DimensionlessParams) -> np.ndarray:
    """Planar center-line points in outer coordinates, nozzle point first (2D only)."""
    if params.dim != 2:
        raise ValueError("center-line extraction is defined for 2D runs")
    pts = np.asarray(field_, dtype=float)[:, 2:4]
    return np.vstack([[1.0, 0.0], pts])


def polyline_distance(points, polyline) -> np.ndarray:
    """Distance of each point to a piecewise linear curve."""
    P = np.asarray(points, dtype=float)[:, None, :]
    a = np.asarray(polyline, dtype=float)[:-1][None]
    b = np.asarray(polyline, dtype=float)[1:][None]
    ab = b - a
    t = np.clip(np.sum((P - a) * ab, -1) / np.maximum(np.sum(ab * ab, -1), 1e-300), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.min(np.linalg.norm(P - proj, axis=-1), axis=1)


def arclength(polyline) -> np.ndarray:
    seg = np.linalg.norm(np.diff(np.asarray(polyline, dtype=float), axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])
