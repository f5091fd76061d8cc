"""Radau IIA time stepping (s = 1, 2) for semi-explicit DAEs ``d/dt z(phi) = F(phi)``.

Components flagged algebraic have ``z = 0``; their rows of ``F`` are
constraints.  All stages of all cells are solved simultaneously by a damped
(simplified) Newton method with a finite-difference Jacobian that exploits
the nearest-neighbour coupling of the finite-volume stencil.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def s(self) -> int:
        return len(self.b)

    def stiffly_accurate(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.A[-1] - self.b) <= tol))

    def algebraic_weights(self) -> np.ndarray:
        """``A^{-T} b``: weights of the update for the algebraic components."""
        return np.linalg.solve(self.A.T, self.b)


def radau_tableau(s: int) -> ButcherTableau:
    if s == 1:
        return ButcherTableau(np.array([[1.0]]), np.array([1.0]), np.array([1.0]))
    if s == 2:
        return ButcherTableau(
            np.array([[5.0 / 12.0, -1.0 / 12.0], [3.0 / 4.0, 1.0 / 4.0]]),
            np.array([3.0 / 4.0, 1.0 / 4.0]),
            np.array([1.0 / 3.0, 1.0]),
        )
    raise ValueError(f"Radau IIA with s={s} stages is not supported (use 1 or 2)")


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-10
    max_iterations: int = 25
    damping: tuple = (1.0, 0.5, 0.25, 0.125)
    # simplified Newton: keep the factorized Jacobian while it contracts well
    reuse_jacobian: bool = True
    refresh_ratio: float = 0.25

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("Newton tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class NewtonError(RuntimeError):
    """Newton iteration failed; carries the best iterate and the residual history."""

    def __init__(self, message, x_best=None, residual_norm=np.inf, trace=()):
        super().__init__(message)
        self.x_best = x_best
        self.residual_norm = residual_norm
        self.trace = list(trace)


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    jacobian_evaluations: int
    trace: list = field(default_factory=list)


class LinearCache:
    """Holds a factorized Jacobian between Newton solves."""

    def __init__(self):
        self.solve: Optional[Callable] = None
        self.key = None

    def clear(self):
        self.solve = None
        self.key = None


def _norm(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


def fd_jacobian(fun, x, f0=None):
    """Dense forward-difference Jacobian, step sqrt(eps) * max(1, |x_j|)."""
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = _SQRT_EPS * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += h
        J[:, j] = (fun(xp) - f0) / h
    return J


def factorize(J):
    if sp.issparse(J):
        try:
            lu = spla.splu(sp.csc_matrix(J))
        except RuntimeError as exc:  # exactly singular
            raise np.linalg.LinAlgError(str(exc)) from exc
        return lu.solve
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(J, check_finite=True)
    if np.any(np.diag(lu[0]) == 0):
        raise np.linalg.LinAlgError("singular Jacobian")
    return lambda r: sla.lu_solve(lu, r)


def newton_solve(fun, x0, opts: NewtonOptions = None, jac=None, cache: LinearCache = None) -> NewtonResult:
    """Damped Newton iteration on ``fun(x) = 0`` (infinity norm).

    ``jac(x, fx)`` returns a dense or sparse Jacobian; forward differences
    are used when omitted.  With ``cache`` and ``opts.reuse_jacobian`` a
    previous factorization is tried first and refreshed when it stops
    contracting.
    """
    opts = opts or NewtonOptions()
    jac = jac or (lambda x, fx: fd_jacobian(fun, x, fx))
    x = np.array(x0, dtype=float, copy=True)
    r = fun(x)
    rn = _norm(r)
    trace = [rn]
    best = (rn, x.copy())
    solve = cache.solve if (cache is not None and opts.reuse_jacobian) else None
    current = False  # Jacobian evaluated at the present iterate
    n_jac = 0
    it = 0
    while True:
        if rn <= opts.tol:
            if cache is not None:
                cache.solve = solve
            return NewtonResult(x, it, rn, n_jac, trace)
        if it >= opts.max_iterations:
            break
        it += 1
        if solve is None or (not opts.reuse_jacobian and not current):
            try:
                solve = factorize(jac(x, r))
            except np.linalg.LinAlgError as exc:
                raise NewtonError(f"singular Jacobian: {exc}", best[1], best[0], trace) from exc
            n_jac += 1
            current = True
        dx = -solve(r)
        accepted = False
        for lam in opts.damping:
            xt = x + lam * dx
            rt = fun(xt)
            rtn = _norm(rt)
            if np.isfinite(rtn) and rtn < rn:
                accepted = True
                break
        if not accepted:
            if not current:
                solve = None
                continue
            trace.append(rn)
            raise NewtonError("no damped Newton step reduces the residual", best[1], best[0], trace)
        ratio = rtn / rn
        x, r, rn = xt, rt, rtn
        trace.append(rn)
        if rn < best[0]:
            best = (rn, x.copy())
        current = False
        if opts.reuse_jacobian and ratio > opts.refresh_ratio:
            solve = None
    raise NewtonError(f"Newton did not converge in {opts.max_iterations} iterations "
                      f"(residual {best[0]:.3e})", best[1], best[0], trace)


# -- stage system ----------------------------------------------------------------

def banded_fd_jacobian(rhs, phi, t, f0, coupling: int):
    """Sparse Jacobian of a cell-stencil function by grouped forward differences.

    ``rhs`` maps (N, m) -> (N, m) and row block i depends only on cells
    within ``coupling`` of i, so cells ``2*coupling+1`` apart are perturbed
    together.
    """
    N, m = phi.shape
    ncolors = min(N, 2 * coupling + 1)
    rows, cols, vals = [], [], []
    offsets = np.arange(-coupling, coupling + 1)
    comp = np.arange(m)
    for color in range(ncolors):
        cells = np.arange(color, N, ncolors)
        for k in range(m):
            h = _SQRT_EPS * np.maximum(1.0, np.abs(phi[cells, k]))
            pert = phi.copy()
            pert[cells, k] += h
            df = rhs(pert, t) - f0
            rc = cells[:, None] + offsets[None, :]
            valid = (rc >= 0) & (rc < N)
            c_idx = np.broadcast_to(cells[:, None], rc.shape)[valid]
            r_idx = rc[valid]
            hh = np.broadcast_to(h[:, None], rc.shape)[valid]
            block = df[r_idx] / hh[:, None]  # (nnz_cells, m)
            rows.append((r_idx[:, None] * m + comp[None, :]).ravel())
            cols.append(np.repeat(c_idx * m + k, m))
            vals.append(block.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N * m, N * m))


def local_fd_jacobian(fun, phi):
    """Block-diagonal Jacobian of a cell-local map (N, m) -> (N, m)."""
    N, m = phi.shape
    f0 = fun(phi)
    blocks = np.empty((N, m, m))
    for k in range(m):
        h = _SQRT_EPS * np.maximum(1.0, np.abs(phi[:, k]))
        pert = phi.copy()
        pert[:, k] += h
        blocks[:, :, k] = (fun(pert) - f0) / h[:, None]
    return sp.block_diag(list(blocks), format="csr") if N > 1 else sp.csr_matrix(blocks[0])


@dataclass
class StepResult:
    phi: np.ndarray
    stages: np.ndarray
    stage_rhs: np.ndarray
    newton: NewtonResult
    update_discrepancy: float


class RadauIntegrator:
    """Fixed-step Radau IIA stepper; owns the Jacobian workspace between steps."""

    def __init__(self, stages: int = 2, opts: NewtonOptions = None):
        self.tableau = radau_tableau(stages)
        if not self.tableau.stiffly_accurate():
            raise ValueError("tableau must be stiffly accurate")
        self.opts = opts or NewtonOptions()
        self.cache = LinearCache()
        self._alg_weights = self.tableau.algebraic_weights()
        self.newton_iterations = 0
        self.jacobian_evaluations = 0

    def step(self, system, phi_n, t: float, dt: float) -> StepResult:
        if dt <= 0:
            raise ValueError("dt must be positive")
        phi_n = np.asarray(phi_n, dtype=float)
        N, m = phi_n.shape
        tab = self.tableau
        s = tab.s
        alg = np.asarray(system.algebraic, dtype=bool)
        diff = ~alg
        z_n = system.z(phi_n)
        times = t + tab.c * dt
        coupling = getattr(system, "coupling", None)

        key = (N, m, dt, id(type(system)))
        if self.cache.key != key:
            self.cache.clear()
            self.cache.key = key

        def unpack(x):
            return x.reshape(s, N, m)

        def residual(x):
            X = unpack(x)
            F = np.stack([system.rhs(X[i], times[i]) for i in range(s)])
            G = np.empty_like(X)
            for i in range(s):
                Zi = system.z(X[i])
                acc = np.tensordot(tab.A[i], F, axes=1)
                G[i] = np.where(diff, Zi - z_n - dt * acc, F[i])
            return G.ravel()

        def jacobian(x, gx):
            X = unpack(x)
            JF, ZP = [], []
            for i in range(s):
                f0 = system.rhs(X[i], times[i])
                if coupling is None:
                    J = sp.csr_matrix(fd_jacobian(lambda y: system.rhs(y.reshape(N, m), times[i]).ravel(),
                                                  X[i].ravel(), f0.ravel()))
                else:
                    J = banded_fd_jacobian(system.rhs, X[i], times[i], f0, coupling)
                JF.append(J)
                ZP.append(local_fd_jacobian(system.z, X[i]))
            dmask = sp.diags(np.tile(diff, N).astype(float))
            amask = sp.diags(np.tile(alg, N).astype(float))
            blocks = [[None] * s for _ in range(s)]
            for i in range(s):
                for j in range(s):
                    blk = -dt * tab.A[i, j] * (dmask @ JF[j])
                    if i == j:
                        blk = blk + dmask @ ZP[i] + amask @ JF[i]
                    blocks[i][j] = blk
            return sp.bmat(blocks, format="csc")

        x0 = np.tile(phi_n, (s, 1, 1)).ravel()
        res = newton_solve(residual, x0, self.opts, jac=jacobian, cache=self.cache)
        self.newton_iterations += res.iterations
        self.jacobian_evaluations += res.jacobian_evaluations

        X = unpack(res.x).copy()
        F = np.stack([system.rhs(X[i], times[i]) for i in range(s)])
        # printed update formulas; for stiffly accurate tableaus both reduce to the last stage
        z_upd = z_n + dt * np.tensordot(tab.b, F, axes=1)
        alg_upd = phi_n + np.tensordot(self._alg_weights, X - phi_n[None], axes=1)
        disc_z = _norm((z_upd - system.z(X[-1]))[:, diff])
        disc_a = _norm((alg_upd - X[-1])[:, alg]) if alg.any() else 0.0
        if disc_z > 2.0 * self.opts.tol + 1e-14 or disc_a > 1e-10 * max(1.0, _norm(X[-1][:, alg]) if alg.any() else 1.0):
            raise AssertionError(f"stiffly accurate update mismatch ({disc_z:.2e}, {disc_a:.2e})")
        phi_new = X[-1].copy()
        post = getattr(system, "post", None)
        if post is not None:
            phi_new = post(phi_new)
        return StepResult(phi_new, X, F, res, max(disc_z, disc_a))


def dae_step(system, phi_n, t, dt, tableau_stages: int = 2, opts: NewtonOptions = None) -> StepResult:
    """One Radau IIA step with a throw-away integrator."""
    return RadauIntegrator(tableau_stages, opts).step(system, phi_n, t, dt)


@dataclass
class DAESystem:
    """Generic semi-explicit DAE on an (N, m) array of unknowns."""

    z: Callable
    rhs: Callable
    algebraic: np.ndarray
    coupling: Optional[int] = None
    post: Optional[Callable] = None
