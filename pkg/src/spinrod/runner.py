"""Run configuration, time loops for both set-ups, convergence ladders and CSV output."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .assembly import Grid, SemiDiscreteSystem, assemble_rhs, grow, initial_field
from .radau import NewtonError, NewtonOptions, RadauIntegrator
from .state import DimensionlessParams, Setup, algebraic_mask, component_names
from .verify import ConvergenceTable, constraint_residual, l2_error, mass_defect, steady_residual

log = logging.getLogger(__name__)

CFL = 0.9


class ConfigError(ValueError):
    pass


class StepFailure(RuntimeError):
    """Newton failure inside a run; carries the failing time and the residual trace."""

    def __init__(self, message, t, trace=()):
        super().__init__(message)
        self.t = t
        self.trace = list(trace)


def _inverse(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


@dataclass(frozen=True)
class RunConfig:
    setup: Setup = Setup.EULERIAN_INFLOW_OUTFLOW
    dim: int = 2
    Re: float = 1.0
    Rb: float = math.inf
    Fr: float = math.inf
    eps: float = 0.1
    ell: float = 1.0
    ds: float = 0.0125
    dt: Optional[float] = None
    tEnd: float = 1.0
    radauStages: int = 2
    snapshotEvery: int = 0
    outputPath: Optional[str] = None
    newtonTol: float = 1e-10
    newtonMaxIter: int = 25
    steadyThreshold: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "setup", Setup.parse(self.setup))
        if not self.ds > 0:
            raise ConfigError("cell size must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.tEnd > 0:
            raise ConfigError("tEnd must be positive")
        if self.radauStages not in (1, 2):
            raise ConfigError("radauStages must be 1 or 2")
        if self.snapshotEvery < 0:
            raise ConfigError("snapshotEvery must be >= 0")
        if not (self.Rb > 0 and self.Fr > 0):
            raise ConfigError("Rb and Fr must be positive (or inf)")
        try:
            self.params()
            self.newton()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.lagrangian:
            n = self.ell / self.ds
            if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
                raise ConfigError(f"ell / ds = {n} must be a positive integer")

    @property
    def lagrangian(self) -> bool:
        return self.setup is Setup.LAGRANGIAN_INFLOW

    def params(self) -> DimensionlessParams:
        return DimensionlessParams(Re=self.Re, RbInv=_inverse(self.Rb), FrInv=_inverse(self.Fr),
                                   eps=self.eps, ell=self.ell, dim=self.dim, setup=self.setup)

    def newton(self) -> NewtonOptions:
        return NewtonOptions(tol=self.newtonTol, max_iterations=self.newtonMaxIter)

    def n_cells(self) -> int:
        return int(round(self.ell / self.ds))

    def time_step(self, u_max: float = 1.0) -> float:
        if self.dt is not None:
            return self.dt
        return self.ds if self.lagrangian else CFL * self.ds / u_max

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def echo(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, Setup):
                val = val.value
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


_ALIASES = {"dsigma": "ds", "stages": "radauStages", "tend": "tEnd", "t_end": "tEnd",
            "radau_stages": "radauStages", "snapshot_every": "snapshotEvery",
            "output": "outputPath", "output_path": "outputPath",
            "newton_tol": "newtonTol", "newton_maxiter": "newtonMaxIter",
            "steady_threshold": "steadyThreshold", "re": "Re", "rb": "Rb", "fr": "Fr"}


def _convert(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    t = kinds[name]
    text = raw.strip()
    if name == "setup":
        return text
    if name == "outputPath":
        return text or None
    if name == "dt" and text.lower() in ("", "none", "auto"):
        return None
    if "int" in str(t) and name != "dt":
        return int(text)
    return float(text)


def config_from_mapping(mapping: dict, base: RunConfig = None) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    changes = {}
    for key, raw in mapping.items():
        name = key if key in known else _ALIASES.get(key, _ALIASES.get(key.lower()))
        if name is None:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            changes[name] = _convert(name, str(raw))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    try:
        return replace(base or RunConfig(), **changes)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path, overrides: dict = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    mapping = parse_config_text(text)
    mapping.update(overrides or {})
    return config_from_mapping(mapping)


# -- runs ----------------------------------------------------------------------

@dataclass
class RunRecord:
    config: RunConfig
    params: DimensionlessParams
    snapshots: list = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0
    newton_iterations: int = 0
    jacobian_evaluations: int = 0
    failures: int = 0
    mass_defects: Optional[list] = None
    constraint_history: list = field(default_factory=list)
    quat_drift: float = 0.0
    steady_history: list = field(default_factory=list)
    reached_threshold: Optional[bool] = None

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1][1]

    @property
    def t_final(self) -> float:
        return self.snapshots[-1][0]

    def grid(self, idx: int = -1) -> Grid:
        t, f = self.snapshots[idx]
        if self.params.lagrangian:
            return Grid(self.config.ds, len(f), self.params.setup, self.params.dim, t)
        return Grid.eulerian(self.params, len(f))


class Simulation:
    """Fixed-step driver for one configuration; usable step by step."""

    def __init__(self, config: RunConfig, initial: np.ndarray = None, t0: float = 0.0):
        self.config = config
        self.params = config.params()
        self.system = SemiDiscreteSystem(self.params, config.ds)
        self.integrator = RadauIntegrator(config.radauStages, config.newton())
        m = len(component_names(self.params))
        if initial is not None:
            self.phi = np.array(initial, dtype=float, copy=True)
        elif self.params.lagrangian:
            if t0 != 0:
                raise ConfigError("growing runs without an initial field must start at t = 0")
            self.phi = np.empty((0, m))
        else:
            self.phi = initial_field(Grid.eulerian(self.params, config.n_cells()), self.params)
        self.t0 = t0
        self.k = 0
        self.dt = None

    def plan(self, duration: float):
        if self.params.lagrangian:
            dt = self.config.time_step()
        else:
            u = self.phi[:, 2 if self.params.dim == 3 else 1]
            dt = self.config.time_step(max(1.0, float(np.max(u))))
        n = max(1, math.ceil(duration / dt - 1e-9))
        return n, duration / n

    def time(self) -> float:
        return self.t0 + self.k * self.dt

    def step(self):
        """Advance by one step; returns the Radau step result (or None while the domain is empty)."""
        t = self.time()
        if self.params.lagrangian:
            self.phi = grow(self.phi, t, self.dt, self.config.ds, self.params)
            if len(self.phi) == 0:
                self.k += 1
                return None
        try:
            res = self.integrator.step(self.system, self.phi, t, self.dt)
        except NewtonError as exc:
            raise StepFailure(f"Newton failure at t = {t:.6g}: {exc}", t, exc.trace) from exc
        self.phi = res.phi
        self.k += 1
        return res


def _observe(record, sim, phi):
    if len(phi) == 0:
        return
    p = record.params
    record.constraint_history.append(constraint_residual(assemble_rhs(phi, sim.config.ds, p), p))
    if p.dim == 3:
        q = phi[:, 6:10]
        record.quat_drift = max(record.quat_drift, float(np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0))))


def _mass_bookkeeping(record, sim, old, res):
    p = record.params
    ia, iu = (13, 2) if p.dim == 3 else (6, 1)
    out = res.stages[:, -1, iu] * res.stages[:, -1, ia]
    record.mass_defects.append(mass_defect(old[:, ia], res.phi[:, ia], sim.config.ds, sim.dt,
                                           sim.integrator.tableau.b, out))


def run_simulate(config: RunConfig, write: bool = None, steady_threshold: float = None,
                 initial: np.ndarray = None, t0: float = 0.0) -> RunRecord:
    """Integrate from the initial state over ``tEnd``.

    With ``steady_threshold`` the loop stops early once the steady residual
    drops below it.
    """
    sim = Simulation(config, initial, t0)
    n, dt = sim.plan(config.tEnd)
    sim.dt = dt
    record = RunRecord(config, sim.params, dt=dt)
    if not sim.params.lagrangian:
        record.mass_defects = []
    record.snapshots.append((t0, sim.phi.copy()))
    _observe(record, sim, sim.phi)
    grid = None if sim.params.lagrangian else Grid.eulerian(sim.params, len(sim.phi))
    if steady_threshold is not None and grid is not None:
        r = steady_residual(sim.phi, grid, sim.params)
        record.steady_history.append((t0, r))
        if r < steady_threshold:
            record.reached_threshold = True
            _finish(record, sim, write)
            return record
    for k in range(n):
        old = sim.phi
        res = sim.step()
        record.steps += 1
        if res is not None:
            if record.mass_defects is not None:
                _mass_bookkeeping(record, sim, old, res)
        last = k == n - 1
        stop = False
        if steady_threshold is not None and grid is not None:
            r = steady_residual(sim.phi, grid, sim.params)
            record.steady_history.append((sim.time(), r))
            stop = r < steady_threshold
        if last or stop or (config.snapshotEvery and (k + 1) % config.snapshotEvery == 0):
            record.snapshots.append((sim.time(), sim.phi.copy()))
            _observe(record, sim, sim.phi)
        if stop:
            break
    if steady_threshold is not None:
        record.reached_threshold = bool(record.steady_history and record.steady_history[-1][1] < steady_threshold)
    _finish(record, sim, write)
    return record


def _finish(record, sim, write):
    record.newton_iterations = sim.integrator.newton_iterations
    record.jacobian_evaluations = sim.integrator.jacobian_evaluations
    if write is None:
        write = record.config.outputPath is not None
    if write:
        write_record(record, record.config.outputPath)


def run_steady(config: RunConfig, threshold: float = None) -> RunRecord:
    if config.lagrangian:
        raise ConfigError("steady runs need the fixed-domain set-up")
    thr = config.steadyThreshold if threshold is None else threshold
    return run_simulate(config, steady_threshold=thr)


def sweep(configs, workers: int = None):
    """Run independent configurations on worker threads; results keep input order."""
    workers = workers or min(len(configs), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run_simulate, configs))


# -- convergence ladders ----------------------------------------------------------

def restrict(fine: np.ndarray, factor: int) -> np.ndarray:
    """Average blocks of ``factor`` fine cells onto the coarse grid."""
    if len(fine) % factor:
        raise ValueError("fine cell count is not a multiple of the coarsening factor")
    return fine.reshape(len(fine) // factor, factor, -1).mean(axis=1)


def run_converge(config: RunConfig, mode: str = "time", levels: int = 4, ref_factor: int = 4,
                 steps=None) -> ConvergenceTable:
    """Self-convergence ladder: halve the step ``levels - 1`` times, reference ``ref_factor`` finer."""
    if levels < 3:
        raise ConfigError("a convergence study needs at least 3 levels")
    params = config.params()
    alg = algebraic_mask(params)
    if mode == "time":
        dt0 = config.time_step()
        steps = steps or [dt0 / 2**k for k in range(levels)]
        ref = run_simulate(config.replace(dt=steps[-1] / ref_factor, outputPath=None), write=False).final
        table = ConvergenceTable()
        for h in steps:
            f = run_simulate(config.replace(dt=h, outputPath=None), write=False).final
            if f.shape != ref.shape:
                raise ValueError("time ladder produced different cell counts; choose dt dividing ds")
            table.add(h, l2_error(f, ref, config.ds, ~alg), l2_error(f, ref, config.ds, alg))
        return table
    if mode == "space":
        h0 = config.ds
        steps = steps or [h0 / 2**k for k in range(levels)]
        dt_scale = config.time_step() / h0

        def solve(h):
            return run_simulate(config.replace(ds=h, dt=dt_scale * h, outputPath=None), write=False).final

        h_ref = steps[-1] / ref_factor
        ref = solve(h_ref)
        table = ConvergenceTable()
        for h in steps:
            f = solve(h)
            factor = int(round(h / h_ref))
            r = restrict(ref, factor)
            if config.lagrangian:
                r = r[-len(f):]
            table.add(h, l2_error(f, r, h, ~alg), l2_error(f, r, h, alg))
        return table
    raise ConfigError(f"unknown convergence mode {mode!r}")


# -- output ------------------------------------------------------------------------

def cell_centers(record: RunRecord, idx: int = -1) -> np.ndarray:
    return record.grid(idx).centers()


def snapshot_csv(field_, centers, params) -> str:
    names = component_names(params)
    lines = [",".join(("cell_index", "s_center") + names)]
    for i, (s, row) in enumerate(zip(centers, field_)):
        lines.append(",".join([str(i), f"{s:.17g}"] + [f"{x:.17g}" for x in row]))
    return "\n".join(lines) + "\n"


def summary_text(record: RunRecord) -> str:
    stats = {
        "steps": record.steps,
        "dt": f"{record.dt:.17g}",
        "t_final": f"{record.t_final:.17g}",
        "cells_final": len(record.final),
        "newton_iterations": record.newton_iterations,
        "jacobian_evaluations": record.jacobian_evaluations,
        "failures": record.failures,
        "max_constraint_residual": f"{max(record.constraint_history, default=0.0):.3e}",
        "quaternion_drift": f"{record.quat_drift:.3e}",
    }
    if record.mass_defects is not None:
        stats["mass_drift"] = f"{float(np.sum(record.mass_defects)):.3e}"
    if record.steady_history:
        stats["steady_residual"] = f"{record.steady_history[-1][1]:.3e}"
        stats["steady_reached"] = record.reached_threshold
    body = "".join(f"{k} = {v}\n" for k, v in stats.items())
    return "# configuration\n" + record.config.echo() + "# statistics\n" + body


def write_record(record: RunRecord, path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    index = ["index,t,file"]
    for k, (t, f) in enumerate(record.snapshots):
        name = f"snapshot_{k:05d}.csv"
        centers = cell_centers(record, k)
        (out / name).write_text(snapshot_csv(f, centers, record.params))
        index.append(f"{k},{t:.17g},{name}")
    (out / "snapshots.csv").write_text("\n".join(index) + "\n")
    (out / "summary.txt").write_text(summary_text(record))
    return out


def config_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d["setup"] = config.setup.value
    return d
