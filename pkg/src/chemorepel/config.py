"""Run configuration: one TOML file, flat dataclass, exhaustive validation.

Every module precondition that can be checked from the config alone is
checked here, and all violations are reported together before any compute.
A run is reproducible from its config text plus the seed.
"""

import dataclasses
import os
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .dynamics import State
from .grid import Field, build_grid, random_cosine_field

MAX_CELLS = 2 ** 24

PRESETS = ("constant", "perturbed", "checkpoint")
DRIFTS = ("central", "upwind")


class ConfigError(ValueError):
    """Carries the full list of validation failures."""

    def __init__(self, errors):
        self.errors = [str(e) for e in errors]
        super().__init__("\n".join(self.errors))


@dataclass
class RunConfig:
    # [domain]
    dim: int = 2
    extents: tuple = (1.0, 1.0)
    cells: tuple = (64, 64)
    # [params]
    chi: float = 1.0
    gamma: float = 1.0
    eps: float = 0.0
    eps_sweep: tuple = ()
    # [initial]
    preset: str = "perturbed"
    amplitude: float = 0.01
    mean_density: float = 1.0
    c_offset: float = None
    max_wavenumber: int = 4
    checkpoint: str = None
    # [scheme]
    dt: float = 1e-3
    dt_adapt: bool = False
    drift: str = "central"
    linear_solver_tol: float = 1e-8
    c_floor: float = 1e-12
    # [probes]
    t_end: float = 1.0
    probe_every: int = 1
    energy_detail: bool = True
    # [output]
    out: str = "run-output"
    # top level
    seed: int = 0
    # [ineq]
    ineq_samples: int = 100
    ineq_cells: tuple = (64, 32, 16)
    ineq_amplitude: float = 0.5
    ineq_max_wavenumber: int = 4
    # [linearized]
    margin_samples: int = 20
    margin_times: int = 50
    semigroup_samples: int = 200
    # [stationary]
    stationary_inits: int = 10
    stationary_tol: float = 1e-11  # above the residual round-off floor eps*M/h^2 at default grids
    stationary_amplitude: float = 0.8
    # original file text, kept for the manifest hash
    raw_text: str = ""


# TOML (section, key) -> dataclass field
_KEYMAP = {
    ("domain", "dim"): "dim",
    ("domain", "extents"): "extents",
    ("domain", "cells"): "cells",
    ("params", "chi"): "chi",
    ("params", "gamma"): "gamma",
    ("params", "eps"): "eps",
    ("params", "eps_sweep"): "eps_sweep",
    ("initial", "preset"): "preset",
    ("initial", "amplitude"): "amplitude",
    ("initial", "mean_density"): "mean_density",
    ("initial", "c_offset"): "c_offset",
    ("initial", "max_wavenumber"): "max_wavenumber",
    ("initial", "checkpoint"): "checkpoint",
    ("scheme", "dt"): "dt",
    ("scheme", "dt_adapt"): "dt_adapt",
    ("scheme", "drift"): "drift",
    ("scheme", "linear_solver_tol"): "linear_solver_tol",
    ("scheme", "c_floor"): "c_floor",
    ("probes", "t_end"): "t_end",
    ("probes", "every"): "probe_every",
    ("probes", "energy_detail"): "energy_detail",
    ("output", "dir"): "out",
    ("ineq", "samples"): "ineq_samples",
    ("ineq", "cells"): "ineq_cells",
    ("ineq", "amplitude"): "ineq_amplitude",
    ("ineq", "max_wavenumber"): "ineq_max_wavenumber",
    ("linearized", "margin_samples"): "margin_samples",
    ("linearized", "margin_times"): "margin_times",
    ("linearized", "semigroup_samples"): "semigroup_samples",
    ("stationary", "inits"): "stationary_inits",
    ("stationary", "tol"): "stationary_tol",
    ("stationary", "amplitude"): "stationary_amplitude",
}


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return (isinstance(x, (int, float)) and not isinstance(x, bool)
            and np.isfinite(x))


def _as_tuple(value, dim, cast):
    if isinstance(value, (list, tuple)):
        return tuple(cast(v) for v in value)
    return (cast(value),) * dim


def config_from_dict(doc, raw_text=""):
    """RunConfig from a parsed TOML document; unknown sections or keys are
    validation errors so typos cannot silently fall back to defaults."""
    errors = []
    fields = {"raw_text": raw_text}
    sections = {s for s, _ in _KEYMAP}
    for top, value in doc.items():
        if isinstance(value, dict):
            if top not in sections:
                errors.append(f"unknown section [{top}]")
                continue
            for key, v in value.items():
                name = _KEYMAP.get((top, key))
                if name is None:
                    errors.append(f"unknown key {key!r} in section [{top}]")
                else:
                    fields[name] = v
        elif top == "seed":
            fields["seed"] = value
        else:
            errors.append(f"unknown top-level key {top!r}")
    if errors:
        raise ConfigError(errors)
    cfg = RunConfig(**fields)
    # scalar extents/cells broadcast across axes once dim is known
    if _is_int(cfg.dim) and 1 <= cfg.dim <= 3:
        try:
            cfg = dataclasses.replace(
                cfg,
                extents=_as_tuple(cfg.extents, cfg.dim, float),
                cells=_as_tuple(cfg.cells, cfg.dim, int),
                eps_sweep=tuple(float(e) for e in cfg.eps_sweep),
                ineq_cells=tuple(int(n) for n in cfg.ineq_cells),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError([f"malformed list value: {exc}"])
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    errs = []

    def need(cond, msg):
        if not cond:
            errs.append(msg)

    need(_is_int(cfg.dim) and 1 <= cfg.dim <= 3,
         f"domain.dim must be 1, 2 or 3, got {cfg.dim!r}")
    if not errs:
        need(len(cfg.extents) == cfg.dim,
             f"domain.extents needs {cfg.dim} entries, got {len(cfg.extents)}")
        need(len(cfg.cells) == cfg.dim,
             f"domain.cells needs {cfg.dim} entries, got {len(cfg.cells)}")
        need(all(_is_num(L) and L > 0 for L in cfg.extents),
             f"domain.extents must be positive, got {cfg.extents}")
        need(all(_is_int(n) and n >= 2 for n in cfg.cells),
             f"domain.cells must be integers >= 2, got {cfg.cells}")
        if all(_is_int(n) and n >= 2 for n in cfg.cells):
            total = int(np.prod(cfg.cells))
            need(total <= MAX_CELLS,
                 f"total cells {total} exceeds the cap {MAX_CELLS}")
    need(_is_num(cfg.chi) and cfg.chi > 0,
         f"params.chi must be positive, got {cfg.chi!r}")
    need(_is_num(cfg.gamma) and cfg.gamma > 0,
         f"params.gamma must be positive, got {cfg.gamma!r}")
    need(_is_num(cfg.eps) and cfg.eps >= 0,
         f"params.eps must be >= 0, got {cfg.eps!r}")
    need(all(_is_num(e) and e > 0 for e in cfg.eps_sweep),
         f"params.eps_sweep entries must be positive, got {cfg.eps_sweep}")
    need(cfg.preset in PRESETS,
         f"initial.preset must be one of {PRESETS}, got {cfg.preset!r}")
    need(_is_num(cfg.amplitude) and 0 <= cfg.amplitude < 1,
         f"initial.amplitude must lie in [0, 1), got {cfg.amplitude!r}")
    need(_is_num(cfg.mean_density) and cfg.mean_density > 0,
         f"initial.mean_density must be positive, got {cfg.mean_density!r}")
    if cfg.c_offset is not None:
        need(_is_num(cfg.c_offset) and cfg.c_offset >= 0,
             f"initial.c_offset must be >= 0, got {cfg.c_offset!r}")
    need(_is_int(cfg.max_wavenumber) and cfg.max_wavenumber >= 1,
         f"initial.max_wavenumber must be an integer >= 1, "
         f"got {cfg.max_wavenumber!r}")
    if cfg.preset == "checkpoint":
        need(isinstance(cfg.checkpoint, str) and cfg.checkpoint,
             "initial.checkpoint path is required for the checkpoint preset")
        if isinstance(cfg.checkpoint, str) and cfg.checkpoint:
            need(os.path.exists(cfg.checkpoint),
                 f"initial.checkpoint file not found: {cfg.checkpoint}")
    need(_is_num(cfg.dt) and cfg.dt > 0,
         f"scheme.dt must be positive, got {cfg.dt!r}")
    need(isinstance(cfg.dt_adapt, bool),
         f"scheme.dt_adapt must be a boolean, got {cfg.dt_adapt!r}")
    need(cfg.drift in DRIFTS,
         f"scheme.drift must be one of {DRIFTS}, got {cfg.drift!r}")
    need(_is_num(cfg.linear_solver_tol) and 0 < cfg.linear_solver_tol <= 1e-6,
         f"scheme.linear_solver_tol must lie in (0, 1e-6], "
         f"got {cfg.linear_solver_tol!r}")
    need(_is_num(cfg.c_floor) and cfg.c_floor > 0,
         f"scheme.c_floor must be positive, got {cfg.c_floor!r}")
    need(_is_num(cfg.t_end) and cfg.t_end > 0,
         f"probes.t_end must be positive, got {cfg.t_end!r}")
    if _is_num(cfg.dt) and cfg.dt > 0 and _is_num(cfg.t_end):
        need(cfg.t_end >= cfg.dt,
             f"probes.t_end {cfg.t_end} is shorter than one step dt {cfg.dt}")
    need(_is_int(cfg.probe_every) and cfg.probe_every >= 1,
         f"probes.every must be an integer >= 1, got {cfg.probe_every!r}")
    need(isinstance(cfg.energy_detail, bool),
         f"probes.energy_detail must be a boolean, got {cfg.energy_detail!r}")
    need(isinstance(cfg.out, str) and cfg.out,
         f"output.dir must be a nonempty string, got {cfg.out!r}")
    need(_is_int(cfg.seed) and cfg.seed >= 0,
         f"seed must be a nonnegative integer, got {cfg.seed!r}")
    need(_is_int(cfg.ineq_samples) and cfg.ineq_samples >= 1,
         f"ineq.samples must be an integer >= 1, got {cfg.ineq_samples!r}")
    need(len(cfg.ineq_cells) == 3
         and all(_is_int(n) and n >= 4 for n in cfg.ineq_cells),
         f"ineq.cells needs three integers >= 4 (one per dimension), "
         f"got {cfg.ineq_cells}")
    need(_is_num(cfg.ineq_amplitude) and 0 < cfg.ineq_amplitude <= 0.8,
         f"ineq.amplitude must lie in (0, 0.8], got {cfg.ineq_amplitude!r}")
    need(_is_int(cfg.ineq_max_wavenumber) and cfg.ineq_max_wavenumber >= 1,
         f"ineq.max_wavenumber must be an integer >= 1, "
         f"got {cfg.ineq_max_wavenumber!r}")
    need(_is_int(cfg.margin_samples) and cfg.margin_samples >= 1,
         f"linearized.margin_samples must be an integer >= 1, "
         f"got {cfg.margin_samples!r}")
    need(_is_int(cfg.margin_times) and cfg.margin_times >= 2,
         f"linearized.margin_times must be an integer >= 2, "
         f"got {cfg.margin_times!r}")
    need(_is_int(cfg.semigroup_samples) and cfg.semigroup_samples >= 1,
         f"linearized.semigroup_samples must be an integer >= 1, "
         f"got {cfg.semigroup_samples!r}")
    need(_is_int(cfg.stationary_inits) and cfg.stationary_inits >= 1,
         f"stationary.inits must be an integer >= 1, "
         f"got {cfg.stationary_inits!r}")
    need(_is_num(cfg.stationary_tol) and 0 < cfg.stationary_tol <= 1e-8,
         f"stationary.tol must lie in (0, 1e-8], got {cfg.stationary_tol!r}")
    need(_is_num(cfg.stationary_amplitude) and 0 < cfg.stationary_amplitude < 2,
         f"stationary.amplitude must lie in (0, 2), "
         f"got {cfg.stationary_amplitude!r}")
    if errs:
        raise ConfigError(errs)
    return cfg


def load_config(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"])
    return config_from_dict(doc, raw_text=raw.decode("utf-8"))


def domain_grid(cfg):
    return build_grid(cfg.dim, cfg.extents, cfg.cells)


def initial_state(cfg, grid):
    """Initial (rho, c) for the configured preset.

    constant: both fields at the target mean, the exact equilibrium.
    perturbed: mean-zero cosine perturbations on rho and c; c additionally
    shifted by c_offset (default 0.1 * mean) so its spatial mean starts off
    equilibrium and the mean-relaxation rate is observable.
    checkpoint: fields read back from a previous run's final state.
    """
    if cfg.preset == "checkpoint":
        from .checkpoint import read_checkpoint

        cp = read_checkpoint(cfg.checkpoint)
        if cp.grid != grid:
            raise ConfigError([
                f"checkpoint grid {cp.grid.cells} on {cp.grid.extents} does "
                f"not match configured domain {grid.cells} on {grid.extents}"])
        return cp.state()
    M = cfg.mean_density
    if cfg.preset == "constant":
        rho = np.full(grid.shape, float(M))
        c = np.full(grid.shape, float(M))
    else:
        rng = np.random.default_rng(cfg.seed)
        f1 = random_cosine_field(grid, rng, cfg.max_wavenumber, 1.0)
        f2 = random_cosine_field(grid, rng, cfg.max_wavenumber, 1.0)
        off = 0.1 * M if cfg.c_offset is None else cfg.c_offset
        rho = M * (1.0 + cfg.amplitude * f1)
        c = (M + off) + M * cfg.amplitude * f2
    errs = []
    if rho.min() < 0:
        errs.append(f"initial rho dips to {rho.min():.3e}; "
                    f"reduce initial.amplitude")
    if c.min() <= 0:
        errs.append(f"initial c dips to {c.min():.3e}, must stay positive; "
                    f"reduce initial.amplitude or raise c_offset")
    if errs:
        raise ConfigError(errs)
    return State(rho=Field(grid, rho), c=Field(grid, c), t=0.0)
