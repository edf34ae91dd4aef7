"""Time integration of the chemo-repulsion system and its volume-filling family.

The density equation rho_t = lap rho + chi div(m grad c) with mobility
m = rho (1 - eps rho)/c is advanced by an IMEX split: the drift flux is
explicit in conservative form (telescoping face sums keep the discrete mass
exact), the diffusion and the full linear part of gamma c_t = lap c - c + rho
are implicit. Both implicit solves are done modally in the cosine basis in
increment form, so the zero mode of the update is exactly zero and mass and
the cell-mean recurrence for c hold to round-off over long runs.
"""

import dataclasses
from dataclasses import dataclass, field as dfield

import numpy as np

from . import energy as energy_diag
from .grid import (Field, divergence_faces, from_cosine_modes, modal_eigenvalues,
                   to_cosine_modes, _values)


class SimulationError(RuntimeError):
    def __init__(self, msg, t=None):
        super().__init__(msg)
        self.t = t


class PositivityLoss(SimulationError):
    """New iterate left the admissible range; retry with halved dt or upwind."""


class NumericBlowup(SimulationError):
    """Non-finite values appeared in the state."""


@dataclass
class Params:
    """Model constants; M is the density mean, cached from the initial data."""

    chi: float = 1.0
    gamma: float = 1.0
    eps: float = 0.0
    M: float = None

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")


def params_for_initial(rho_I, chi=1.0, gamma=1.0, eps=0.0):
    """Build Params from the initial density, enforcing the eps range.

    Positive eps is admissible only up to 1/max(rho_I): beyond that the
    volume-filling entropy (1/eps)(1 - eps rho)log(1 - eps rho) leaves its
    domain and the capped mobility loses meaning.
    """
    v = _values(rho_I)
    M = float(np.mean(v))
    if not M > 0:
        raise ValueError("initial density must have positive mean")
    zeta0 = 1.0 / float(v.max())
    if eps > 0 and eps > zeta0:
        raise ValueError(
            f"eps={eps} outside the admissible range (0, {zeta0}] "
            f"(upper limit 1/max(rho_I))")
    return Params(chi=chi, gamma=gamma, eps=eps, M=M)


@dataclass
class State:
    rho: Field
    c: Field
    t: float = 0.0


@dataclass
class SchemeConfig:
    dt: float
    dt_adapt: bool = False
    drift_discretization: str = "central"
    linear_solver_tol: float = 1e-10
    c_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.drift_discretization not in ("central", "upwind"):
            raise ValueError(
                f"drift_discretization must be central or upwind, "
                f"got {self.drift_discretization!r}")
        if not 0 < self.linear_solver_tol <= 1e-6:
            raise ValueError(
                f"linear_solver_tol must be in (0, 1e-6], got {self.linear_solver_tol}")


@dataclass
class ProbeRecord:
    t: float
    mass: float
    cbar: float
    min_rho: float
    min_c: float
    dist_rho_inf: float
    dist_c_inf: float
    gradc_inf: float
    E: float
    D1: float = np.nan
    D2: float = np.nan
    D3: float = np.nan
    D4: float = np.nan
    B: float = np.nan
    inst_rate: float = np.nan
    residual: float = np.nan


@dataclass
class Trajectory:
    params: Params
    scheme: SchemeConfig
    probe_every: int
    records: list = dfield(default_factory=list)
    final_state: State = None
    final_dt: float = None
    aborted: bool = False
    abort_reason: str = None

    def series(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self):
        return self.series("t")


def drift_flux(state, params, discretization="central"):
    """Explicit face flux chi * m_face * (grad c)_face, zero on boundary faces.

    m_face is the arithmetic mean of the mobility in the two adjacent cells,
    or the donor-cell value (the side the drift carries mass from) for upwind.
    """
    g = state.rho.grid
    rho = _values(state.rho)
    c = _values(state.c)
    if np.any(c <= 0):
        raise PositivityLoss("drift flux needs c > 0 everywhere", t=state.t)
    m = rho * (1.0 - params.eps * rho) / c
    fluxes = []
    for ax, h in enumerate(g.spacing):
        gc = np.diff(c, axis=ax) / h
        lo = tuple(slice(None, -1) if k == ax else slice(None) for k in range(g.dim))
        hi = tuple(slice(1, None) if k == ax else slice(None) for k in range(g.dim))
        if discretization == "central":
            mf = 0.5 * (m[lo] + m[hi])
        else:
            # drift velocity is -chi (1-eps rho)/c grad c: donor sits on the
            # high-c side of the face
            mf = np.where(gc > 0, m[hi], m[lo])
        pad = [(0, 0)] * g.dim
        pad[ax] = (1, 1)
        fluxes.append(np.pad(params.chi * mf * gc, pad))
    return fluxes


def step(state, params, scheme):
    """One IMEX step. Solves are modal and in increment form: the correction
    added to the explicit predictor has an exactly vanishing zero mode, so
    sum(rho)*vol telescopes to round-off and cbar obeys the exact recurrence
    cbar' = (cbar + (dt/gamma) rhobar) / (1 + dt/gamma)."""
    g = state.rho.grid
    lam = modal_eigenvalues(g)
    dt = scheme.dt
    rho = _values(state.rho)
    c = _values(state.c)

    rhs = rho + dt * divergence_faces(g, drift_flux(state, params,
                                                   scheme.drift_discretization))
    rh = to_cosine_modes(g, rhs)
    rho1 = rhs + from_cosine_modes(g, rh * (-dt * lam / (1.0 + dt * lam)))
    ch = to_cosine_modes(g, c)
    r1h = to_cosine_modes(g, rho1)
    c1 = c + from_cosine_modes(
        g, dt * (r1h - (1.0 + lam) * ch) / (params.gamma + dt * (1.0 + lam)))

    t1 = state.t + dt
    if not (np.all(np.isfinite(rho1)) and np.all(np.isfinite(c1))):
        raise NumericBlowup(f"non-finite state at t={t1:.6g}", t=t1)
    if rho1.min() < 0:
        raise PositivityLoss(
            f"rho lost nonnegativity at t={t1:.6g} (min {rho1.min():.3e}); "
            "retry with halved dt or upwind drift", t=t1)
    if params.eps > 0 and rho1.max() > (1.0 + 1e-12) / params.eps:
        raise PositivityLoss(
            f"rho exceeded the volume-filling cap 1/eps at t={t1:.6g}", t=t1)
    if c1.min() < scheme.c_floor:
        raise PositivityLoss(
            f"c fell below the floor {scheme.c_floor:.1e} at t={t1:.6g}", t=t1)
    return State(Field(g, rho1), Field(g, c1), t1)


def reduced_form(state, params):
    """Shift to the perturbation variables (rho - M, c - M)."""
    g = state.rho.grid
    return (Field(g, _values(state.rho) - params.M),
            Field(g, _values(state.c) - params.M))


def from_reduced(u, v, params, t=0.0):
    g = u.grid
    return State(Field(g, _values(u) + params.M), Field(g, _values(v) + params.M), t)


def _probe(state, params, grid, energy_detail, prev):
    rho = _values(state.rho)
    c = _values(state.c)
    vol = grid.cell_volume
    M = params.M
    dist_rho = float(np.abs(rho - M).max())
    rec = ProbeRecord(
        t=state.t,
        mass=float(rho.sum() * vol),
        cbar=float(c.mean()),
        min_rho=float(rho.min()),
        min_c=float(c.min()),
        dist_rho_inf=dist_rho,
        dist_c_inf=float(np.abs(c - M).max()),
        gradc_inf=max(float(np.abs(np.diff(c, axis=ax)).max()) / h
                      for ax, h in enumerate(grid.spacing)),
        E=energy_diag.energy(state, params.eps),
    )
    if energy_detail:
        rec.D1, rec.D2, rec.D3, rec.D4 = energy_diag.dissipation(state, params.eps)
        rec.B = energy_diag.boundary_term(state)
    if prev is not None and prev.dist_rho_inf > 0 and dist_rho > 0:
        rec.inst_rate = -(np.log(dist_rho) - np.log(prev.dist_rho_inf)) \
            / (state.t - prev.t)
    return rec


def simulate(initial, params, scheme, t_end, probe_every=1, energy_detail=True):
    """Advance to t_end, recording a probe every probe_every steps.

    Positivity violations halve dt when dt_adapt is on (doubling back after 50
    clean steps); otherwise, and on non-finite values, the run stops with the
    abort reason and offending time in the trajectory.
    """
    rho = _values(initial.rho)
    c = _values(initial.c)
    if rho.min() < 0 or not rho.max() > 0:
        raise ValueError("initial density must be nonnegative and not identically 0")
    if c.min() <= 0:
        raise ValueError("initial concentration must be positive")
    if params.M is None:
        params = dataclasses.replace(params, M=float(rho.mean()))

    grid = initial.rho.grid
    traj = Trajectory(params=params, scheme=scheme, probe_every=probe_every)
    state = initial
    rec = _probe(state, params, grid, energy_detail, None)
    traj.records.append(rec)

    dt = scheme.dt
    clean = 0
    nstep = 0
    while state.t < t_end - 0.5 * dt:
        try:
            state = step(state, params, dataclasses.replace(scheme, dt=dt))
        except PositivityLoss as err:
            if scheme.dt_adapt and dt > 2 ** -20 * scheme.dt:
                dt *= 0.5
                clean = 0
                continue
            traj.aborted = True
            traj.abort_reason = str(err)
            break
        except NumericBlowup as err:
            traj.aborted = True
            traj.abort_reason = str(err)
            break
        nstep += 1
        clean += 1
        if scheme.dt_adapt and clean >= 50 and dt < scheme.dt:
            dt = min(2.0 * dt, scheme.dt)
            clean = 0
        if nstep % probe_every == 0:
            rec = _probe(state, params, grid, energy_detail, rec)
            traj.records.append(rec)

    traj.final_state = state
    traj.final_dt = dt
    return traj


def sweep_distances(initial, params_list, scheme, t_end, probe_every=1):
    """Advance one run per parameter set in lockstep from shared initial
    data and record the L2 distance between consecutive density fields at
    probe times.

    Returns (times, dists) with dists of shape (len(params_list)-1,
    n_probes); sup over the second axis gives the sup-in-time distances used
    for regularization-continuity ratios. Fixed dt only: lockstep needs all
    runs on one clock.
    """
    if len(params_list) < 2:
        raise ValueError("need at least two parameter sets to compare")
    if scheme.dt_adapt:
        raise ValueError("sweep comparison needs a fixed dt")
    grid = initial.rho.grid
    vol = grid.cell_volume
    states = [initial] * len(params_list)

    def gaps():
        return [np.sqrt(np.sum((states[i].rho.values
                                - states[i + 1].rho.values) ** 2) * vol)
                for i in range(len(states) - 1)]

    times = [0.0]
    dists = [gaps()]
    nstep = 0
    dt = scheme.dt
    while states[0].t < t_end - 0.5 * dt:
        states = [step(s, p, scheme) for s, p in zip(states, params_list)]
        nstep += 1
        if nstep % probe_every == 0:
            times.append(states[0].t)
            dists.append(gaps())
    return np.asarray(times), np.asarray(dists).T
