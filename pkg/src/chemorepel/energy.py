"""Energy, dissipation integrals, boundary flux, and the identity audit.

The energy E_eps = int(rho log rho + (1/eps)(1-eps rho)log(1-eps rho)
+ 2|grad sqrt c|^2) balances four dissipation integrals against a boundary
flux along trajectories; on boxes the flux is nonpositive up to quadrature
noise and E_eps is a Lyapunov functional.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, integrate, _values
from .norms import grad_sq_integral, log_hessian_integrand
from .stencils import d1_o4, raw_gradient


@dataclass
class EnergyReport:
    t: float
    E: float
    D1: float
    D2: float
    D3: float
    D4: float
    B: float
    residual: float = np.nan


def energy(state, eps):
    """E_eps by midpoint quadrature; the entropies are extended by continuity
    (s log s -> 0 at s = 0, likewise for the volume-filling term at rho = 1/eps)."""
    g = state.rho.grid
    rho = _values(state.rho)
    c = _values(state.c)
    if rho.min() < 0:
        raise ValueError("energy needs rho >= 0")
    if c.min() <= 0:
        raise ValueError("energy needs c > 0")
    vol = g.cell_volume
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(rho > 0, rho * np.log(np.where(rho > 0, rho, 1.0)), 0.0)
    E = float(np.sum(ent)) * vol
    if eps > 0:
        q = 1.0 - eps * rho
        if q.min() < 0:
            raise ValueError("energy needs rho <= 1/eps when eps > 0")
        ent2 = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0) / eps
        E += float(np.sum(ent2)) * vol
    return E + 2.0 * grad_sq_integral(Field(g, np.sqrt(c)))


def dissipation(state, eps):
    """The four nonnegative integrals (D1, D2, D3, D4).

    D1 = int |grad rho|^2 / (rho(1-eps rho)) comes back inf when the mobility
    denominator vanishes where the gradient does not; cells where both vanish
    contribute 0 (the analytic limit).
    """
    g = state.rho.grid
    rho = _values(state.rho)
    c = _values(state.c)
    if c.min() <= 0:
        raise ValueError("dissipation needs c > 0")
    vol = g.cell_volume
    gr2 = sum(x * x for x in raw_gradient(rho, g.spacing))
    gc2 = sum(x * x for x in raw_gradient(c, g.spacing))
    denom = rho * (1.0 - eps * rho)
    if np.any((denom <= 0) & (gr2 > 0)):
        D1 = math.inf
    else:
        D1 = float(np.sum(np.where(denom > 0, gr2 / np.where(denom > 0, denom, 1.0),
                                   0.0))) * vol
    D2 = integrate(g, log_hessian_integrand(state.c))
    D3 = float(np.sum(rho * gc2 / (2.0 * c * c))) * vol
    D4 = float(np.sum(gc2 / (2.0 * c))) * vol
    return D1, D2, D3, D4


def normal_flux_of_gradsq(grid, phi):
    """(1/2) sum over boundary faces of (1/phi_adj) d_nu |grad phi|^2 * area.

    |grad phi|^2 is built from fourth-order cell gradients and d_nu is a
    three-point one-sided normal difference (exact on quadratics); with the
    second-order gradients the one-sided/central error mismatch next to the
    wall would divide by h and cap the quadrature at O(h).
    """
    phi = np.asarray(phi, dtype=float)
    hs = grid.spacing
    w = sum(d1_o4(phi, ax, h) ** 2 for ax, h in enumerate(hs))
    d = grid.dim
    tot = 0.0
    for ax, h in enumerate(hs):
        area = float(np.prod([hs[k] for k in range(d) if k != ax])) if d > 1 else 1.0
        s = lambda a, b: tuple(slice(a, b) if k == ax else slice(None)
                               for k in range(d))
        if phi.shape[ax] >= 3:
            dnu_l = (2 * w[s(0, 1)] - 3 * w[s(1, 2)] + w[s(2, 3)]) / h
            dnu_r = (2 * w[s(-1, None)] - 3 * w[s(-2, -1)] + w[s(-3, -2)]) / h
        else:
            dnu_l = (w[s(0, 1)] - w[s(1, 2)]) / h
            dnu_r = (w[s(-1, None)] - w[s(-2, -1)]) / h
        tot += 0.5 * float(np.sum(dnu_l / phi[s(0, 1)])) * area
        tot += 0.5 * float(np.sum(dnu_r / phi[s(-1, None)])) * area
    return tot


def boundary_term(state):
    """Boundary flux B = (1/2) oint (1/c) d_nu |grad c|^2 ds."""
    c = _values(state.c)
    if c.min() <= 0:
        raise ValueError("boundary term needs c > 0")
    return normal_flux_of_gradsq(state.c.grid, c)


def report(state, eps):
    D1, D2, D3, D4 = dissipation(state, eps)
    return EnergyReport(t=state.t, E=energy(state, eps), D1=D1, D2=D2, D3=D3,
                        D4=D4, B=boundary_term(state))


@dataclass
class AuditResult:
    residuals: np.ndarray
    max_residual: float
    monotone: bool
    max_scaled_increment: float


def audit_energy_identity(trajectory):
    """Per-probe residual of dE/dt + D1 + D2 + D3 + D4 = B, with dE/dt by
    centered differences of the sampled energy.

    Needs uniformly spaced probes with dissipation detail, and chi = gamma = 1
    (the identity is established only there; other runs are unchecked).
    """
    p = trajectory.params
    if p.chi != 1.0:
        raise ValueError("energy identity unchecked for chi != 1")
    if p.gamma != 1.0:
        raise ValueError("energy identity unchecked for gamma != 1")
    ts = trajectory.times
    if len(ts) < 3:
        raise ValueError("need at least 3 probes to audit")
    dts = np.diff(ts)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * dts[0]:
        raise ValueError("audit needs uniform probe spacing")
    E = trajectory.series("E")
    D = sum(trajectory.series(k) for k in ("D1", "D2", "D3", "D4"))
    B = trajectory.series("B")
    if np.any(np.isnan(D)):
        raise ValueError("trajectory was recorded without dissipation detail")

    res = np.full(len(ts), np.nan)
    res[1:-1] = (E[2:] - E[:-2]) / (ts[2:] - ts[:-2]) + D[1:-1] - B[1:-1]
    for rec, r in zip(trajectory.records, res):
        rec.residual = r
    inc = np.diff(E) / (1.0 + np.abs(E[:-1]))
    return AuditResult(
        residuals=res,
        max_residual=float(np.nanmax(np.abs(res))),
        monotone=bool(np.all(inc <= 1e-8)),
        max_scaled_increment=float(inc.max()),
    )


def default_kappa0(grid):
    """Half of min(lambda1, 1): safely inside every decay rate in play."""
    from .grid import lambda1

    return 0.5 * min(lambda1(grid), 1.0)


def exp_weighted_dissipation(trajectory, kappa0=None):
    """sup over probe times T of int_0^T e^{-kappa0 (T-s)} w(s) ds with
    w = D1 + D2 + 2 D3 + 2 D4, by trapezoid (the exponential weight factors,
    so the windowed integrals satisfy an exact one-probe recurrence)."""
    if kappa0 is None:
        kappa0 = default_kappa0(trajectory.final_state.rho.grid)
    ts = trajectory.times
    w = (trajectory.series("D1") + trajectory.series("D2")
         + 2.0 * trajectory.series("D3") + 2.0 * trajectory.series("D4"))
    if np.any(np.isnan(w)):
        raise ValueError("trajectory was recorded without dissipation detail")
    sup = 0.0
    I = 0.0
    for j in range(1, len(ts)):
        dt = ts[j] - ts[j - 1]
        decay = np.exp(-kappa0 * dt)
        I = decay * I + 0.5 * dt * (decay * w[j - 1] + w[j])
        sup = max(sup, I)
    return sup


def dissipation_time_integral(trajectory):
    """Running trapezoid integral of D1 + D2 + 2 D3 + 2 D4 along the probes.

    Along decaying runs the series is monotone with increments over [T, 2T]
    shrinking to 0, the discrete trace of the integral being finite on [0, inf).
    """
    ts = trajectory.times
    w = (trajectory.series("D1") + trajectory.series("D2")
         + 2.0 * trajectory.series("D3") + 2.0 * trajectory.series("D4"))
    out = np.zeros(len(ts))
    out[1:] = np.cumsum(0.5 * np.diff(ts) * (w[1:] + w[:-1]))
    return ts, out
