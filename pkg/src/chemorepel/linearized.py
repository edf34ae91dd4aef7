"""Linearization around the constant state, evolved exactly mode by mode.

Each Neumann eigenmode with eigenvalue lam >= 0 of -lap evolves by the 2x2
system d/dt (u, v) = [[-lam, -a lam], [1, -lam - 1]] (u, v), whose matrix
exponential is closed-form. That gives machine-precision trajectories to
check the sharp quadratic decay estimate against, and a discrete heat
semigroup whose L^p-L^q envelope constants can be estimated empirically.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid import (Field, from_cosine_modes, lambda1, modal_eigenvalues,
                   random_cosine_field, to_cosine_modes, _values)
from .norms import lp_norm
from .stencils import raw_gradient


@dataclass(frozen=True)
class BlockOperator:
    """The frozen linearized generator; a = 1 - eps M in [1/2, 1]."""

    grid: object
    a: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.a <= 1.0:
            raise ValueError(f"coupling a must lie in [1/2, 1], got {self.a}")


@dataclass
class LinState:
    u: Field
    v: Field
    t: float = 0.0


def block_exponential(lam, a, t):
    """Entries of exp(t [[-lam, -a lam], [1, -lam-1]]), vectorized over lam.

    With s = -(2 lam + 1)/2 and disc = 1 - 4 a lam the eigenvalues are
    s +- sqrt(disc)/2; cosh/cos and sinh/sin branches share one formula via
    sinch = sinh(w t)/w (resp. sin, resp. t at disc = 0).
    """
    lam = np.asarray(lam, dtype=float)
    s = -(2.0 * lam + 1.0) / 2.0
    disc = 1.0 - 4.0 * a * lam
    om = np.sqrt(np.abs(disc)) / 2.0
    wt = np.minimum(om * t, 700.0)  # exp overflow guard; e^{st} kills it anyway
    pos = disc > 0
    ch = np.where(pos, np.cosh(wt), np.cos(om * t))
    sh = np.where(pos, np.sinh(wt), np.sin(om * t))
    safe = np.where(om == 0, 1.0, om)
    sinch = np.where(np.abs(disc) < 1e-300, t, sh / safe)
    est = np.exp(s * t)
    e11 = est * (ch + 0.5 * sinch)
    e12 = est * (-a * lam * sinch)
    e21 = est * sinch
    e22 = est * (ch - 0.5 * sinch)
    return e11, e12, e21, e22


def _check_mean_zero(u):
    v = _values(u)
    if abs(v.mean()) > 1e-10 * (1.0 + np.abs(v).max()):
        raise ValueError(f"u must be mean-zero, got mean {v.mean():.3e}")


def evolve_linear(init, a, t):
    """Evolve by duration t with the exact modal exponential.

    The constant mode has no u-content and contracts as v0 e^{-t}; the
    closed form covers it (lam = 0 gives e11 = 1, e21 = 1 - e^{-t},
    e22 = e^{-t}).
    """
    _check_mean_zero(init.u)
    g = init.u.grid
    lam = modal_eigenvalues(g)
    uh = to_cosine_modes(g, _values(init.u))
    vh = to_cosine_modes(g, _values(init.v))
    e11, e12, e21, e22 = block_exponential(lam, a, t)
    u1 = from_cosine_modes(g, e11 * uh + e12 * vh)
    v1 = from_cosine_modes(g, e21 * uh + e22 * vh)
    return LinState(Field(g, u1), Field(g, v1), init.t + t)


@dataclass
class DecayReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray


def decay_check(init, a, times):
    """Margins of |u(t)|^2 + a |grad v(t)|^2 <= e^{-2 lam1 t} (same at t=0).

    The gradient seminorm is the face-based one, which equals the modal sum
    lam |vhat|^2 exactly, so a nonnegative margin is a sharp modewise fact
    rather than a quadrature accident.
    """
    _check_mean_zero(init.u)
    g = init.u.grid
    lam = modal_eigenvalues(g)
    lam1 = lambda1(g)
    vol = g.cell_volume
    uh = to_cosine_modes(g, _values(init.u))
    uh.flat[0] = 0.0  # project out transform round-off in the zero mode
    vh = to_cosine_modes(g, _values(init.v))
    q0 = vol * float(np.sum(uh * uh) + a * np.sum(lam * vh * vh))
    times = np.asarray(times, dtype=float)
    lhs = np.empty_like(times)
    for i, t in enumerate(times):
        e11, e12, e21, e22 = block_exponential(lam, a, t)
        u1 = e11 * uh + e12 * vh
        v1 = e21 * uh + e22 * vh
        lhs[i] = vol * float(np.sum(u1 * u1) + a * np.sum(lam * v1 * v1))
    rhs = np.exp(-2.0 * lam1 * times) * q0
    return DecayReport(times=times, lhs=lhs, rhs=rhs, margins=rhs - lhs)


# ---------------------------------------------------------------------------
# heat-semigroup envelope constants

_ITEMS = ("lp_lq", "grad_lq", "grad_grad", "div_lq")


def _validate_item(item, p, q):
    if item not in _ITEMS:
        raise ValueError(f"item must be one of {_ITEMS}, got {item!r}")
    if not (1 <= q <= p):
        raise ValueError(f"need 1 <= q <= p, got q={q} p={p}")
    if item == "grad_grad" and (q < 2 or math.isinf(p)):
        raise ValueError(f"grad_grad needs 2 <= q <= p < inf, got q={q} p={p}")
    if item == "div_lq" and q <= 1:
        raise ValueError(f"div_lq needs q > 1, got q={q}")


def _grad_mag(grid, v):
    return np.sqrt(sum(x * x for x in raw_gradient(v, grid.spacing)))


def _lp(grid, v, p):
    return lp_norm(Field(grid, v), p)


def default_times(grid):
    # cap lam1 * t at 25: past that the envelope sits below transform
    # round-off and ratios would measure noise
    tmax = min(5.0, 25.0 / lambda1(grid))
    return np.geomspace(1e-3, tmax, 30)


def heat_envelope_ratio(grid, item, p, q, sample, times=None):
    """sup_t ratio for one sample; sample is a field, or a component list for
    the divergence item. Returns (sup_ratio, sup_time)."""
    _validate_item(item, p, q)
    if times is None:
        times = default_times(grid)
    d = grid.dim
    lam = modal_eigenvalues(grid)
    lam1 = lambda1(grid)
    mu = 0.5 * d * (1.0 / q - (0.0 if math.isinf(p) else 1.0 / p))
    extra = 0.5 if item in ("grad_lq", "div_lq") else 0.0

    if item == "div_lq":
        ws = [np.asarray(_values(w), dtype=float) for w in sample]
        f = np.zeros(grid.shape)
        for ax, h in enumerate(grid.spacing):
            lo = tuple(slice(None, -1) if k == ax else slice(None) for k in range(d))
            hi = tuple(slice(1, None) if k == ax else slice(None) for k in range(d))
            face = 0.5 * (ws[ax][lo] + ws[ax][hi])
            pad = [(0, 0)] * d
            pad[ax] = (1, 1)
            f += np.diff(np.pad(face, pad), axis=ax) / h
        qn = _lp(grid, np.sqrt(sum(w * w for w in ws)), q)
    else:
        f = np.asarray(_values(sample), dtype=float)
        if item == "lp_lq":
            if abs(f.mean()) > 1e-10 * (1.0 + np.abs(f).max()):
                raise ValueError("lp_lq samples must be mean-zero")
            qn = _lp(grid, f, q)
        elif item == "grad_grad":
            qn = _lp(grid, _grad_mag(grid, f), q)
        else:
            qn = _lp(grid, f, q)

    if qn == 0:
        return 0.0, 0.0
    fh = to_cosine_modes(grid, f)
    sup, sup_t = 0.0, 0.0
    for t in times:
        g = from_cosine_modes(grid, np.exp(-lam * t) * fh)
        if item in ("grad_lq", "grad_grad"):
            val = _lp(grid, _grad_mag(grid, g), p)
        else:
            val = _lp(grid, g, p)
        env = (1.0 + t ** (-(mu + extra))) * np.exp(-lam1 * t)
        ratio = val / (env * qn)
        if ratio > sup:
            sup, sup_t = ratio, t
    return sup, sup_t


@dataclass
class SemigroupEstimate:
    item: str
    p: float
    q: float
    empirical_constant: float
    sup_time: float
    sup_sample: int
    sample_count: int
    sample_seed: int


def semigroup_constant(grid, item, p, q, sample_count=200, seed=0,
                       max_wavenumber=4, times=None):
    """Empirical envelope constant over an ensemble of cosine-series samples.

    The wavenumber cap is fixed (not tied to the grid) so the underlying
    continuum ensemble, and with it the estimate, is stable under refinement.
    """
    _validate_item(item, p, q)
    if times is None:
        times = default_times(grid)
    rng = np.random.default_rng(seed)
    sup, sup_t, sup_i = 0.0, 0.0, -1
    for i in range(sample_count):
        if item == "div_lq":
            sample = [random_cosine_field(grid, rng, max_wavenumber, 1.0)
                      for _ in range(grid.dim)]
        else:
            sample = random_cosine_field(grid, rng, max_wavenumber, 1.0)
        r, rt = heat_envelope_ratio(grid, item, p, q, sample, times)
        if r > sup:
            sup, sup_t, sup_i = r, rt, i
    return SemigroupEstimate(item=item, p=float(p), q=float(q),
                             empirical_constant=sup, sup_time=sup_t,
                             sup_sample=sup_i, sample_count=sample_count,
                             sample_seed=seed)


def coupled_decay_constant(grid, a, p, component="u", sample_count=40, seed=0,
                           max_wavenumber=4, times=None):
    """Empirical constant for the coupled system's L^p decay from scale-critical
    data: |u(t)|_p (or |grad v(t)|_p) against
    (1 + t^{-mu}) e^{-lam1 t} (|u_I|_{d/2} + |grad v_I|_d)."""
    d = grid.dim
    if d < 2:
        raise ValueError("coupled decay constant needs dim >= 2")
    if component not in ("u", "grad_v"):
        raise ValueError(f"component must be u or grad_v, got {component!r}")
    pinv = 0.0 if math.isinf(p) else 1.0 / p
    if component == "u":
        mu = 0.5 * d * (2.0 / d - pinv)
    else:
        mu = 0.5 * d * (1.0 / d - pinv)
    if mu < 0:
        raise ValueError(f"envelope exponent is negative for p={p}")
    if times is None:
        times = default_times(grid)
    lam = modal_eigenvalues(grid)
    lam1 = lambda1(grid)
    rng = np.random.default_rng(seed)
    sup, sup_t, sup_i = 0.0, 0.0, -1
    for i in range(sample_count):
        u0 = random_cosine_field(grid, rng, max_wavenumber, 1.0)
        v0 = random_cosine_field(grid, rng, max_wavenumber, 1.0)
        data = _lp(grid, u0, d / 2.0) + _lp(grid, _grad_mag(grid, v0), float(d))
        if data == 0:
            continue
        uh = to_cosine_modes(grid, u0)
        vh = to_cosine_modes(grid, v0)
        for t in times:
            e11, e12, e21, e22 = block_exponential(lam, a, t)
            if component == "u":
                out = from_cosine_modes(grid, e11 * uh + e12 * vh)
                val = _lp(grid, out, p)
            else:
                out = from_cosine_modes(grid, e21 * uh + e22 * vh)
                val = _lp(grid, _grad_mag(grid, out), p)
            env = (1.0 + t ** (-mu)) * np.exp(-lam1 * t)
            ratio = val / (env * data)
            if ratio > sup:
                sup, sup_t, sup_i = ratio, t, i
    return SemigroupEstimate(item=f"coupled_{component}", p=float(p),
                             q=d / 2.0, empirical_constant=sup, sup_time=sup_t,
                             sup_sample=sup_i, sample_count=sample_count,
                             sample_seed=seed)


# ---------------------------------------------------------------------------
# singular convolution bound

_GAUSS = leggauss(10)


def _composite_gauss(f, a, b, n_panels):
    xg, wg = _GAUSS
    tot = 0.0
    edges = np.linspace(a, b, n_panels + 1)
    for i in range(n_panels):
        mid = 0.5 * (edges[i] + edges[i + 1])
        rad = 0.5 * (edges[i + 1] - edges[i])
        tot += rad * float(np.sum(wg * f(mid + rad * xg)))
    return tot


def singular_convolution_integral(t, alpha, beta, gamma, delta, n_panels=8):
    """int_0^t (1 + (t-s)^{-alpha}) e^{-gamma (t-s)} (1 + s^{-beta}) e^{-delta s} ds.

    Split at t/2 and substitute u = s^{1-beta} (left) and v = (t-s)^{1-alpha}
    (right); both the plain and the singular parts of each factor become
    smooth, so composite Gauss-Legendre converges fast.
    """
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError(f"alpha, beta must be in (0,1), got {alpha}, {beta}")
    if not (gamma > 0 and delta > 0):
        raise ValueError(f"gamma, delta must be positive, got {gamma}, {delta}")
    pb = 1.0 / (1.0 - beta)
    pa = 1.0 / (1.0 - alpha)

    def left_f(u):
        s = u ** pb
        A = (1.0 + (t - s) ** (-alpha)) * np.exp(-gamma * (t - s)) * np.exp(-delta * s)
        # (1 + s^{-beta}) ds = (pb u^{pb-1} + pb) du under s = u^pb
        return A * (pb * u ** (pb - 1.0) + pb)

    def right_f(v):
        w = v ** pa
        s = t - w
        A = (1.0 + s ** (-beta)) * np.exp(-delta * s) * np.exp(-gamma * w)
        return A * (pa * v ** (pa - 1.0) + pa)

    return (_composite_gauss(left_f, 0.0, (t / 2.0) ** (1.0 - beta), n_panels)
            + _composite_gauss(right_f, 0.0, (t / 2.0) ** (1.0 - alpha), n_panels))


def singular_convolution_check(alpha, beta, gamma, delta, times=None, n_panels=8):
    """sup over times of the integral against (1 + t^{min(0, 1-alpha-beta)})
    e^{-min(gamma, delta) t}; gamma = delta is rejected (the bound degrades
    by a factor t there and is excluded)."""
    if gamma == delta:
        raise ValueError("gamma = delta is excluded")
    if times is None:
        times = np.geomspace(0.125, 16.0, 8)
    sup = 0.0
    for t in np.asarray(times, dtype=float):
        lhs = singular_convolution_integral(t, alpha, beta, gamma, delta, n_panels)
        env = (1.0 + t ** min(0.0, 1.0 - alpha - beta)) * np.exp(-min(gamma, delta) * t)
        sup = max(sup, lhs / env)
    return sup
