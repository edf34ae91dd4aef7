"""Norms, means, and derivative-based integrands shared by every check."""

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, gradient_faces, _values
from .stencils import raw_hessian


@dataclass(frozen=True)
class NormSpec:
    """Which norm to evaluate; the triple bundles the scale-critical norms
    (|rho - M|_{d/2}, |grad c|_d, |c - M|_inf) in which constant states are
    exponentially stable."""

    kind: str
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in ("Lp", "W1p", "Linf", "scaling_invariant_triple"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind in ("Lp", "W1p") and not self.p >= 1:
            raise ValueError(f"p must be in [1, inf], got {self.p}")


def lp_norm(f, p):
    """Midpoint-quadrature L^p norm; p = inf gives max |f|."""
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    v = _values(f)
    if math.isinf(p):
        return float(np.abs(v).max())
    vol = f.grid.cell_volume
    return float((np.sum(np.abs(v) ** p) * vol) ** (1.0 / p))


def mean(f):
    """Volume-weighted average (uniform cells, so the plain cell mean)."""
    return float(np.mean(_values(f)))


def grad_sq_integral(f):
    """Face-based seminorm: sum over interior faces of ((f_R - f_L)/h)^2 * vol.

    Equals the quadratic form <f, -lap f> * vol exactly (summation by parts),
    which is what the sharp spectral bounds need.
    """
    g = f.grid
    v = _values(f)
    vol = g.cell_volume
    tot = 0.0
    for ax, h in enumerate(g.spacing):
        d = np.diff(v, axis=ax) / h
        tot += float(np.sum(d * d)) * vol
    return tot


def grad_magnitude(f):
    """Cell gradient magnitude: face differences averaged back to cells."""
    g = f.grid
    v = _values(f)
    total = np.zeros(v.shape)
    for ax, gf in enumerate(gradient_faces(g, v)):
        lo = tuple(slice(None, -1) if k == ax else slice(None) for k in range(g.dim))
        hi = tuple(slice(1, None) if k == ax else slice(None) for k in range(g.dim))
        gc = 0.5 * (gf[lo] + gf[hi])
        total += gc * gc
    return Field(g, np.sqrt(total))


def w1p_norm(f, p):
    if math.isinf(p):
        return max(lp_norm(f, p), lp_norm(grad_magnitude(f), p))
    return (lp_norm(f, p) ** p + lp_norm(grad_magnitude(f), p) ** p) ** (1.0 / p)


def evaluate_norm(spec, f):
    if spec.kind == "Lp":
        return lp_norm(f, spec.p)
    if spec.kind == "W1p":
        return w1p_norm(f, spec.p)
    if spec.kind == "Linf":
        return lp_norm(f, np.inf)
    raise ValueError("the triple needs (rho, c, M); use scaling_invariant_triple")


def scaling_invariant_triple(rho, c, M):
    """(|rho - M|_{L^{d/2}}, |grad c|_{L^d}, |c - M|_{L^inf}) for d >= 2."""
    d = rho.grid.dim
    if d < 2:
        raise ValueError("scaling-invariant triple needs dim >= 2")
    u = Field(rho.grid, _values(rho) - M)
    w = Field(c.grid, _values(c) - M)
    return (lp_norm(u, d / 2.0), lp_norm(grad_magnitude(c), float(d)),
            lp_norm(w, np.inf))


def log_hessian_integrand(c):
    """Cell values of c |hess log c|^2, the chemical-equation dissipation density.

    All d^2 second differences of log c enter; the integrand is nonnegative and
    vanishes exactly where log c is discretely affine.
    """
    v = _values(c)
    if np.any(v <= 0):
        raise ValueError("log-Hessian integrand needs c > 0 everywhere")
    H = raw_hessian(np.log(v), c.grid.spacing)
    s = np.zeros(v.shape)
    for row in H:
        for Hij in row:
            s += Hij * Hij
    return Field(c.grid, v * s)


def weber_fechner_check(c):
    """Max interior residual of 2 lap(sqrt c)/sqrt c = lap(c)/c - |grad c|^2/(2c^2).

    The pointwise identity behind writing the log-sensitivity drift in terms
    of sqrt c; O(h^2) on smooth positive fields.
    """
    from .stencils import raw_d2, raw_d1

    v = _values(c)
    if np.any(v <= 0):
        raise ValueError("identity check needs c > 0 everywhere")
    g = c.grid
    sq = np.sqrt(v)
    lap_sq = sum(raw_d2(sq, ax, h) for ax, h in enumerate(g.spacing))
    lap_c = sum(raw_d2(v, ax, h) for ax, h in enumerate(g.spacing))
    grad2 = sum(raw_d1(v, ax, h) ** 2 for ax, h in enumerate(g.spacing))
    res = 2.0 * lap_sq / sq - (lap_c / v - grad2 / (2.0 * v * v))
    interior = res[tuple(slice(1, -1) for _ in range(g.dim))]
    if interior.size == 0:
        interior = res
    return float(np.abs(interior).max())
