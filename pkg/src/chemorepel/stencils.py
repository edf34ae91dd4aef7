"""Pointwise difference stencils for diagnostics.

The conservative face calculus in grid.py is what the solver and the sharp
spectral checks use. The integrands of the dissipation and inequality
diagnostics instead want cell values of derivatives up to the boundary, so
this module provides plain O(h^2) stencils (central inside, one-sided at the
walls) plus an O(h^4) first derivative for the boundary-flux weight field.
"""

import numpy as np


def _sl(ndim, ax, a, b):
    return tuple(slice(a, b) if k == ax else slice(None) for k in range(ndim))


def raw_d1(f, ax, h):
    """First derivative at cells: central interior, 3-point one-sided at walls."""
    f = np.asarray(f, dtype=float)
    n = f.shape[ax]
    s = lambda a, b: _sl(f.ndim, ax, a, b)
    d = np.empty_like(f)
    if n >= 3:
        d[s(1, -1)] = (f[s(2, None)] - f[s(0, -2)]) / (2 * h)
        d[s(0, 1)] = (-3 * f[s(0, 1)] + 4 * f[s(1, 2)] - f[s(2, 3)]) / (2 * h)
        d[s(-1, None)] = (3 * f[s(-1, None)] - 4 * f[s(-2, -1)] + f[s(-3, -2)]) / (2 * h)
    else:
        d[s(0, 1)] = d[s(-1, None)] = (f[s(-1, None)] - f[s(0, 1)]) / h
    return d


def raw_d2(f, ax, h):
    """Second derivative at cells: central interior, 4-point one-sided at walls."""
    f = np.asarray(f, dtype=float)
    n = f.shape[ax]
    s = lambda a, b: _sl(f.ndim, ax, a, b)
    d = np.empty_like(f)
    d[s(1, -1)] = (f[s(2, None)] - 2 * f[s(1, -1)] + f[s(0, -2)]) / h ** 2
    if n >= 4:
        d[s(0, 1)] = (2 * f[s(0, 1)] - 5 * f[s(1, 2)] + 4 * f[s(2, 3)] - f[s(3, 4)]) / h ** 2
        d[s(-1, None)] = (2 * f[s(-1, None)] - 5 * f[s(-2, -1)]
                          + 4 * f[s(-3, -2)] - f[s(-4, -3)]) / h ** 2
    elif n == 3:
        d[s(0, 1)] = d[s(1, 2)]
        d[s(-1, None)] = d[s(1, 2)]
    else:
        d[...] = 0.0
    return d


def d1_o4(f, ax, h):
    """Fourth-order first derivative (5-point), one-sided at the two wall cells.

    Used only to build the |grad c|^2 weight entering the boundary flux, where
    the normal difference divides neighboring errors by h and would otherwise
    drop the quadrature to O(h).
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[ax]
    if n < 5:
        return raw_d1(f, ax, h)
    s = lambda a, b: _sl(f.ndim, ax, a, b)
    d = np.empty_like(f)
    d[s(2, -2)] = (-f[s(4, None)] + 8 * f[s(3, -1)] - 8 * f[s(1, -3)]
                   + f[s(0, -4)]) / (12 * h)
    d[s(0, 1)] = (-25 * f[s(0, 1)] + 48 * f[s(1, 2)] - 36 * f[s(2, 3)]
                  + 16 * f[s(3, 4)] - 3 * f[s(4, 5)]) / (12 * h)
    d[s(1, 2)] = (-3 * f[s(0, 1)] - 10 * f[s(1, 2)] + 18 * f[s(2, 3)]
                  - 6 * f[s(3, 4)] + f[s(4, 5)]) / (12 * h)
    d[s(-1, None)] = (25 * f[s(-1, None)] - 48 * f[s(-2, -1)] + 36 * f[s(-3, -2)]
                      - 16 * f[s(-4, -3)] + 3 * f[s(-5, -4)]) / (12 * h)
    d[s(-2, -1)] = (3 * f[s(-1, None)] + 10 * f[s(-2, -1)] - 18 * f[s(-3, -2)]
                    + 6 * f[s(-4, -3)] - f[s(-5, -4)]) / (12 * h)
    return d


def raw_gradient(f, spacing):
    return [raw_d1(f, ax, h) for ax, h in enumerate(spacing)]


def raw_laplacian(f, spacing):
    return sum(raw_d2(f, ax, h) for ax, h in enumerate(spacing))


def raw_hessian(f, spacing):
    """All second derivatives as a symmetric ndim x ndim nested list.

    Mixed entries compose two first-derivative stencils, which keeps the
    discrete Hessian symmetric in i, j.
    """
    f = np.asarray(f, dtype=float)
    d = f.ndim
    H = [[None] * d for _ in range(d)]
    for i in range(d):
        H[i][i] = raw_d2(f, i, spacing[i])
        for j in range(i + 1, d):
            H[i][j] = H[j][i] = raw_d1(raw_d1(f, i, spacing[i]), j, spacing[j])
    return H
