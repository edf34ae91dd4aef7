"""Stationary states under the mass constraint.

The time-independent system is -lap rho = chi div((rho/c) grad c),
-lap c + c = rho with int rho prescribed; its unique nonnegative solution is
the constant pair (M, M). A damped Newton iteration on the residual, with a
scalar Lagrange multiplier pinning the density mean, verifies this from
arbitrary positive starts.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Field, laplacian_matrix, random_cosine_field, _values


@dataclass(frozen=True)
class StationaryProblem:
    grid: object
    m: float  # total mass int rho
    chi: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"total mass must be positive, got {self.m}")

    @property
    def M(self):
        return self.m / float(np.prod(self.grid.extents))


def _flux_divergence(grid, rho, c, chi):
    # div((grad rho) + chi m_face (grad c)) with m = rho/c, zero boundary faces
    d = grid.dim
    m = rho / c
    out = np.zeros(grid.shape)
    for ax, h in enumerate(grid.spacing):
        gr = np.diff(rho, axis=ax) / h
        gc = np.diff(c, axis=ax) / h
        lo = tuple(slice(None, -1) if k == ax else slice(None) for k in range(d))
        hi = tuple(slice(1, None) if k == ax else slice(None) for k in range(d))
        G = gr + chi * 0.5 * (m[lo] + m[hi]) * gc
        pad = [(0, 0)] * d
        pad[ax] = (1, 1)
        out += np.diff(np.pad(G, pad), axis=ax) / h
    return out


def stationary_residual(rho_s, c_s, problem):
    """(r1, r2, r3): the two equation residuals and the mass defect."""
    g = problem.grid
    rho = _values(rho_s)
    c = _values(c_s)
    if c.min() <= 0:
        raise ValueError("stationary residual needs c > 0")
    r1 = -_flux_divergence(g, rho, c, problem.chi)
    L = laplacian_matrix(g)
    r2 = (-(L @ c.ravel())).reshape(g.shape) + c - rho
    r3 = float(rho.sum() * g.cell_volume - problem.m)
    return Field(g, r1), Field(g, r2), r3


def _jacobian(problem, rho, c):
    g = problem.grid
    d = g.dim
    chi = problem.chi
    n = g.cell_count
    vol = g.cell_volume
    idx = np.arange(n).reshape(g.shape)
    rows, cols, rvals, cvals = [], [], [], []
    for ax, h in enumerate(g.spacing):
        lo = tuple(slice(None, -1) if k == ax else slice(None) for k in range(d))
        hi = tuple(slice(1, None) if k == ax else slice(None) for k in range(d))
        iL = idx[lo].ravel()
        iR = idx[hi].ravel()
        gc = (np.diff(c, axis=ax) / h).ravel()
        rL, rR = rho[lo].ravel(), rho[hi].ravel()
        cL, cR = c[lo].ravel(), c[hi].ravel()
        mf = 0.5 * (rL / cL + rR / cR)
        dG_drL = -1.0 / h + chi * gc / (2.0 * cL)
        dG_drR = +1.0 / h + chi * gc / (2.0 * cR)
        dG_dcL = chi * (-rL * gc / (2.0 * cL * cL) - mf / h)
        dG_dcR = chi * (-rR * gc / (2.0 * cR * cR) + mf / h)
        # r1 = -div G: the face enters cell L with -1/h and cell R with +1/h
        for ii, sgn in ((iL, -1.0 / h), (iR, +1.0 / h)):
            for jj, dr, dc in ((iL, dG_drL, dG_dcL), (iR, dG_drR, dG_dcR)):
                rows.append(ii)
                cols.append(jj)
                rvals.append(sgn * dr)
                cvals.append(sgn * dc)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    Arr = sp.coo_matrix((np.concatenate(rvals), (rows, cols)), shape=(n, n)).tocsr()
    Arc = sp.coo_matrix((np.concatenate(cvals), (rows, cols)), shape=(n, n)).tocsr()
    L = laplacian_matrix(g)
    ones_col = sp.csr_matrix(np.ones((n, 1)))
    mass_row = sp.csr_matrix(vol * np.ones((1, n)))
    top = sp.hstack([Arr, Arc, ones_col])
    mid = sp.hstack([-sp.identity(n), (-L + sp.identity(n)).tocsr(),
                     sp.csr_matrix((n, 1))])
    bot = sp.hstack([mass_row, sp.csr_matrix((1, n)), sp.csr_matrix((1, 1))])
    return sp.vstack([top, mid, bot]).tocsr()


def _full_residual(problem, rho, c, mu):
    r1, r2, r3 = stationary_residual(Field(problem.grid, rho),
                                     Field(problem.grid, c), problem)
    return np.concatenate([r1.values.ravel() + mu, r2.values.ravel(), [r3]])


def solve_stationary(problem, init_pair, tol=1e-12, max_iter=50):
    """Damped Newton with Armijo backtracking (factor 1/2, floor 2^-20) on the
    squared residual; line-search steps that lose positivity are halved.

    Returns (rho_s, c_s, iterations); raises on divergence with the last
    residual in the message.
    """
    g = problem.grid
    n = g.cell_count
    rho = _values(init_pair[0]).ravel().copy()
    c = _values(init_pair[1]).ravel().copy()
    if rho.min() <= 0 or c.min() <= 0:
        raise ValueError("initial guess must be positive")
    mu = 0.0
    F = _full_residual(problem, rho.reshape(g.shape), c.reshape(g.shape), mu)
    its = 0
    for its in range(max_iter + 1):
        if np.abs(F).max() <= tol:
            return (Field(g, rho.reshape(g.shape)), Field(g, c.reshape(g.shape)), its)
        if its == max_iter:
            break
        nrm2 = float(F @ F)
        J = _jacobian(problem, rho.reshape(g.shape), c.reshape(g.shape))
        delta = spla.spsolve(J, -F)
        step = 1.0
        ok = False
        while step >= 2.0 ** -20:
            rho_n = rho + step * delta[:n]
            c_n = c + step * delta[n:2 * n]
            mu_n = mu + step * delta[2 * n]
            if rho_n.min() > 0 and c_n.min() > 0:
                F_n = _full_residual(problem, rho_n.reshape(g.shape),
                                     c_n.reshape(g.shape), mu_n)
                if float(F_n @ F_n) <= (1.0 - 0.5 * step) * nrm2:
                    ok = True
                    break
            step *= 0.5
        if not ok:
            raise RuntimeError(
                f"Newton stalled after {its} iterations, residual {np.abs(F).max():.3e}")
        rho, c, mu, F = rho_n, c_n, mu_n, F_n
    raise RuntimeError(
        f"Newton did not converge in {max_iter} iterations, "
        f"residual {np.abs(F).max():.3e}")


def random_positive_pair(problem, rng, amplitude=0.8, max_wavenumber=2):
    """Positive (rho, c) start with the prescribed total mass."""
    g = problem.grid
    M = problem.M
    rho = M * np.exp(random_cosine_field(g, rng, max_wavenumber, amplitude))
    rho *= M / rho.mean()
    c = M * np.exp(random_cosine_field(g, rng, max_wavenumber, amplitude))
    return Field(g, rho), Field(g, c)


def multi_init_report(problem, count=10, seed=0, tol=1e-12, amplitude=0.8):
    """Solve from `count` random positive starts; one JSON-ready dict each."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        init = random_positive_pair(problem, rng, amplitude)
        entry = {"converged": False, "iterations": 0,
                 "final_residual": float("nan"), "distance_to_constant": float("nan")}
        try:
            rho_s, c_s, its = solve_stationary(problem, init, tol=tol)
            r1, r2, r3 = stationary_residual(rho_s, c_s, problem)
            res = max(float(np.abs(r1.values).max()),
                      float(np.abs(r2.values).max()), abs(r3))
            entry.update(converged=True, iterations=its, final_residual=res,
                         distance_to_constant=float(
                             np.abs(rho_s.values - problem.M).max()))
        except RuntimeError as err:
            entry["error"] = str(err)
        out.append(entry)
    return out
