"""Uniform box grids in d in {1,2,3} with homogeneous-Neumann discrete calculus.

Cell-centered finite volumes on Omega = prod_i (0, L_i). The mirror-ghost
Neumann closure makes the discrete Laplacian symmetric and exactly diagonal
in the DCT-II cosine basis, so eigenvalues are closed-form and the implicit
solves elsewhere can be done modally.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.fft import dctn, idctn

MAX_CELLS = 2 ** 24

_fft_workers = 1


def set_fft_workers(n):
    """Set the worker count for the cosine transforms (deterministic either way)."""
    global _fft_workers
    _fft_workers = max(1, int(n))


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box (0,L_1)x...x(0,L_d) split into uniform cells."""

    dim: int
    extents: tuple
    cells: tuple

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.extents, self.cells))

    @property
    def shape(self):
        return self.cells

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def cell_count(self):
        return int(np.prod(self.cells))

    def cell_centers(self, axis):
        n = self.cells[axis]
        return (np.arange(n) + 0.5) * (self.extents[axis] / n)


@dataclass
class Field:
    """Cell-centered scalar sample of a function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"field shape {v.shape} does not match grid cells {self.grid.shape}")
        self.values = v


def build_grid(dim, extents, cells, max_cells=MAX_CELLS):
    """Validated Grid constructor."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    extents = tuple(float(L) for L in np.atleast_1d(extents))
    cells = tuple(int(n) for n in np.atleast_1d(cells))
    if len(extents) != dim or len(cells) != dim:
        raise ValueError("extents and cells must have one entry per axis")
    if any(L <= 0 for L in extents):
        raise ValueError(f"extents must be positive, got {extents}")
    if any(n < 2 for n in cells):
        raise ValueError(f"need at least 2 cells per axis, got {cells}")
    if int(np.prod(cells)) > max_cells:
        raise ValueError(f"total cell count {np.prod(cells)} exceeds cap {max_cells}")
    return Grid(dim, extents, cells)


def _values(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


# ---------------------------------------------------------------------------
# face-based calculus (the conservative convention used by fluxes and norms)

def gradient_faces(grid, f):
    """Per-axis normal differences (f_R - f_L)/h on faces, zero on boundary faces.

    Returns one array per axis with n_i + 1 faces along that axis.
    """
    v = _values(f)
    out = []
    for ax, h in enumerate(grid.spacing):
        g = np.diff(v, axis=ax) / h
        pad = [(0, 0)] * grid.dim
        pad[ax] = (1, 1)
        out.append(np.pad(g, pad))
    return out


def divergence_faces(grid, fluxes):
    """Conservative divergence of per-axis face fluxes (telescoping sums)."""
    out = np.zeros(grid.shape)
    for ax, (h, F) in enumerate(zip(grid.spacing, fluxes)):
        out += np.diff(F, axis=ax) / h
    return out


def apply_laplacian(grid, f):
    """Second-order Neumann Laplacian: divergence of the face gradients.

    The mirror-ghost closure is equivalent to zero boundary-face gradients,
    which keeps the operator symmetric and makes sum(lap f)*vol vanish exactly.
    """
    out = divergence_faces(grid, gradient_faces(grid, f))
    return Field(grid, out) if isinstance(f, Field) else out


@dataclass(frozen=True)
class StencilOperator:
    """Symmetric constant-coefficient operator on a grid.

    kind "neumann_laplacian" applies lap; "shifted_laplacian" applies
    -lap + sigma (positive definite for sigma > 0, e.g. the chemical
    equation's spatial operator at sigma = 1).
    """

    grid: Grid
    kind: str = "neumann_laplacian"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neumann_laplacian", "shifted_laplacian"):
            raise ValueError(f"unknown stencil kind {self.kind!r}")

    def apply(self, f):
        lap = apply_laplacian(self.grid, _values(f))
        if self.kind == "neumann_laplacian":
            out = lap
        else:
            out = -lap + self.sigma * _values(f)
        return Field(self.grid, out) if isinstance(f, Field) else out

    def matrix(self):
        L = laplacian_matrix(self.grid)
        if self.kind == "neumann_laplacian":
            return L
        return (-L + self.sigma * sp.identity(self.grid.cell_count)).tocsr()


def laplacian_matrix(grid):
    """Sparse matrix of apply_laplacian (rows in C order of the cells)."""

    def axis_matrix(n, h):
        main = -2.0 * np.ones(n)
        main[0] = main[-1] = -1.0  # mirror ghost: boundary rows lose one neighbor
        off = np.ones(n - 1)
        return sp.diags([off, main, off], [-1, 0, 1]) / h ** 2

    mats = [axis_matrix(n, h) for n, h in zip(grid.cells, grid.spacing)]
    L = mats[0]
    for A in mats[1:]:
        L = sp.kron(L, sp.identity(A.shape[0])) + sp.kron(sp.identity(L.shape[0]), A)
    return L.tocsr()


# ---------------------------------------------------------------------------
# spectra

@lru_cache(maxsize=64)
def axis_eigenvalues(n, h):
    """1D Neumann stencil eigenvalues (2/h^2)(1 - cos(pi m / n)), m = 0..n-1."""
    lam = (2.0 / h ** 2) * (1.0 - np.cos(np.pi * np.arange(n) / n))
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=64)
def modal_eigenvalues(grid):
    """Tensor of -lap eigenvalues indexed like the DCT-II coefficient array."""
    axes = [axis_eigenvalues(n, h) for n, h in zip(grid.cells, grid.spacing)]
    lam = axes[0]
    for a in axes[1:]:
        lam = lam[..., None] + a
    lam = np.ascontiguousarray(lam)
    lam.setflags(write=False)
    return lam


def lambda1(grid):
    """First positive eigenvalue of -lap: min over axes of (2/h^2)(1-cos(pi h/L))."""
    return min(axis_eigenvalues(n, h)[1] for n, h in zip(grid.cells, grid.spacing))


def neumann_eigs(grid, k, method="closed_form"):
    """First k eigenvalues of -lap, ascending, eigenvalue 0 included.

    The closed form sums per-axis stencil eigenvalues; "dense" assembles the
    matrix and calls eigh as an independent oracle (small grids only).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > grid.cell_count:
        raise ValueError(f"k={k} exceeds cell count {grid.cell_count}")
    if method == "closed_form":
        lam = np.sort(np.asarray(modal_eigenvalues(grid)).ravel())
    elif method == "dense":
        if grid.cell_count > 4096:
            raise ValueError("dense oracle limited to 4096 cells")
        lam = np.linalg.eigvalsh(-laplacian_matrix(grid).toarray())
    else:
        raise ValueError(f"unknown method {method!r}")
    return lam[:k]


# ---------------------------------------------------------------------------
# cosine-basis transforms (diagonalize the Neumann Laplacian exactly)

def to_cosine_modes(grid, values):
    return dctn(values, type=2, norm="ortho", workers=_fft_workers)


def from_cosine_modes(grid, coeffs):
    return idctn(coeffs, type=2, norm="ortho", workers=_fft_workers)


def cosine_series(grid, coeffs):
    """Evaluate sum_m coeffs[m] prod_i cos(m_i pi x_i / L_i) at cell centers."""
    coeffs = np.asarray(coeffs, dtype=float)
    tabs = []
    for ax in range(grid.dim):
        x = grid.cell_centers(ax)
        modes = np.arange(coeffs.shape[ax])
        tabs.append(np.cos(np.outer(modes, np.pi * x / grid.extents[ax])))
    if grid.dim == 1:
        return coeffs @ tabs[0]
    if grid.dim == 2:
        return np.einsum("ab,ai,bj->ij", coeffs, tabs[0], tabs[1])
    return np.einsum("abc,ai,bj,ck->ijk", coeffs, tabs[0], tabs[1], tabs[2])


def random_cosine_field(grid, rng, max_wavenumber, amplitude):
    """Zero-mean cosine series with wavenumbers <= max_wavenumber, sup-normalized.

    Exactly Neumann-compatible by construction; keep max_wavenumber <= N/8 so
    samples stay resolved on the grid.
    """
    K = int(max_wavenumber)
    coef = rng.standard_normal((K + 1,) * grid.dim)
    coef[(0,) * grid.dim] = 0.0
    vals = cosine_series(grid, coef)
    m = np.abs(vals).max()
    return amplitude * vals / (m if m > 0 else 1.0)


def integrate(grid, f):
    """Midpoint quadrature: cell sum times cell volume."""
    return float(np.sum(_values(f)) * grid.cell_volume)


def inner(grid, f, g):
    """Cell-volume-weighted inner product."""
    return float(np.sum(_values(f) * _values(g)) * grid.cell_volume)
