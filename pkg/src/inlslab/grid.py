"""Radial mesh, quadrature, and difference operators on the 2D disc.

Everything downstream (ground states, time stepping, functionals) runs on the
cell-centered mesh built here, against the measure 2*pi*r*dr.  Cell centers
sit at r_i = (i + 1/2)*dr, so the singular factor r**(-b) is never sampled at
the origin, and the flux form of the radial Laplacian applies zero flux
through the r = 0 face automatically (radial regularity).  The Laplacian is
symmetric and negative semidefinite with respect to the quadrature inner
product; the Crank-Nicolson stepper and the elliptic solver both lean on that
symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded


class ParameterRangeError(ValueError):
    """A physical or numerical parameter violates its admissible range."""


@dataclass(frozen=True)
class PhysParams:
    """Nonlinearity exponents for i u_t + Lap u + |x|^(-b) |u|^p u = 0 in 2D.

    Attributes
    ----------
    p : float
        Power of the focusing nonlinearity, p > 2 - b (mass supercritical).
    b : float
        Strength of the inhomogeneity |x|^(-b), 0 < b < 1.
    s_p : float
        Critical Sobolev index 1 - (2 - b)/p, always in (0, 1) here.
    c_pdb : float
        (p + b)/(2 - b); the squared gradient-to-mass ratio of the ground
        state, and the constant entering the sharp interpolation inequality.
    """

    p: float
    b: float
    s_p: float
    c_pdb: float


def make_params(p: float, b: float) -> PhysParams:
    """Validate (p, b) for the 2D problem and fill in derived constants."""
    p = float(p)
    b = float(b)
    if not 0.0 < b < 1.0:
        raise ParameterRangeError(f"b={b}: require 0 < b < 1")
    if not p > 2.0 - b:
        raise ParameterRangeError(f"p={p}, b={b}: require p > 2 - b (got p <= {2.0 - b})")
    s_p = 1.0 - (2.0 - b) / p
    c_pdb = (p + b) / (2.0 - b)
    if not 0.0 < s_p < 1.0:
        raise ParameterRangeError(f"p={p}, b={b}: critical index s_p={s_p} outside (0, 1)")
    return PhysParams(p=p, b=b, s_p=s_p, c_pdb=c_pdb)


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centered uniform mesh on [0, r_max] with disc quadrature weights.

    r[i] = (i + 1/2) * dr and quad_w[i] = 2*pi*r[i]*dr, so sum(quad_w) equals
    the disc area pi*r_max**2 exactly.
    """

    n: int
    r_max: float
    dr: float
    r: np.ndarray
    quad_w: np.ndarray


def build_grid(r_max: float, n: int) -> RadialGrid:
    if not r_max > 0.0:
        raise ParameterRangeError(f"r_max={r_max}: require r_max > 0")
    n = int(n)
    if n < 16:
        raise ParameterRangeError(f"n={n}: require n >= 16 cells")
    dr = r_max / n
    r = (np.arange(n) + 0.5) * dr
    quad_w = 2.0 * np.pi * r * dr
    r.setflags(write=False)
    quad_w.setflags(write=False)
    return RadialGrid(n=n, r_max=float(r_max), dr=dr, r=r, quad_w=quad_w)


@dataclass
class Field:
    """Complex radial profile sampled at the cell centers of one grid."""

    grid: RadialGrid
    values: np.ndarray


def as_field(grid: RadialGrid, values: np.ndarray) -> Field:
    vals = np.asarray(values, dtype=np.complex128)
    if vals.shape != (grid.n,):
        raise ValueError(f"field length {vals.shape} does not match grid n={grid.n}")
    if not np.all(np.isfinite(vals.view(np.float64))):
        raise ValueError("field contains non-finite samples")
    return Field(grid=grid, values=vals.copy())


def zero_field(grid: RadialGrid) -> Field:
    return Field(grid=grid, values=np.zeros(grid.n, dtype=np.complex128))


def gaussian_field(grid: RadialGrid, amplitude: float = 1.0, width: float = 1.0) -> Field:
    """amplitude * exp(-r^2 / (2 width^2)), the standard smooth test profile."""
    if not width > 0.0:
        raise ParameterRangeError(f"width={width}: require width > 0")
    vals = amplitude * np.exp(-grid.r**2 / (2.0 * width**2))
    return Field(grid=grid, values=vals.astype(np.complex128))


def integrate(grid: RadialGrid, samples: np.ndarray) -> float | complex:
    """Quadrature of a cell-sampled integrand over the whole disc."""
    total = np.dot(grid.quad_w, samples)
    return float(total.real) if not np.iscomplexobj(samples) else complex(total)


def l2_sq(grid: RadialGrid, values: np.ndarray) -> float:
    return float(np.dot(grid.quad_w, np.abs(values) ** 2))


def grad_sq(grid: RadialGrid, values: np.ndarray) -> float:
    """Dirichlet form of the discrete Laplacian: exactly -<u, Lap u>_w.

    Face sum over interior faces plus the boundary face term produced by the
    Dirichlet ghost u_n = -u_{n-1}; guaranteed nonnegative.
    """
    dr = grid.dr
    faces = np.arange(1, grid.n) * dr
    diff = values[1:] - values[:-1]
    interior = np.dot(faces, np.abs(diff) ** 2) / dr
    boundary = 2.0 * grid.r_max * abs(values[-1]) ** 2 / dr
    return float(2.0 * np.pi * (interior + boundary))


def h1_norm_sq(grid: RadialGrid, values: np.ndarray) -> float:
    return l2_sq(grid, values) + grad_sq(grid, values)


def radial_derivative(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """Centered d/dr at cell centers.

    Inner ghost mirrors cell 0 across r = 0 (regularity, u'(0) = 0); outer
    ghost is the Dirichlet reflection -u_{n-1} through the face at r_max.
    """
    out = np.empty_like(values, dtype=np.complex128)
    two_dr = 2.0 * grid.dr
    out[1:-1] = (values[2:] - values[:-2]) / two_dr
    out[0] = (values[1] - values[0]) / two_dr
    out[-1] = (-values[-1] - values[-2]) / two_dr
    return out


def laplacian_diagonals(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tridiagonal bands (lower, diag, upper) of the radial Laplacian.

    Conservative flux form: (Lap u)_i = (F_{i+1} - F_i) / (r_i dr) with face
    flux F_k = (k dr) * (u_k - u_{k-1}) / dr.  The r = 0 face carries zero
    flux; the r_max face uses the Dirichlet ghost u_n = -u_{n-1}, which shows
    up as the extra 2*face term on the last diagonal entry.  Row i scaled by
    1/(r_i dr) is symmetric under the 2*pi*r_i*dr weights.
    """
    n, dr = grid.n, grid.dr
    idx = np.arange(n)
    face_l = idx * dr
    face_r = (idx + 1) * dr
    denom = grid.r * dr * dr
    lower = face_l[1:] / denom[1:]
    upper = face_r[:-1] / denom[:-1]
    diag = -(face_l + face_r) / denom
    # Dirichlet ghost u_n = -u_{n-1}: outer flux doubles, adding one more
    # face_r unit to the magnitude of the last diagonal entry.
    diag[-1] -= face_r[-1] / denom[-1]
    return lower, diag, upper


def apply_tridiag(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, values: np.ndarray
) -> np.ndarray:
    out = diag * values
    out[1:] += lower * values[:-1]
    out[:-1] += upper * values[1:]
    return out


def laplacian_radial(f: Field) -> Field:
    lower, diag, upper = laplacian_diagonals(f.grid)
    return Field(grid=f.grid, values=apply_tridiag(lower, diag, upper, f.values))


def shifted_laplacian_banded(grid: RadialGrid, alpha: complex, beta: complex) -> np.ndarray:
    """Banded storage (for scipy solve_banded) of alpha*I + beta*Lap."""
    lower, diag, upper = laplacian_diagonals(grid)
    n = grid.n
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = beta * upper
    ab[1, :] = alpha + beta * diag
    ab[2, :-1] = beta * lower
    return ab

def solve_tridiag(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def singular_weight(grid: RadialGrid, b: float) -> np.ndarray:
    """Pointwise samples r_i**(-b); finite because cells avoid r = 0."""
    if not 0.0 < b < 2.0:
        raise ParameterRangeError(f"b={b}: require 0 < b < 2 for an integrable weight")
    return grid.r ** (-b)


def cell_averaged_weight(grid: RadialGrid, b: float) -> np.ndarray:
    """Exact per-cell average of r**(-b) against the disc measure 2*pi*r*dr.

    Integrating the weight over each annular cell keeps quadratures of
    r**(-b) * (smooth) second-order accurate down to the innermost cell,
    where pointwise sampling loses accuracy to the unbounded derivative.
    """
    if not 0.0 < b < 2.0:
        raise ParameterRangeError(f"b={b}: require 0 < b < 2 for an integrable weight")
    n, dr = grid.n, grid.dr
    faces = np.arange(n + 1) * dr
    pow_faces = faces ** (2.0 - b)
    return (pow_faces[1:] - pow_faces[:-1]) / ((2.0 - b) * grid.r * dr)


def interaction_weight(grid: RadialGrid, b: float) -> np.ndarray:
    """Discrete |x|^(-b) coefficient shared by the elliptic solver, the time
    stepper, and every potential-energy quadrature.

    The cell-averaged form is used: it represents the same continuum weight
    to second order while keeping the innermost cells accurate, so the
    ground-state norm ratios converge at the rate the mesh suggests.
    """
    return cell_averaged_weight(grid, b)


def cell_averaged_weight_derivative(grid: RadialGrid, b: float) -> np.ndarray:
    """Exact per-cell average of d/dr r**(-b) = -b r**(-b-1) for 0 < b < 1.

    Keeps quadratures against the weight derivative second-order accurate in
    the innermost cells, same as cell_averaged_weight for the weight itself.
    """
    if not 0.0 < b < 1.0:
        raise ParameterRangeError(f"b={b}: require 0 < b < 1 for an integrable derivative")
    n, dr = grid.n, grid.dr
    faces = np.arange(n + 1) * dr
    pow_faces = faces ** (1.0 - b)
    return -b * (pow_faces[1:] - pow_faces[:-1]) / ((1.0 - b) * grid.r * dr)


def weighted_power_integral(grid: RadialGrid, values: np.ndarray, b: float, power: float) -> float:
    """integral |x|^(-b) |u|^power over the disc, with the scheme weight."""
    w = interaction_weight(grid, b)
    return float(np.dot(grid.quad_w, w * np.abs(values) ** power))
