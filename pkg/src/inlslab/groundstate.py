"""Ground states of -Lap Q + Q = |x|^(-b) Q^(p+1) by spectral renormalization.

The fixed-point map Q -> (1 - Lap)^(-1)[|x|^(-b) Q^(p+1)] is stabilized with
the standard power-law multiplier (Petviashvili iteration); the exponent
gamma = (p+1)/p makes the scheme contractive around the positive radial
solution, and the multiplier itself converges to 1 at the fixed point.
Convergence is judged on the L2 residual of the ground-state equation, not on
iterate differences.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grid import (
    Field,
    PhysParams,
    RadialGrid,
    apply_tridiag,
    grad_sq,
    interaction_weight,
    l2_sq,
    laplacian_diagonals,
    shifted_laplacian_banded,
    solve_tridiag,
)


class ConvergenceError(RuntimeError):
    """The ground-state iteration diverged or failed to reach tolerance."""


@dataclass(frozen=True)
class GroundState:
    """Converged positive radial profile together with its audit quantities.

    mass_Q, grad_Q, pot_Q are the L2 mass, squared gradient norm, and the
    weighted potential integral of the profile; c0 is the sharp interpolation
    constant computed from the profile's own mass.
    """

    profile: Field
    residual: float
    iterations: int
    multiplier: float
    mass_Q: float
    grad_Q: float
    pot_Q: float
    c0: float
    residual_history: tuple[float, ...]


def _equation_residual(
    grid: RadialGrid,
    weight: np.ndarray,
    lap_bands: tuple[np.ndarray, np.ndarray, np.ndarray],
    q: np.ndarray,
    p: float,
) -> float:
    lhs = -apply_tridiag(*lap_bands, q.astype(np.complex128)).real + q
    return float(np.sqrt(l2_sq(grid, lhs - weight * q ** (p + 1))))


def solve_ground_state(
    params: PhysParams,
    grid: RadialGrid,
    tol: float = 1e-10,
    max_iter: int = 800,
) -> GroundState:
    """Iterate from a Gaussian seed until the PDE residual drops below tol.

    Raises ConvergenceError on divergence (non-finite iterates or exploding
    residual) and on failure to converge within max_iter sweeps.
    """
    if not tol > 0.0:
        raise ValueError(f"tol={tol}: require tol > 0")
    weight = interaction_weight(grid, params.b)
    lap_bands = laplacian_diagonals(grid)
    helm = shifted_laplacian_banded(grid, 1.0, -1.0)  # (1 - Lap) in banded form
    p = params.p
    gamma = (p + 1.0) / p

    q = np.exp(-grid.r**2)
    history: list[float] = []
    multiplier = np.inf
    for iteration in range(1, max_iter + 1):
        rhs = weight * q ** (p + 1)
        num = l2_sq(grid, q) + grad_sq(grid, q)        # <Q, (1 - Lap) Q>
        den = float(np.dot(grid.quad_w, q * rhs))      # <Q, rhs>
        if not (np.isfinite(num) and np.isfinite(den)) or den <= 0.0:
            raise ConvergenceError(
                f"iteration {iteration}: degenerate stabilization ratio {num}/{den}"
            )
        multiplier = num / den
        q = np.abs(multiplier**gamma * solve_tridiag(helm, rhs.astype(np.complex128)).real)
        residual = _equation_residual(grid, weight, lap_bands, q, p)
        history.append(residual)
        if not np.isfinite(residual) or residual > 1e8:
            raise ConvergenceError(f"iteration {iteration}: residual diverged to {residual}")
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations; last residual {history[-1]:.3e}"
        )

    mass_q = l2_sq(grid, q)
    grad_q = grad_sq(grid, q)
    pot_q = float(np.dot(grid.quad_w, weight * q ** (p + 2)))
    gs = GroundState(
        profile=Field(grid=grid, values=q.astype(np.complex128)),
        residual=history[-1],
        iterations=len(history),
        multiplier=float(multiplier),
        mass_Q=mass_q,
        grad_Q=grad_q,
        pot_Q=pot_q,
        c0=_sharp_constant(params, mass_q),
        residual_history=tuple(history),
    )
    return gs


def _sharp_constant(params: PhysParams, mass_q: float) -> float:
    p, b = params.p, params.b
    c = params.c_pdb
    return c ** ((4.0 - 2.0 * p - 2.0 * b) / 4.0) * (p + 2.0) / ((p + b) * mass_q ** (p / 2.0))


def sharp_gn_constant(params: PhysParams, gs: GroundState) -> float:
    """Best constant in  int |x|^(-b)|u|^(p+2) <= C0 |grad u|^(p+b) |u|^(2-b)."""
    return _sharp_constant(params, gs.mass_Q)


def gn_ratio(f: Field, params: PhysParams, c0: float) -> float:
    """Weighted potential of f divided by its sharp interpolation bound.

    At most 1 (up to discretization) for every nonzero H1 profile, with
    equality exactly at the ground state; invariant under f -> lambda f.
    """
    grid = f.grid
    mass = l2_sq(grid, f.values)
    if mass == 0.0:
        raise ValueError("gn_ratio is undefined for the zero field")
    gsq = grad_sq(grid, f.values)
    weight = interaction_weight(grid, params.b)
    pot = float(np.dot(grid.quad_w, weight * np.abs(f.values) ** (params.p + 2.0)))
    p, b = params.p, params.b
    return pot / (c0 * gsq ** ((p + b) / 2.0) * mass ** ((2.0 - b) / 2.0))


def save_profile(path: str, gs: GroundState) -> None:
    """Write the profile as a two-column CSV (r, Q(r)) at full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "Q"])
        for r, q in zip(gs.profile.grid.r, gs.profile.values.real):
            writer.writerow([format(r, ".17g"), format(q, ".17g")])


def load_profile(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a (r, Q) CSV back into arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["r", "Q"]:
            raise ValueError(f"{path}: expected header 'r,Q', got {header}")
        rows = [(float(row[0]), float(row[1])) for row in reader]
    r = np.array([row[0] for row in rows])
    q = np.array([row[1] for row in rows])
    return r, q


def profile_as_field(grid: RadialGrid, r: np.ndarray, q: np.ndarray) -> Field:
    """Wrap a loaded (r, Q) table as a Field, checking the mesh matches."""
    if len(r) != grid.n or not np.allclose(r, grid.r, rtol=0, atol=1e-12 * grid.r_max):
        raise ValueError("profile mesh does not match the target grid")
    return Field(grid=grid, values=q.astype(np.complex128))
