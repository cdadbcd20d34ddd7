"""Conserved quantities, threshold checks, and Morawetz-type functionals.

Everything here is a pure function of a Field (plus parameters), sharing the
disc quadrature and the difference stencils of the grid module, so identities
such as energy = kinetic - potential/(p+2) and h1^2 = mass + grad_sq hold to
roundoff by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import (
    Field,
    PhysParams,
    RadialGrid,
    cell_averaged_weight_derivative,
    grad_sq,
    interaction_weight,
    l2_sq,
    radial_derivative,
    weighted_power_integral,
)
from .groundstate import GroundState

if TYPE_CHECKING:
    from .evolution import Trajectory


def mass(u: Field) -> float:
    """Conserved L2 mass integral |u|^2."""
    return l2_sq(u.grid, u.values)


def kinetic(u: Field) -> float:
    return 0.5 * grad_sq(u.grid, u.values)


def potential(u: Field, params: PhysParams) -> float:
    """Weighted interaction integral |x|^(-b) |u|^(p+2)."""
    return weighted_power_integral(u.grid, u.values, params.b, params.p + 2.0)


def energy(u: Field, params: PhysParams) -> float:
    """Conserved energy 1/2 |grad u|^2 - potential/(p+2) (focusing sign)."""
    return kinetic(u) - potential(u, params) / (params.p + 2.0)


def h1_norm(u: Field) -> float:
    return float(np.sqrt(mass(u) + grad_sq(u.grid, u.values)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the per-snapshot diagnostics stream.

    morawetz_action and local_mass are NaN when the corresponding weight or
    cutoff was not supplied to the recorder.
    """

    t: float
    mass: float
    energy: float
    grad_sq: float
    potential: float
    morawetz_action: float
    local_mass: float
    h1_norm: float

    CSV_COLUMNS = ("t", "mass", "energy", "grad_sq", "potential",
                   "morawetz_action", "local_mass", "h1_norm")

    def row(self) -> tuple[float, ...]:
        return (self.t, self.mass, self.energy, self.grad_sq, self.potential,
                self.morawetz_action, self.local_mass, self.h1_norm)


def snapshot_record(
    u: Field,
    t: float,
    params: PhysParams,
    weight: "MorawetzWeight | None" = None,
    chi: "CutoffChi | None" = None,
) -> DiagnosticsRecord:
    m = mass(u)
    gsq = grad_sq(u.grid, u.values)
    pot = potential(u, params)
    return DiagnosticsRecord(
        t=float(t),
        mass=m,
        energy=0.5 * gsq - pot / (params.p + 2.0),
        grad_sq=gsq,
        potential=pot,
        morawetz_action=morawetz_action(u, weight) if weight is not None else float("nan"),
        local_mass=local_mass(u, chi) if chi is not None else float("nan"),
        h1_norm=float(np.sqrt(m + gsq)),
    )


def write_records_csv(path: str, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DiagnosticsRecord.CSV_COLUMNS)
        for rec in records:
            writer.writerow([format(x, ".17g") for x in rec.row()])


# --- scattering-threshold checks -------------------------------------------

# Relative slack treated as numerical equality when comparing products
# against the ground-state values, so that u0 = Q reports below = False.
_EQ_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdReport:
    """Initial-data products against the ground-state scattering threshold.

    mass_energy_* entries are None when the energy is nonpositive (the
    fractional power is undefined there); the gradient-side comparison is
    always available.  margins are relative: (product - reference)/reference.
    strengthened_* report the gradient product against (1 - 2 delta) times
    the reference when a delta was supplied.
    """

    mass_energy_product: float | None
    mass_energy_reference: float
    below_mass_energy: bool | None
    margin_mass_energy: float | None
    gradient_product: float
    gradient_reference: float
    below_gradient: bool
    margin_gradient: float
    energy_negative: bool
    delta: float | None = None
    strengthened_reference: float | None = None
    below_strengthened: bool | None = None


def threshold_check(
    u0: Field, params: PhysParams, gs: GroundState, delta: float | None = None
) -> ThresholdReport:
    s = params.s_p
    m0 = mass(u0)
    e0 = energy(u0, params)
    gsq0 = grad_sq(u0.grid, u0.values)

    e_q = 0.5 * gs.grad_Q - gs.pot_Q / (params.p + 2.0)
    me_ref = gs.mass_Q ** (1.0 - s) * e_q**s
    grad_ref = gs.mass_Q ** ((1.0 - s) / 2.0) * gs.grad_Q ** (s / 2.0)
    grad_prod = m0 ** ((1.0 - s) / 2.0) * gsq0 ** (s / 2.0)

    energy_negative = e0 <= 0.0
    if energy_negative:
        me_prod = None
        below_me = None
        margin_me = None
    else:
        me_prod = m0 ** (1.0 - s) * e0**s
        margin_me = (me_prod - me_ref) / me_ref
        below_me = margin_me < -_EQ_TOL

    margin_grad = (grad_prod - grad_ref) / grad_ref
    if delta is None:
        strengthened = None
        below_strengthened = None
    else:
        if not 0.0 <= delta < 0.5:
            raise ValueError(f"delta={delta}: require 0 <= delta < 1/2")
        strengthened = (1.0 - 2.0 * delta) * grad_ref
        below_strengthened = grad_prod < strengthened * (1.0 - _EQ_TOL)
    return ThresholdReport(
        mass_energy_product=me_prod,
        mass_energy_reference=me_ref,
        below_mass_energy=below_me,
        margin_mass_energy=margin_me,
        gradient_product=grad_prod,
        gradient_reference=grad_ref,
        below_gradient=margin_grad < -_EQ_TOL,
        margin_gradient=margin_grad,
        energy_negative=energy_negative,
        delta=delta,
        strengthened_reference=strengthened,
        below_strengthened=below_strengthened,
    )


def radial_sobolev_ratio(u: Field) -> float:
    """max_r r^(1/2) |u| divided by the H1 norm; bounded for radial H1 data.

    Degree-zero homogeneous: invariant under u -> lambda u.
    """
    h1 = h1_norm(u)
    if h1 == 0.0:
        raise ValueError("radial_sobolev_ratio is undefined for the zero field")
    weighted_sup = float(np.max(np.sqrt(u.grid.r) * np.abs(u.values)))
    return weighted_sup / h1


# --- localized mass ----------------------------------------------------------


@dataclass(frozen=True)
class CutoffChi:
    """Smooth radial cutoff: 1 on r <= R/2, 0 beyond R, C^2 monotone taper."""

    R: float
    values: np.ndarray


def build_cutoff(grid: RadialGrid, R: float) -> CutoffChi:
    if not 0.0 < R <= grid.r_max:
        raise ValueError(f"R={R}: require 0 < R <= r_max={grid.r_max}")
    s = np.clip((grid.r - 0.5 * R) / (0.5 * R), 0.0, 1.0)
    ramp = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    vals = 1.0 - ramp
    vals.setflags(write=False)
    return CutoffChi(R=float(R), values=vals)


def local_mass(u: Field, chi: CutoffChi, squared: bool = False) -> float:
    """Cutoff mass integral chi |u|^2 (or chi^2 |u|^2 with squared=True).

    The single-power cutoff is the default reading; both powers appear in
    localization arguments and either is a valid monitor.
    """
    factor = chi.values**2 if squared else chi.values
    return float(np.dot(u.grid.quad_w, factor * np.abs(u.values) ** 2))


# --- Morawetz weight and action ---------------------------------------------

# Quintic bridge g(t) on t = (r - R)/R in [0, 1], fixed by C^2 matching of
# r^2 at r = R and 3Rr at r = 2R; coefficients are R-independent.
_BRIDGE = np.array([1.0, 2.0, 1.0, 23.0, -35.0, 14.0])
_BRIDGE_D1 = np.polynomial.polynomial.polyder(_BRIDGE)
_BRIDGE_D2 = np.polynomial.polynomial.polyder(_BRIDGE, 2)
_BRIDGE_D3 = np.polynomial.polynomial.polyder(_BRIDGE, 3)
_BRIDGE_D4 = np.polynomial.polynomial.polyder(_BRIDGE, 4)


def _gval(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(t, coeffs)


@dataclass(frozen=True)
class MorawetzWeight:
    """Hybrid virial/Morawetz weight: r^2 inside R, 3Rr beyond 2R, C^2 bridge.

    All five profiles are callables of r (scalar or array).  lap_a and
    bilap_a are the classical piecewise values; the bridge is C^2 only, so
    the bilaplacian additionally carries surface terms at r = R and 2R that
    the pointwise profile cannot represent.  Identity checks should keep the
    solution's support inside r < R, where the weight is exactly r^2.

    bridge_min_slope / bridge_min_convexity record min a_r / min a_rr over
    the bridge (scaled by R where appropriate).  The slope stays positive;
    no C^1 bridge matching these endpoint values can keep a_rr >= 0, since
    the mean slope over the bridge (5R) exceeds the outer slope 3R, so the
    convexity minimum is necessarily negative and is reported, not enforced.
    """

    R: float
    a: Callable[[np.ndarray], np.ndarray]
    a_r: Callable[[np.ndarray], np.ndarray]
    a_rr: Callable[[np.ndarray], np.ndarray]
    lap_a: Callable[[np.ndarray], np.ndarray]
    bilap_a: Callable[[np.ndarray], np.ndarray]
    bridge_min_slope: float
    bridge_min_convexity: float


def build_morawetz_weight(R: float) -> MorawetzWeight:
    if not R > 0.0:
        raise ValueError(f"R={R}: require R > 0")

    def piecewise(r, inner, bridge, outer):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - R) / R, 0.0, 1.0)
        return np.where(r <= R, inner(r), np.where(r <= 2.0 * R, bridge(r, t), outer(r)))

    def a(r):
        return piecewise(
            r,
            lambda r: r**2,
            lambda r, t: R**2 * _gval(_BRIDGE, t),
            lambda r: 3.0 * R * r,
        )

    def a_r(r):
        return piecewise(
            r,
            lambda r: 2.0 * r,
            lambda r, t: R * _gval(_BRIDGE_D1, t),
            lambda r: np.full_like(r, 3.0 * R),
        )

    def a_rr(r):
        return piecewise(
            r,
            lambda r: np.full_like(r, 2.0),
            lambda r, t: _gval(_BRIDGE_D2, t),
            lambda r: np.zeros_like(r),
        )

    def lap_a(r):
        return piecewise(
            r,
            lambda r: np.full_like(r, 4.0),
            lambda r, t: _gval(_BRIDGE_D2, t) + R * _gval(_BRIDGE_D1, t) / r,
            lambda r: 3.0 * R / r,
        )

    def bilap_a(r):
        return piecewise(
            r,
            lambda r: np.zeros_like(r),
            lambda r, t: (
                _gval(_BRIDGE_D4, t) / R**2
                + 2.0 * _gval(_BRIDGE_D3, t) / (R * r)
                - _gval(_BRIDGE_D2, t) / r**2
                + R * _gval(_BRIDGE_D1, t) / r**3
            ),
            lambda r: 3.0 * R / r**3,
        )

    tt = np.linspace(0.0, 1.0, 4001)
    min_slope = float(R * _gval(_BRIDGE_D1, tt).min())
    min_convexity = float(_gval(_BRIDGE_D2, tt).min())
    return MorawetzWeight(
        R=float(R),
        a=a,
        a_r=a_r,
        a_rr=a_rr,
        lap_a=lap_a,
        bilap_a=bilap_a,
        bridge_min_slope=min_slope,
        bridge_min_convexity=min_convexity,
    )


def morawetz_action(u: Field, weight: MorawetzWeight) -> float:
    """M_a = 2 integral a_r Im(conj(u) d_r u); real by construction."""
    du = radial_derivative(u.grid, u.values)
    integrand = weight.a_r(u.grid.r) * np.imag(np.conj(u.values) * du)
    return 2.0 * float(np.dot(u.grid.quad_w, integrand))


@dataclass(frozen=True)
class MorawetzTerms:
    """The four classical contributions to dM_a/dt, plus their sum.

    bilap:      - integral Lap^2 a |u|^2
    hessian:    4 integral a_rr |d_r u|^2        (radial data)
    lap_pot:    - 2p/(p+2) integral Lap a |x|^(-b) |u|^(p+2)
    weight_grad:  4/(p+2) integral a_r (d_r |x|^(-b)) |u|^(p+2)
    """

    t: float
    bilap: float
    hessian: float
    lap_pot: float
    weight_grad: float

    @property
    def total(self) -> float:
        return self.bilap + self.hessian + self.lap_pot + self.weight_grad

    CSV_COLUMNS = ("t", "term1", "term2", "term3", "term4")

    def row(self) -> tuple[float, ...]:
        return (self.t, self.bilap, self.hessian, self.lap_pot, self.weight_grad)


def morawetz_derivative(
    u: Field, params: PhysParams, weight: MorawetzWeight, t: float = 0.0
) -> MorawetzTerms:
    grid = u.grid
    r = grid.r
    du = radial_derivative(grid, u.values)
    abs_pow = np.abs(u.values) ** (params.p + 2.0)
    w_cell = interaction_weight(grid, params.b)
    dw_cell = cell_averaged_weight_derivative(grid, params.b)
    p = params.p

    bilap = -float(np.dot(grid.quad_w, weight.bilap_a(r) * np.abs(u.values) ** 2))
    hessian = 4.0 * float(np.dot(grid.quad_w, weight.a_rr(r) * np.abs(du) ** 2))
    lap_pot = -(2.0 * p / (p + 2.0)) * float(np.dot(grid.quad_w, weight.lap_a(r) * w_cell * abs_pow))
    weight_grad = (4.0 / (p + 2.0)) * float(np.dot(grid.quad_w, weight.a_r(r) * dw_cell * abs_pow))
    return MorawetzTerms(
        t=float(t), bilap=bilap, hessian=hessian, lap_pot=lap_pot, weight_grad=weight_grad
    )


def write_morawetz_terms_csv(path: str, terms: list[MorawetzTerms]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MorawetzTerms.CSV_COLUMNS)
        for row in terms:
            writer.writerow([format(x, ".17g") for x in row.row()])


# --- coercivity on balls ------------------------------------------------------


@dataclass(frozen=True)
class CoercivityReport:
    """Localized coercivity quantities for one cutoff radius.

    delta_prime = lhs / rhs is the effective coercivity constant; None when
    the global potential integral vanishes (zero field).  ball_product is
    the localized mass/gradient product; reference_product and below_ball
    compare it against (1 - delta) times the ground-state product when a
    ground state was supplied.
    """

    R: float
    lhs: float
    rhs: float
    delta_prime: float | None
    ball_product: float
    delta: float
    reference_product: float | None
    below_ball: bool | None


def coercivity_check(
    u: Field,
    params: PhysParams,
    chi: CutoffChi,
    gs: GroundState | None = None,
    delta: float = 0.0,
) -> CoercivityReport:
    """Evaluate grad/potential coercivity of the cutoff field chi*u."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta={delta}: require 0 <= delta < 1")
    grid = u.grid
    s = params.s_p
    cut = chi.values * u.values
    gsq_cut = grad_sq(grid, cut)
    pot_cut = weighted_power_integral(grid, cut, params.b, params.p + 2.0)
    lhs = gsq_cut - ((params.b + params.p) / (params.p + 2.0)) * pot_cut
    rhs = weighted_power_integral(grid, u.values, params.b, params.p + 2.0)
    mass_cut = l2_sq(grid, cut)
    ball_product = mass_cut ** ((1.0 - s) / 2.0) * gsq_cut ** (s / 2.0)
    if gs is None:
        reference = None
        below = None
    else:
        reference = (1.0 - delta) * gs.mass_Q ** ((1.0 - s) / 2.0) * gs.grad_Q ** (s / 2.0)
        below = ball_product < reference
    return CoercivityReport(
        R=chi.R,
        lhs=lhs,
        rhs=rhs,
        delta_prime=lhs / rhs if rhs > 0.0 else None,
        ball_product=ball_product,
        delta=delta,
        reference_product=reference,
        below_ball=below,
    )


# --- spacetime potential growth ----------------------------------------------


def spacetime_potential_growth(traj: "Trajectory") -> tuple[float | None, np.ndarray]:
    """Cumulative spacetime interaction integral and its late-time exponent.

    Returns (beta_fit, table) where table[:, 0] = T, table[:, 1] is the
    cumulative integral of the potential up to T (trapezoid on the snapshot
    times), and beta_fit is the log-log least-squares slope over the second
    half of the run.  A soliton-like solution has slope 1 (linear growth), a
    scattering one saturates toward slope 0.  beta_fit is None when the
    potential stream is degenerate (zero data).
    """
    times = np.asarray(traj.times, dtype=float)
    if len(times) < 10:
        raise ValueError(f"need at least 10 snapshots to fit a growth exponent, got {len(times)}")
    pots = np.array([rec.potential for rec in traj.records], dtype=float)
    cumulative = np.concatenate([[0.0], cumulative_trapezoid(pots, times)])
    table = np.column_stack([times, cumulative])

    half = times >= 0.5 * times[-1]
    usable = half & (cumulative > 0.0) & (times > 0.0)
    if usable.sum() < 2:
        return None, table
    slope = np.polyfit(np.log(times[usable]), np.log(cumulative[usable]), 1)[0]
    return float(slope), table
