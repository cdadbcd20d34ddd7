"""Numerical laboratory for the focusing inhomogeneous NLS in 2D radial symmetry.

The equation is i u_t + Lap u + |x|^(-b) |u|^p u = 0 on a truncated radial
domain.  The package provides the ground-state solver (Petviashvili
iteration), a Strang-split Crank-Nicolson evolver, conservation and
virial/Morawetz diagnostics, scattering-threshold checks, and config-driven
experiment scenarios with deterministic CSV/manifest/plot outputs.
"""

from .diagnostics import (
    CoercivityReport,
    CutoffChi,
    DiagnosticsRecord,
    MorawetzTerms,
    MorawetzWeight,
    ThresholdReport,
    build_cutoff,
    build_morawetz_weight,
    coercivity_check,
    energy,
    h1_norm,
    kinetic,
    local_mass,
    mass,
    morawetz_action,
    morawetz_derivative,
    potential,
    radial_sobolev_ratio,
    snapshot_record,
    spacetime_potential_growth,
    threshold_check,
    write_records_csv,
)
from .evolution import (
    EvolveConfig,
    SolverBlowUpError,
    Trajectory,
    evolve,
    free_propagate,
    load_checkpoint,
    save_checkpoint,
    scattering_profile,
    step,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    GnSweepReport,
    GroundStateReport,
    InitialData,
    MorawetzReport,
    RunReport,
    StatusRules,
    build_initial_data,
    config_from_mapping,
    config_to_mapping,
    emit_config,
    load_config,
    parse_config,
    random_radial_suite,
    run_gn_sweep,
    run_groundstate,
    run_morawetz_verify,
    run_single,
    run_threshold_scan,
)
from .grid import (
    Field,
    ParameterRangeError,
    PhysParams,
    RadialGrid,
    as_field,
    build_grid,
    gaussian_field,
    grad_sq,
    integrate,
    l2_sq,
    make_params,
    singular_weight,
    zero_field,
)
from .groundstate import (
    ConvergenceError,
    GroundState,
    gn_ratio,
    load_profile,
    profile_as_field,
    save_profile,
    sharp_gn_constant,
    solve_ground_state,
)

__version__ = "0.1.0"

__all__ = [
    "CoercivityReport",
    "ConfigError",
    "ConvergenceError",
    "CutoffChi",
    "DiagnosticsRecord",
    "EvolveConfig",
    "ExperimentConfig",
    "Field",
    "GnSweepReport",
    "GroundState",
    "GroundStateReport",
    "InitialData",
    "MorawetzReport",
    "MorawetzTerms",
    "MorawetzWeight",
    "ParameterRangeError",
    "PhysParams",
    "RadialGrid",
    "RunReport",
    "SolverBlowUpError",
    "StatusRules",
    "ThresholdReport",
    "Trajectory",
    "as_field",
    "build_cutoff",
    "build_grid",
    "build_initial_data",
    "build_morawetz_weight",
    "coercivity_check",
    "config_from_mapping",
    "config_to_mapping",
    "emit_config",
    "energy",
    "evolve",
    "free_propagate",
    "gaussian_field",
    "gn_ratio",
    "grad_sq",
    "h1_norm",
    "integrate",
    "kinetic",
    "l2_sq",
    "load_checkpoint",
    "load_config",
    "load_profile",
    "local_mass",
    "make_params",
    "mass",
    "morawetz_action",
    "morawetz_derivative",
    "parse_config",
    "potential",
    "profile_as_field",
    "radial_sobolev_ratio",
    "random_radial_suite",
    "run_gn_sweep",
    "run_groundstate",
    "run_morawetz_verify",
    "run_single",
    "run_threshold_scan",
    "save_checkpoint",
    "save_profile",
    "scattering_profile",
    "sharp_gn_constant",
    "singular_weight",
    "snapshot_record",
    "solve_ground_state",
    "spacetime_potential_growth",
    "step",
    "threshold_check",
    "write_records_csv",
    "zero_field",
]
