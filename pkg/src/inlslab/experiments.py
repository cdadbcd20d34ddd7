"""Config-driven experiment scenarios.

A single YAML document describes an experiment: physical parameters, grid,
time-stepper settings, initial data, and scenario-specific knobs.  The
runners in this module turn a validated ExperimentConfig into report
objects; persistence (CSV tables, manifest, plots) lives in reporting.py.

Scenarios
---------
groundstate_only   solve the profile equation and report the identities
single_run         one Cauchy evolution with scattering classification
threshold_scan     a family u0 = lambda*Q over a list of lambda values
morawetz_verify    virial identity dt-study plus the action-bound R-sweep
gn_sweep           interpolation-inequality ratios over a randomized suite

Classification thresholds are deliberately configuration-exposed
(status_rules) and echoed into every report so that a status can always be
traced back to the rule that produced it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import yaml

from .diagnostics import (
    DiagnosticsRecord,
    MorawetzTerms,
    ThresholdReport,
    build_morawetz_weight,
    h1_norm,
    morawetz_action,
    morawetz_derivative,
    radial_sobolev_ratio,
    spacetime_potential_growth,
    threshold_check,
)
from .evolution import EvolveConfig, Trajectory, evolve, scattering_profile
from .grid import Field, PhysParams, RadialGrid, build_grid, gaussian_field, make_params
from .groundstate import GroundState, gn_ratio, solve_ground_state

SCHEMA_VERSION = 1

SCENARIOS = (
    "groundstate_only",
    "single_run",
    "threshold_scan",
    "morawetz_verify",
    "gn_sweep",
)

STATUS_SCATTERED = "scattered_indicated"
STATUS_SOLITON = "soliton_like"
STATUS_BLOWUP = "blowup_suspected"
STATUS_INCONCLUSIVE = "inconclusive"

# Snapshot-index fractions at which the late-time Cauchy-defect windows end;
# each window spans _WINDOW_WIDTH consecutive snapshots.
_WINDOW_FRACTIONS = (0.55, 0.75, 1.0)
_WINDOW_WIDTH = 3


class ConfigError(ValueError):
    """Raised for schema violations; the message starts with the field path."""


# --- configuration schema ---------------------------------------------------


@dataclass(frozen=True)
class InitialData:
    """Initial-data family descriptor.

    family "gaussian" uses (amplitude, width); family "ground_state_scaled"
    uses scale and multiplies the converged profile.  Unused knobs stay at
    their defaults so that configurations round-trip exactly.
    """

    family: str
    amplitude: float = 0.5
    width: float = 1.0
    scale: float = 1.0


@dataclass(frozen=True)
class MorawetzSettings:
    """Knobs for morawetz_verify (artifact defaults, see README)."""

    radii: tuple[float, ...] = (10.0, 20.0, 40.0)
    halvings: int = 3
    identity_R: float = 10.0
    identity_dt0: float = 0.1
    identity_t_end: float = 0.8


@dataclass(frozen=True)
class StatusRules:
    """Operational thresholds behind run classification.

    defect_scattered: a run is scattered_indicated when the last-window
    Cauchy defect, relative to the H1 norm of the initial data, falls below
    this value.  beta_soliton_band: a run is soliton_like when the fitted
    growth exponent lies within this distance of 1.
    """

    defect_scattered: float = 1e-2
    beta_soliton_band: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully materialized experiment description (all defaults filled)."""

    scenario: str
    p: float = 2.0
    b: float = 0.5
    r_max: float = 40.0
    n: int = 2048
    evolve: EvolveConfig = EvolveConfig(
        dt=2e-3, t_end=10.0, snapshot_stride=100, grad_ceiling_factor=10.0
    )
    initial_data: InitialData = InitialData(family="gaussian")
    scan: tuple[float, ...] | None = None
    groundstate_tol: float = 1e-10
    groundstate_max_iter: int = 800
    morawetz: MorawetzSettings = MorawetzSettings()
    gn_count: int = 100
    status_rules: StatusRules = StatusRules()
    output_dir: str = "out"
    seed: int = 0


_EVOLVE_DEFAULTS = {
    "dt": 2e-3,
    "t_end": 10.0,
    "sponge_strength": 0.0,
    "sponge_start": 0.0,
    "snapshot_stride": 100,
    "nonlinear": True,
    # Tighter than the library default: a hundredfold gradient growth is
    # treated as collapse when classifying runs.
    "grad_ceiling_factor": 10.0,
}


def _as_float(path: str, value) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got boolean {value}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        # YAML 1.1 resolves exponent forms like "1e-3" (no dot) as strings.
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{path}: expected a number, got {value!r}")


def _as_int(path: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_bool(path: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _as_str(path: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _section(doc: Mapping, key: str) -> Mapping:
    value = doc.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"{key}: expected a mapping, got {value!r}")
    return value


def _check_keys(path: str, mapping: Mapping, allowed: Sequence[str]) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"{where}: unknown key (allowed: {', '.join(allowed)})")


def _float_list(path: str, value) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{path}: expected a non-empty list of numbers, got {value!r}")
    return tuple(_as_float(f"{path}[{i}]", v) for i, v in enumerate(value))


def config_from_mapping(doc: Mapping) -> ExperimentConfig:
    """Validate a parsed document and materialize every default.

    Strict mode: unknown keys are rejected at every level and error messages
    lead with the offending field path.  Physical-range violations are not
    re-checked here; they propagate from make_params / build_grid /
    EvolveConfig with their own messages.
    """
    if not isinstance(doc, Mapping):
        raise ConfigError(f"top level: expected a mapping, got {type(doc).__name__}")
    _check_keys(
        "",
        doc,
        (
            "schema_version",
            "scenario",
            "params",
            "grid",
            "evolve",
            "initial_data",
            "scan",
            "groundstate",
            "morawetz",
            "gn",
            "status_rules",
            "output_dir",
            "seed",
        ),
    )

    if "schema_version" not in doc:
        raise ConfigError("schema_version: required field is missing")
    version = _as_int("schema_version", doc["schema_version"])
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")

    if "scenario" not in doc:
        raise ConfigError("scenario: required field is missing")
    scenario = _as_str("scenario", doc["scenario"])
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: {scenario!r} is not one of {', '.join(SCENARIOS)}")

    params_doc = _section(doc, "params")
    _check_keys("params", params_doc, ("p", "b"))
    p = _as_float("params.p", params_doc.get("p", 2.0))
    b = _as_float("params.b", params_doc.get("b", 0.5))
    make_params(p, b)  # range validation; ParameterRangeError propagates

    grid_doc = _section(doc, "grid")
    _check_keys("grid", grid_doc, ("r_max", "n"))
    r_max = _as_float("grid.r_max", grid_doc.get("r_max", 40.0))
    n = _as_int("grid.n", grid_doc.get("n", 2048))
    build_grid(r_max, n)

    evolve_doc = _section(doc, "evolve")
    _check_keys("evolve", evolve_doc, tuple(_EVOLVE_DEFAULTS))
    ev_kwargs = {}
    for key, default in _EVOLVE_DEFAULTS.items():
        raw = evolve_doc.get(key, default)
        path = f"evolve.{key}"
        if key == "snapshot_stride":
            ev_kwargs[key] = _as_int(path, raw)
        elif key == "nonlinear":
            ev_kwargs[key] = _as_bool(path, raw)
        else:
            ev_kwargs[key] = _as_float(path, raw)
    try:
        evolve_cfg = EvolveConfig(**ev_kwargs)
    except ValueError as exc:
        raise ConfigError(f"evolve: {exc}") from exc

    init_doc = _section(doc, "initial_data")
    family = _as_str("initial_data.family", init_doc.get("family", "gaussian"))
    if family == "gaussian":
        _check_keys("initial_data", init_doc, ("family", "amplitude", "width"))
        initial = InitialData(
            family=family,
            amplitude=_as_float("initial_data.amplitude", init_doc.get("amplitude", 0.5)),
            width=_as_float("initial_data.width", init_doc.get("width", 1.0)),
        )
        if not initial.width > 0.0:
            raise ConfigError(f"initial_data.width: require width > 0, got {initial.width}")
    elif family == "ground_state_scaled":
        _check_keys("initial_data", init_doc, ("family", "scale"))
        initial = InitialData(
            family=family,
            scale=_as_float("initial_data.scale", init_doc.get("scale", 1.0)),
        )
    else:
        raise ConfigError(
            f"initial_data.family: {family!r} is not one of gaussian, ground_state_scaled"
        )

    # scan is a known field for every scenario (so one document can serve
    # several subcommands) but only threshold_scan consumes it.
    scan: tuple[float, ...] | None = None
    if "scan" in doc and doc["scan"] is not None:
        scan = _float_list("scan", doc["scan"])
        for i, lam in enumerate(scan):
            if not lam > 0.0:
                raise ConfigError(f"scan[{i}]: require lambda > 0, got {lam}")
    if scenario == "threshold_scan" and scan is None:
        raise ConfigError("scan: required when scenario is threshold_scan")

    gs_doc = _section(doc, "groundstate")
    _check_keys("groundstate", gs_doc, ("tol", "max_iter"))
    gs_tol = _as_float("groundstate.tol", gs_doc.get("tol", 1e-10))
    gs_max_iter = _as_int("groundstate.max_iter", gs_doc.get("max_iter", 800))
    if not gs_tol > 0.0:
        raise ConfigError(f"groundstate.tol: require tol > 0, got {gs_tol}")
    if gs_max_iter < 1:
        raise ConfigError(f"groundstate.max_iter: require >= 1, got {gs_max_iter}")

    mor_doc = _section(doc, "morawetz")
    _check_keys("morawetz", mor_doc, ("radii", "halvings", "identity_R", "identity_dt0", "identity_t_end"))
    defaults = MorawetzSettings()
    morawetz = MorawetzSettings(
        radii=(
            _float_list("morawetz.radii", mor_doc["radii"])
            if "radii" in mor_doc
            else defaults.radii
        ),
        halvings=_as_int("morawetz.halvings", mor_doc.get("halvings", defaults.halvings)),
        identity_R=_as_float("morawetz.identity_R", mor_doc.get("identity_R", defaults.identity_R)),
        identity_dt0=_as_float(
            "morawetz.identity_dt0", mor_doc.get("identity_dt0", defaults.identity_dt0)
        ),
        identity_t_end=_as_float(
            "morawetz.identity_t_end", mor_doc.get("identity_t_end", defaults.identity_t_end)
        ),
    )
    if morawetz.halvings < 0:
        raise ConfigError(f"morawetz.halvings: require >= 0, got {morawetz.halvings}")
    for i, radius in enumerate(morawetz.radii):
        if not radius > 0.0:
            raise ConfigError(f"morawetz.radii[{i}]: require R > 0, got {radius}")

    gn_doc = _section(doc, "gn")
    _check_keys("gn", gn_doc, ("count",))
    gn_count = _as_int("gn.count", gn_doc.get("count", 100))
    if gn_count < 1:
        raise ConfigError(f"gn.count: require >= 1, got {gn_count}")

    rules_doc = _section(doc, "status_rules")
    _check_keys("status_rules", rules_doc, ("defect_scattered", "beta_soliton_band"))
    rules = StatusRules(
        defect_scattered=_as_float(
            "status_rules.defect_scattered", rules_doc.get("defect_scattered", 1e-2)
        ),
        beta_soliton_band=_as_float(
            "status_rules.beta_soliton_band", rules_doc.get("beta_soliton_band", 0.1)
        ),
    )

    return ExperimentConfig(
        scenario=scenario,
        p=p,
        b=b,
        r_max=r_max,
        n=n,
        evolve=evolve_cfg,
        initial_data=initial,
        scan=scan,
        groundstate_tol=gs_tol,
        groundstate_max_iter=gs_max_iter,
        morawetz=morawetz,
        gn_count=gn_count,
        status_rules=rules,
        output_dir=_as_str("output_dir", doc.get("output_dir", "out")),
        seed=_as_int("seed", doc.get("seed", 0)),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a YAML experiment document (strict; see config_from_mapping)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"document is not valid YAML: {exc}") from exc
    return config_from_mapping(doc)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_mapping(cfg: ExperimentConfig) -> dict:
    """Plain nested-dict echo of a config, suitable for YAML/JSON emission."""
    mapping = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "params": {"p": cfg.p, "b": cfg.b},
        "grid": {"r_max": cfg.r_max, "n": cfg.n},
        "evolve": {
            "dt": cfg.evolve.dt,
            "t_end": cfg.evolve.t_end,
            "sponge_strength": cfg.evolve.sponge_strength,
            "sponge_start": cfg.evolve.sponge_start,
            "snapshot_stride": cfg.evolve.snapshot_stride,
            "nonlinear": cfg.evolve.nonlinear,
            "grad_ceiling_factor": cfg.evolve.grad_ceiling_factor,
        },
        "initial_data": _initial_data_mapping(cfg.initial_data),
        "groundstate": {"tol": cfg.groundstate_tol, "max_iter": cfg.groundstate_max_iter},
        "morawetz": {
            "radii": list(cfg.morawetz.radii),
            "halvings": cfg.morawetz.halvings,
            "identity_R": cfg.morawetz.identity_R,
            "identity_dt0": cfg.morawetz.identity_dt0,
            "identity_t_end": cfg.morawetz.identity_t_end,
        },
        "gn": {"count": cfg.gn_count},
        "status_rules": {
            "defect_scattered": cfg.status_rules.defect_scattered,
            "beta_soliton_band": cfg.status_rules.beta_soliton_band,
        },
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }
    if cfg.scan is not None:
        mapping["scan"] = list(cfg.scan)
    return mapping


def _initial_data_mapping(init: InitialData) -> dict:
    if init.family == "gaussian":
        return {"family": init.family, "amplitude": init.amplitude, "width": init.width}
    return {"family": init.family, "scale": init.scale}


def emit_config(cfg: ExperimentConfig) -> str:
    """Serialize a config back to YAML; parse_config(emit_config(c)) == c."""
    return yaml.safe_dump(config_to_mapping(cfg), sort_keys=False)


# --- run reports and classification -----------------------------------------


@dataclass(frozen=True)
class RunReport:
    """Outcome of one Cauchy evolution, with the rules that classified it.

    cauchy_defect is the H1 Cauchy defect over the last late-time window
    (absolute); defect_relative divides it by the H1 norm of the initial
    data and is what the scattering rule thresholds.  defect_tol and
    beta_band echo the status_rules in force so every status is auditable
    from the report alone.  error is None unless the run raised, in which
    case the status is inconclusive and the other metrics may be missing.
    """

    lam: float | None
    config: dict
    status: str
    final: DiagnosticsRecord | None
    records: tuple[DiagnosticsRecord, ...]
    beta_fit: float | None
    cauchy_defect: float | None
    defect_relative: float | None
    window_defects: tuple[float, ...]
    windows: tuple[tuple[int, int], ...]
    max_gradient_quotient: float | None
    threshold: ThresholdReport | None
    defect_tol: float
    beta_band: float
    error: str | None = None


def late_windows(
    n_snapshots: int,
    width: int = _WINDOW_WIDTH,
    fractions: Sequence[float] = _WINDOW_FRACTIONS,
) -> list[tuple[int, int]]:
    """Snapshot-index windows [start, stop) ending at the given fractions.

    Windows that would collide after rounding are deduplicated, so short
    trajectories may yield fewer than len(fractions) windows.
    """
    if n_snapshots < width:
        return []
    last = n_snapshots - 1
    ends: list[int] = []
    for frac in fractions:
        end = max(int(round(frac * last)), width - 1)
        if end <= last and end not in ends:
            ends.append(end)
    return [(end - width + 1, end + 1) for end in sorted(ends)]


def classify(
    traj_status: str,
    defect_relative: float | None,
    beta_fit: float | None,
    rules: StatusRules,
) -> str:
    """Deterministic status assignment; the checks apply in priority order."""
    if traj_status == "blowup_suspected":
        return STATUS_BLOWUP
    if defect_relative is not None and defect_relative < rules.defect_scattered:
        return STATUS_SCATTERED
    if beta_fit is not None and abs(beta_fit - 1.0) <= rules.beta_soliton_band:
        return STATUS_SOLITON
    return STATUS_INCONCLUSIVE


def build_initial_data(
    cfg: ExperimentConfig,
    grid: RadialGrid,
    gs: GroundState | None = None,
    scale: float | None = None,
) -> Field:
    """Materialize the configured initial data on a grid.

    An explicit scale always means scale*Q regardless of the configured
    family (scans sweep the ground state by contract); otherwise the
    initial_data descriptor decides.  Ground-state data need a converged
    profile on a grid with the same (n, r_max).
    """
    init = cfg.initial_data
    if scale is None and init.family == "ground_state_scaled":
        scale = init.scale
    if init.family == "gaussian" and scale is None:
        return gaussian_field(grid, amplitude=init.amplitude, width=init.width)
    if gs is None:
        raise ValueError("ground-state-scaled initial data requires a converged profile")
    pg = gs.profile.grid
    if pg.n != grid.n or pg.r_max != grid.r_max:
        raise ValueError(
            f"ground-state profile grid (n={pg.n}, r_max={pg.r_max}) does not match "
            f"the target grid (n={grid.n}, r_max={grid.r_max})"
        )
    return Field(grid=grid, values=float(scale) * gs.profile.values)


def _gradient_quotients(
    records: Sequence[DiagnosticsRecord], params: PhysParams, gs: GroundState
) -> float:
    """max_t of |grad u|^s_p |u|^(1-s_p) relative to the same product at Q."""
    sp = params.s_p
    reference = gs.grad_Q ** (sp / 2.0) * gs.mass_Q ** ((1.0 - sp) / 2.0)
    worst = 0.0
    for rec in records:
        worst = max(worst, rec.grad_sq ** (sp / 2.0) * rec.mass ** ((1.0 - sp) / 2.0))
    return worst / reference


def _run_once(
    cfg: ExperimentConfig,
    params: PhysParams,
    grid: RadialGrid,
    gs: GroundState,
    lam: float | None,
) -> RunReport:
    """Evolve one initial datum and classify the outcome.

    For scans lam scales the ground state; lam=None uses cfg.initial_data.
    Defect windows are skipped for sponged trajectories (the damping layer
    breaks the free-flow comparison) and for runs cut short by the gradient
    ceiling, where back-propagating an exploded field is meaningless.
    """
    u0 = build_initial_data(cfg, grid, gs=gs, scale=lam)
    threshold = threshold_check(u0, params, gs)
    traj = evolve(u0, params, cfg.evolve)
    records = tuple(traj.records)

    windows: tuple[tuple[int, int], ...] = ()
    window_defects: tuple[float, ...] = ()
    defect = None
    defect_relative = None
    beta = None
    if traj.status == "completed":
        if not traj.sponge_on:
            windows = tuple(late_windows(len(traj.snapshots)))
            window_defects = tuple(
                scattering_profile(traj, window=w)[1] for w in windows
            )
        if window_defects:
            defect = window_defects[-1]
            u0_h1 = h1_norm(u0)
            defect_relative = defect / u0_h1 if u0_h1 > 0.0 else None
        if len(traj.times) >= 10:
            beta, _ = spacetime_potential_growth(traj)

    status = classify(traj.status, defect_relative, beta, cfg.status_rules)
    return RunReport(
        lam=lam,
        config=config_to_mapping(cfg),
        status=status,
        final=records[-1] if records else None,
        records=records,
        beta_fit=beta,
        cauchy_defect=defect,
        defect_relative=defect_relative,
        window_defects=window_defects,
        windows=windows,
        max_gradient_quotient=_gradient_quotients(records, params, gs) if records else None,
        threshold=threshold,
        defect_tol=cfg.status_rules.defect_scattered,
        beta_band=cfg.status_rules.beta_soliton_band,
    )


def _failed_report(cfg: ExperimentConfig, lam: float | None, exc: Exception) -> RunReport:
    return RunReport(
        lam=lam,
        config=config_to_mapping(cfg),
        status=STATUS_INCONCLUSIVE,
        final=None,
        records=(),
        beta_fit=None,
        cauchy_defect=None,
        defect_relative=None,
        window_defects=(),
        windows=(),
        max_gradient_quotient=None,
        threshold=None,
        defect_tol=cfg.status_rules.defect_scattered,
        beta_band=cfg.status_rules.beta_soliton_band,
        error=f"{type(exc).__name__}: {exc}",
    )


def _scan_worker(cfg: ExperimentConfig, gs: GroundState, lam: float) -> RunReport:
    # Top-level so ProcessPoolExecutor can pickle it; failures are converted
    # to inconclusive reports here so one bad run never aborts the scan.
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    try:
        return _run_once(cfg, params, grid, gs, lam)
    except Exception as exc:  # noqa: BLE001 - isolation is the contract
        return _failed_report(cfg, lam, exc)


# --- scenario runners --------------------------------------------------------


@dataclass(frozen=True)
class GroundStateReport:
    """Converged-profile summary: the functional ratios and solver telemetry."""

    config: dict
    mass_Q: float
    grad_Q: float
    pot_Q: float
    c0: float
    c_pdb: float
    gradient_ratio: float
    potential_ratio: float
    iterations: int
    residual: float


def run_groundstate(cfg: ExperimentConfig) -> tuple[GroundStateReport, GroundState]:
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    gs = solve_ground_state(params, grid, tol=cfg.groundstate_tol, max_iter=cfg.groundstate_max_iter)
    report = GroundStateReport(
        config=config_to_mapping(cfg),
        mass_Q=gs.mass_Q,
        grad_Q=gs.grad_Q,
        pot_Q=gs.pot_Q,
        c0=gs.c0,
        c_pdb=params.c_pdb,
        gradient_ratio=gs.grad_Q / gs.mass_Q,
        potential_ratio=gs.pot_Q / gs.mass_Q,
        iterations=gs.iterations,
        residual=gs.residual,
    )
    return report, gs


def run_single(cfg: ExperimentConfig, gs: GroundState | None = None) -> RunReport:
    """One evolution of the configured initial data, classified."""
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    if gs is None:
        gs = solve_ground_state(
            params, grid, tol=cfg.groundstate_tol, max_iter=cfg.groundstate_max_iter
        )
    try:
        return _run_once(cfg, params, grid, gs, None)
    except Exception as exc:  # noqa: BLE001
        return _failed_report(cfg, None, exc)


def run_threshold_scan(cfg: ExperimentConfig, threads: int = 1) -> list[RunReport]:
    """Evolve u0 = lambda*Q for every lambda in cfg.scan (ascending order).

    The profile is solved once and shared; runs are independent, so with
    threads > 1 they execute in separate processes.  Per-run failures come
    back as inconclusive reports with the error recorded; siblings are
    unaffected.
    """
    if cfg.scenario != "threshold_scan" or cfg.scan is None:
        raise ValueError("run_threshold_scan needs scenario=threshold_scan with a scan list")
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    gs = solve_ground_state(params, grid, tol=cfg.groundstate_tol, max_iter=cfg.groundstate_max_iter)
    lams = sorted(cfg.scan)

    if threads <= 1 or len(lams) == 1:
        return [_scan_worker(cfg, gs, lam) for lam in lams]

    reports: dict[float, RunReport] = {}
    with ProcessPoolExecutor(max_workers=min(threads, len(lams))) as pool:
        futures = {lam: pool.submit(_scan_worker, cfg, gs, lam) for lam in lams}
        for lam, future in futures.items():
            exc = future.exception()
            reports[lam] = _failed_report(cfg, lam, exc) if exc else future.result()
    return [reports[lam] for lam in lams]


@dataclass(frozen=True)
class MorawetzReport:
    """Virial-identity verification plus the action-bound sweep.

    identity_rows: (dt, residual) pairs, residual being the worst absolute
    mismatch between the centered difference of the action and the four-term
    identity over the short run.  action_rows: (R, sup_t |M_a|, sup/R).
    beta_fit is None for degenerate (zero-potential) data.
    """

    config: dict
    identity_rows: tuple[tuple[float, float], ...]
    terms: tuple[MorawetzTerms, ...]
    action_times: tuple[float, ...]
    action_series: tuple[tuple[float, ...], ...]
    action_rows: tuple[tuple[float, float, float], ...]
    beta_fit: float | None


def _identity_study(
    traj: Trajectory, params: PhysParams, weight
) -> tuple[float, list[MorawetzTerms]]:
    """Worst centered-difference residual of dM_a/dt plus the term table."""
    actions = np.array([morawetz_action(u, weight) for u in traj.snapshots])
    times = np.asarray(traj.times, dtype=float)
    worst = 0.0
    terms: list[MorawetzTerms] = []
    for k in range(1, len(actions) - 1):
        row = morawetz_derivative(traj.snapshots[k], params, weight, t=float(times[k]))
        terms.append(row)
        fd = (actions[k + 1] - actions[k - 1]) / (times[k + 1] - times[k - 1])
        worst = max(worst, abs(fd - row.total))
    return worst, terms


def run_morawetz_verify(cfg: ExperimentConfig) -> MorawetzReport:
    """Identity dt-study, term table, action R-sweep, and growth exponent.

    The identity study reruns a short horizon (morawetz.identity_t_end) with
    every step recorded, halving dt morawetz.halvings times from
    morawetz.identity_dt0; the sponge is forced off there since the damped
    flow does not satisfy the identity.  The R-sweep and the growth fit use
    one long run under cfg.evolve as given.
    """
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    gs = None
    if cfg.initial_data.family == "ground_state_scaled":
        gs = solve_ground_state(
            params, grid, tol=cfg.groundstate_tol, max_iter=cfg.groundstate_max_iter
        )
    u0 = build_initial_data(cfg, grid, gs=gs)

    identity_weight = build_morawetz_weight(cfg.morawetz.identity_R)
    identity_rows: list[tuple[float, float]] = []
    finest_terms: list[MorawetzTerms] = []
    for k in range(cfg.morawetz.halvings + 1):
        dt_k = cfg.morawetz.identity_dt0 / 2.0**k
        short_cfg = EvolveConfig(
            dt=dt_k,
            t_end=cfg.morawetz.identity_t_end,
            snapshot_stride=1,
            nonlinear=cfg.evolve.nonlinear,
            grad_ceiling_factor=cfg.evolve.grad_ceiling_factor,
        )
        short = evolve(u0, params, short_cfg)
        residual, terms = _identity_study(short, params, identity_weight)
        identity_rows.append((dt_k, residual))
        finest_terms = terms

    traj = evolve(u0, params, cfg.evolve)
    times = tuple(float(t) for t in traj.times)
    series: list[tuple[float, ...]] = []
    rows: list[tuple[float, float, float]] = []
    for radius in cfg.morawetz.radii:
        weight = build_morawetz_weight(radius)
        actions = [morawetz_action(u, weight) for u in traj.snapshots]
        sup = max((abs(a) for a in actions), default=0.0)
        series.append(tuple(actions))
        rows.append((radius, sup, sup / radius))

    beta = None
    if len(traj.times) >= 10:
        beta, _ = spacetime_potential_growth(traj)

    return MorawetzReport(
        config=config_to_mapping(cfg),
        identity_rows=tuple(identity_rows),
        terms=tuple(finest_terms),
        action_times=times,
        action_series=tuple(series),
        action_rows=tuple(rows),
        beta_fit=beta,
    )


@dataclass(frozen=True)
class GnSweepReport:
    """Interpolation-ratio sweep over the seeded random suite.

    rows are (sample index, gn_ratio, sobolev_ratio); the max fields are the
    empirical suite bounds.
    """

    config: dict
    count: int
    seed: int
    rows: tuple[tuple[int, float, float], ...]
    max_gn_ratio: float
    max_sobolev_ratio: float


def random_radial_suite(grid: RadialGrid, count: int, seed: int) -> list[Field]:
    """Seeded smooth radial test fields: signed mixtures of Gaussian bumps.

    Each sample stacks one to three bumps with amplitudes in [0.2, 1.2],
    widths in [0.4, 2.0], and ring centers in [0, r_max/4]; everything decays
    far inside the domain edge, so quadrature error stays negligible.
    """
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(count):
        values = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            amp = rng.uniform(0.2, 1.2) * rng.choice((-1.0, 1.0))
            width = rng.uniform(0.4, 2.0)
            center = rng.uniform(0.0, 0.25 * grid.r_max)
            values += amp * np.exp(-((grid.r - center) ** 2) / (2.0 * width**2))
        fields.append(Field(grid=grid, values=values.astype(complex)))
    return fields


def run_gn_sweep(cfg: ExperimentConfig) -> GnSweepReport:
    params = make_params(cfg.p, cfg.b)
    grid = build_grid(cfg.r_max, cfg.n)
    gs = solve_ground_state(params, grid, tol=cfg.groundstate_tol, max_iter=cfg.groundstate_max_iter)
    rows = []
    for i, sample in enumerate(random_radial_suite(grid, cfg.gn_count, cfg.seed)):
        rows.append((i, gn_ratio(sample, params, gs.c0), radial_sobolev_ratio(sample)))
    return GnSweepReport(
        config=config_to_mapping(cfg),
        count=cfg.gn_count,
        seed=cfg.seed,
        rows=tuple(rows),
        max_gn_ratio=max(r[1] for r in rows),
        max_sobolev_ratio=max(r[2] for r in rows),
    )
