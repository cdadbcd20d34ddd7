"""Artifact writers: CSV tables, a checksummed JSON manifest, SVG plots.

Everything here is deterministic by construction so that identical runs
produce byte-identical CSV files: floats are written with 17 significant
digits (enough to round-trip a double), column orders are fixed, manifests
are emitted with sorted keys, and no timestamps are recorded anywhere.
Plots carry a fixed hash salt and a scrubbed Date field for the same
reason.  I/O failures propagate as OSError, which already names the path.

This is a batch tool, so the Agg backend is selected unconditionally.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.integrate import cumulative_trapezoid

from .diagnostics import write_morawetz_terms_csv, write_records_csv
from .groundstate import save_profile

if TYPE_CHECKING:
    from .experiments import GnSweepReport, GroundStateReport, MorawetzReport, RunReport
    from .groundstate import GroundState

MANIFEST_VERSION = 1

SUMMARY_COLUMNS = ("lambda", "below", "beta_fit", "cauchy_defect", "status")

_SVG_RC = {"svg.hashsalt": "inlslab"}


def fmt(value) -> str:
    """Fixed CSV cell formatting: 17 significant digits, lowercase booleans,
    empty string for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _num(value) -> float | None:
    # JSON-safe number: None for missing or non-finite entries.
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def _file_entry(base: Path, path: Path) -> dict:
    data = path.read_bytes()
    return {
        "path": path.relative_to(base).as_posix(),
        "sha256": hashlib.sha256(data).hexdigest(),
        "bytes": len(data),
    }


def write_manifest(path: Path, scenario, config, runs: list, files: list) -> None:
    payload = {
        "manifest_version": MANIFEST_VERSION,
        "scenario": scenario,
        "config": config,
        "runs": runs,
        "files": files,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_summary_csv(path: Path, reports: Sequence["RunReport"]) -> None:
    """Scan summary, one row per run in the given (lambda-sorted) order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for rep in reports:
            below = rep.threshold.below_gradient if rep.threshold is not None else None
            writer.writerow(
                [fmt(rep.lam), fmt(below), fmt(rep.beta_fit), fmt(rep.cauchy_defect), rep.status]
            )


def _run_entry(rep: "RunReport") -> dict:
    thr = rep.threshold
    final = None
    if rep.final is not None:
        final = {
            "t": _num(rep.final.t),
            "mass": _num(rep.final.mass),
            "energy": _num(rep.final.energy),
            "grad_sq": _num(rep.final.grad_sq),
            "potential": _num(rep.final.potential),
            "h1_norm": _num(rep.final.h1_norm),
        }
    return {
        "lambda": _num(rep.lam),
        "status": rep.status,
        "error": rep.error,
        "beta_fit": _num(rep.beta_fit),
        "cauchy_defect": _num(rep.cauchy_defect),
        "defect_relative": _num(rep.defect_relative),
        "window_defects": [_num(d) for d in rep.window_defects],
        "windows": [list(w) for w in rep.windows],
        "max_gradient_quotient": _num(rep.max_gradient_quotient),
        "below_gradient": thr.below_gradient if thr is not None else None,
        "below_mass_energy": thr.below_mass_energy if thr is not None else None,
        "energy_negative": thr.energy_negative if thr is not None else None,
        "rules": {"defect_scattered": rep.defect_tol, "beta_soliton_band": rep.beta_band},
        "final": final,
    }


def _save_svg(fig, path: Path) -> None:
    with plt.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_potential(path: Path, labeled: Sequence[tuple[str, Sequence]]) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, records in labeled:
        ax.plot([r.t for r in records], [r.potential for r in records], label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("weighted potential")
    if len(labeled) > 1:
        ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)


def plot_cumulative_loglog(path: Path, labeled: Sequence[tuple[str, Sequence]]) -> None:
    """Cumulative spacetime potential against T on log-log axes; slope ~ the
    growth exponent.  Runs with no positive samples are skipped."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    drew = False
    for label, records in labeled:
        t = np.array([r.t for r in records], dtype=float)
        pot = np.array([r.potential for r in records], dtype=float)
        cum = np.concatenate([[0.0], cumulative_trapezoid(pot, t)])
        mask = (t > 0.0) & (cum > 0.0)
        if mask.any():
            ax.loglog(t[mask], cum[mask], label=label)
            drew = True
    ax.set_xlabel("T")
    ax.set_ylabel("cumulative potential")
    if drew and len(labeled) > 1:
        ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)


def plot_action(
    path: Path,
    times: Sequence[float],
    series: Sequence[Sequence[float]],
    radii: Sequence[float],
) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for radius, actions in zip(radii, series):
        ax.plot(times, actions, label=f"R={radius:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("action M_a(t)")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)


def emit_outputs(reports: Sequence["RunReport"], out_dir) -> list[Path]:
    """Persist run reports: per-run records CSV, a lambda summary when the
    reports come from a scan, the two standard plots, and a manifest with a
    sha256 for every file written.

    Runs execute in parallel elsewhere; all writing happens here in one
    place, serially.  The manifest is always written (an empty report list
    yields a manifest with zero runs and no CSVs) and is always last, so a
    complete manifest implies complete outputs.  Returns every path written,
    manifest included.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for i, rep in enumerate(reports):
        if rep.records:
            target = out / f"run_{i:03d}_records.csv"
            write_records_csv(str(target), list(rep.records))
            written.append(target)

    if any(rep.lam is not None for rep in reports):
        target = out / "summary.csv"
        write_summary_csv(target, reports)
        written.append(target)

    labeled = [
        (f"lambda={rep.lam:g}" if rep.lam is not None else "run", rep.records)
        for rep in reports
        if len(rep.records) >= 2
    ]
    if labeled:
        target = out / "potential_vs_t.svg"
        plot_potential(target, labeled)
        written.append(target)
        target = out / "cumulative_potential_loglog.svg"
        plot_cumulative_loglog(target, labeled)
        written.append(target)

    scenario = reports[0].config.get("scenario") if reports else None
    config = reports[0].config if reports else None
    manifest = out / "manifest.json"
    write_manifest(
        manifest,
        scenario,
        config,
        [_run_entry(rep) for rep in reports],
        [_file_entry(out, f) for f in written],
    )
    return written + [manifest]


def _write_rows_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])


def emit_morawetz_outputs(report: "MorawetzReport", out_dir) -> list[Path]:
    """Persist the identity dt-table, the four-term table at the finest dt,
    the action R-sweep, an action plot, and the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    target = out / "identity_residuals.csv"
    _write_rows_csv(target, ("dt", "residual"), report.identity_rows)
    written.append(target)

    target = out / "morawetz_terms.csv"
    write_morawetz_terms_csv(str(target), list(report.terms))
    written.append(target)

    target = out / "action_bound.csv"
    _write_rows_csv(target, ("R", "sup_abs_action", "sup_over_R"), report.action_rows)
    written.append(target)

    if report.action_series and len(report.action_times) >= 2:
        target = out / "action_vs_t.svg"
        radii = [row[0] for row in report.action_rows]
        plot_action(target, report.action_times, report.action_series, radii)
        written.append(target)

    summary = {
        "identity": [[_num(dt), _num(res)] for dt, res in report.identity_rows],
        "action": [[_num(r), _num(s), _num(q)] for r, s, q in report.action_rows],
        "beta_fit": _num(report.beta_fit),
    }
    manifest = out / "manifest.json"
    write_manifest(
        manifest,
        report.config.get("scenario"),
        report.config,
        [summary],
        [_file_entry(out, f) for f in written],
    )
    return written + [manifest]


def emit_gn_outputs(report: "GnSweepReport", out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "gn_ratios.csv"
    _write_rows_csv(target, ("sample", "gn_ratio", "sobolev_ratio"), report.rows)
    summary = {
        "count": report.count,
        "seed": report.seed,
        "max_gn_ratio": _num(report.max_gn_ratio),
        "max_sobolev_ratio": _num(report.max_sobolev_ratio),
    }
    manifest = out / "manifest.json"
    write_manifest(
        manifest,
        report.config.get("scenario"),
        report.config,
        [summary],
        [_file_entry(out, target)],
    )
    return [target, manifest]


def emit_groundstate_outputs(
    report: "GroundStateReport", gs: "GroundState", out_dir
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "groundstate_profile.csv"
    save_profile(str(target), gs)
    summary = {
        "mass_Q": _num(report.mass_Q),
        "grad_Q": _num(report.grad_Q),
        "pot_Q": _num(report.pot_Q),
        "c0": _num(report.c0),
        "c_pdb": _num(report.c_pdb),
        "gradient_ratio": _num(report.gradient_ratio),
        "potential_ratio": _num(report.potential_ratio),
        "iterations": report.iterations,
        "residual": _num(report.residual),
    }
    manifest = out / "manifest.json"
    write_manifest(
        manifest,
        report.config.get("scenario"),
        report.config,
        [summary],
        [_file_entry(out, target)],
    )
    return [target, manifest]
