"""Command-line entry point.

Subcommands pick the scenario; a YAML config supplies everything else, with
a handful of flags for the common overrides.  Precedence for the output
directory: --out flag, then the config file, then the INLSLAB_OUT
environment variable, then ./out.  Exit codes: 0 full success, 1 when any
run failed (or a runtime error stopped the scenario), 2 for configuration
errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import yaml

from . import experiments as xp
from . import reporting as rp
from .grid import ParameterRangeError
from .groundstate import ConvergenceError

OUTPUT_ENV = "INLSLAB_OUT"

_SCENARIO_BY_COMMAND = {
    "groundstate": "groundstate_only",
    "run": "single_run",
    "scan": "threshold_scan",
    "verify-morawetz": "morawetz_verify",
    "gn-sweep": "gn_sweep",
}

_COMMAND_HELP = {
    "groundstate": "solve the ground-state profile and report its identities",
    "run": "evolve one initial datum and classify the outcome",
    "scan": "sweep u0 = lambda*Q over the configured lambda list",
    "verify-morawetz": "virial identity dt-study and action-bound R-sweep",
    "gn-sweep": "interpolation-ratio sweep over the seeded random suite",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inlslab",
        description="Radial focusing INLS laboratory: ground states, evolution, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, help_text in _COMMAND_HELP.items():
        cp = sub.add_parser(command, help=help_text)
        cp.add_argument("--config", type=Path, help="YAML experiment document")
        cp.add_argument("--out", type=Path, help="output directory (overrides config and env)")
        cp.add_argument("--threads", type=int, default=1, help="parallel scan workers")
        cp.add_argument("--seed", type=int, help="override the config seed")
        cp.add_argument("--dt", type=float, help="override evolve.dt")
        cp.add_argument("--n", type=int, help="override grid.n")
        cp.add_argument("--rmax", type=float, help="override grid.r_max")
    return parser


def _effective_config(args: argparse.Namespace) -> xp.ExperimentConfig:
    """Merge config file, flags, and environment into a validated config.

    Overrides are applied to the raw mapping so that validation and its
    field-path errors stay in one place.  The subcommand always selects the
    scenario, overriding whatever the document says.
    """
    if args.config is not None:
        doc = yaml.safe_load(args.config.read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise xp.ConfigError(f"{args.config}: top level: expected a mapping")
    else:
        doc = {"schema_version": xp.SCHEMA_VERSION}
    doc["scenario"] = _SCENARIO_BY_COMMAND[args.command]

    def nested(key: str) -> dict:
        section = doc.setdefault(key, {})
        if not isinstance(section, dict):
            raise xp.ConfigError(f"{key}: expected a mapping, got {section!r}")
        return section

    if args.seed is not None:
        doc["seed"] = args.seed
    if args.dt is not None:
        nested("evolve")["dt"] = args.dt
    if args.n is not None:
        nested("grid")["n"] = args.n
    if args.rmax is not None:
        nested("grid")["r_max"] = args.rmax

    if args.out is not None:
        doc["output_dir"] = str(args.out)
    elif "output_dir" not in doc and os.environ.get(OUTPUT_ENV):
        doc["output_dir"] = os.environ[OUTPUT_ENV]

    return xp.config_from_mapping(doc)


def _print_run_lines(reports) -> None:
    for rep in reports:
        label = f"lambda={rep.lam:g}" if rep.lam is not None else "run"
        beta = f"{rep.beta_fit:.4g}" if rep.beta_fit is not None else "-"
        defect = f"{rep.cauchy_defect:.4g}" if rep.cauchy_defect is not None else "-"
        print(f"{label}: status={rep.status} beta_fit={beta} cauchy_defect={defect}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _effective_config(args)
    except (xp.ConfigError, ParameterRangeError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = cfg.output_dir
    failed: list[str] = []
    try:
        if cfg.scenario == "groundstate_only":
            report, gs = xp.run_groundstate(cfg)
            files = rp.emit_groundstate_outputs(report, gs, out)
            print(
                f"ground state: iterations={report.iterations} residual={report.residual:.3e} "
                f"grad/mass={report.gradient_ratio:.9g} pot/mass={report.potential_ratio:.9g}"
            )
        elif cfg.scenario == "single_run":
            report = xp.run_single(cfg)
            files = rp.emit_outputs([report], out)
            _print_run_lines([report])
            if report.error:
                failed.append(f"run: {report.error}")
        elif cfg.scenario == "threshold_scan":
            reports = xp.run_threshold_scan(cfg, threads=max(1, args.threads))
            files = rp.emit_outputs(reports, out)
            _print_run_lines(reports)
            failed.extend(
                f"lambda={rep.lam:g}: {rep.error}" for rep in reports if rep.error
            )
        elif cfg.scenario == "morawetz_verify":
            report = xp.run_morawetz_verify(cfg)
            files = rp.emit_morawetz_outputs(report, out)
            for dt, residual in report.identity_rows:
                print(f"identity dt={dt:g}: residual={residual:.6e}")
            for radius, sup, ratio in report.action_rows:
                print(f"action R={radius:g}: sup|M_a|={sup:.6g} sup/R={ratio:.6g}")
        else:
            report = xp.run_gn_sweep(cfg)
            files = rp.emit_gn_outputs(report, out)
            print(
                f"suite of {report.count}: max gn_ratio={report.max_gn_ratio:.9g} "
                f"max sobolev_ratio={report.max_sobolev_ratio:.9g}"
            )
    except (ConvergenceError, ParameterRangeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(f"wrote {len(files)} files to {out}")
    if failed:
        print("failed runs:", file=sys.stderr)
        for line in failed:
            print(f"  {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
