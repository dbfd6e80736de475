"""Command-line surface for batch use.

Subcommands: ``fit-stark`` (fit the quadratic energy map from a bias scan),
``tune`` (solve a full operating point), ``simulate`` (generate tomography
counts under Poisson noise), ``tomography`` (reconstruct a state or the
reduced fidelity estimate from counts), ``plan`` (ensemble wavelength
matching).

Exit codes: 0 success, 2 input or configuration error, 3 physics target out
of range, 4 numerical non-convergence.  Outputs are machine-first (JSON or
CSV), deterministic for a fixed seed, and inputs are never modified.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import cascade, planner, stark, tomography
from .emitter import DiodeModel, load_dot_config
from .errors import OutOfRangeError
from .units import ghz_to_ev

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OUT_OF_RANGE = 3
EXIT_NO_CONVERGENCE = 4


class InputError(Exception):
    """User-facing input/configuration problem (exit code 2)."""


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {path}")
    return p


def _check_output_path(path: str | None) -> None:
    if path is not None and not Path(path).parent.exists():
        raise InputError(f"output directory does not exist: {Path(path).parent}")


def _emit_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_json(payload: dict, out: str | None) -> None:
    _emit_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _load_scan_csv(path: Path) -> list[tuple[float, float]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["bias_v", "energy_ev"]:
            raise InputError(f"{path}:1: expected header bias_v,energy_ev")
        for row in reader:
            try:
                rows.append((float(row["bias_v"]), float(row["energy_ev"])))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}:{reader.line_num}: bad scan row: {exc}") from exc
    return rows


def cmd_fit_stark(args) -> int:
    scan = _load_scan_csv(_require_file(args.scan_csv))
    doc = json.loads(_require_file(args.diode).read_text())
    diode = DiodeModel.from_json(doc.get("diode", doc))
    fit = stark.fit_stark_parameters(scan, diode)
    _emit_json({"diode": diode.to_json(), "fit": fit.to_json()}, args.output)
    return EXIT_OK


def _resolve_cal_constant(config, override: float | None) -> float:
    if override is not None:
        return override
    if config.cal_constant is not None:
        return config.cal_constant
    raise InputError(
        "no CW calibration constant: set cal_constant in the dot document or pass --cal-constant"
    )


def cmd_tune(args) -> int:
    config = load_dot_config(_require_file(args.qd_json))
    cal = _resolve_cal_constant(config, args.cal_constant)
    point = stark.plan_operating_point(
        config.dot, config.diode, args.target_ex, args.detuning, cal
    )
    _emit_json(point.to_json(), args.output)
    return EXIT_OK


def _resolve_tau_x(config, bias: float | None) -> float:
    lookup = config.dot.lifetime_x
    if bias is not None:
        return lookup(bias)
    if len(lookup.points) == 1:
        return lookup.points[0][1]
    raise InputError(
        "dot has a per-bias X lifetime table: pass --bias to pick the operating bias"
    )


def cmd_simulate(args) -> int:
    config = load_dot_config(_require_file(args.qd_json))
    if args.pairs <= 0:
        raise InputError("--pairs must be positive")
    if not 0 <= args.seed < 2**64:
        raise InputError("--seed must be a 64-bit unsigned integer")
    tau_x = _resolve_tau_x(config, args.bias)
    rho = cascade.time_integrated_density_matrix(
        cascade.CascadeParams(fss=config.dot.fss, lifetime_x=tau_x, g2_zero=config.dot.g2_zero)
    )
    if args.settings == "16":
        settings = tomography.tomography_settings_16()
    else:
        settings = tomography.reduced_settings_6()
    records = tomography.simulate_counts(rho, settings, args.pairs, args.seed)
    if args.output is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(tomography.COUNTS_COLUMNS)
        for r in records:
            writer.writerow([r.setting.xx_proj, r.setting.x_proj, r.counts, r.exposure])
    else:
        tomography.write_counts_csv(records, args.output)
    return EXIT_OK


def cmd_tomography(args) -> int:
    records = tomography.read_counts_csv(_require_file(args.counts_csv))
    if args.method == "reduced":
        try:
            correlations = tomography.correlations_from_records(records)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        fidelity = tomography.reduced_fidelity(
            correlations["linear"], correlations["diagonal"], correlations["circular"]
        )
        _emit_json({"method": "reduced", "fidelity": fidelity, "correlations": correlations}, args.output)
        return EXIT_OK

    try:
        result = tomography.mle_reconstruct(records, max_iter=args.max_iter)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    payload = {
        "method": "mle",
        "fidelity": cascade.fidelity_to_phi_plus(result.state),
        "density_matrix": result.state.to_jsonable(),
        "basis": list(cascade.BASIS),
        "diagnostics": result.diagnostics(),
    }
    _emit_json(payload, args.output)
    if not result.converged:
        print(f"mle did not converge: {result.message}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_plan(args) -> int:
    records, problems = planner.load_ensemble(_require_file(args.ensemble_csv))
    for problem in problems:
        print(f"skipped row: {problem}", file=sys.stderr)
    if args.target is None:
        plan = planner.max_resonance_group(records)
    else:
        target = args.target if args.unit == "ev" else ghz_to_ev(args.target)
        plan = planner.group_at_target(records, target)
    _emit_json(plan.to_json(), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starktune",
        description="Operating points, fidelity prediction, tomography simulation "
        "and wavelength matching for tunable quantum-dot pair sources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-stark", help="fit the quadratic energy map from a bias-scan CSV")
    p.add_argument("scan_csv", help="CSV with columns bias_v,energy_ev")
    p.add_argument("--diode", required=True, help="JSON document with the diode parameters")
    p.add_argument("-o", "--output", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_fit_stark)

    p = sub.add_parser("tune", help="solve bias and CW drive for a target X energy")
    p.add_argument("qd_json", help="dot/diode JSON document")
    p.add_argument("--target-ex", type=float, required=True, help="target X emission energy, eV")
    p.add_argument("--detuning", type=float, required=True, help="CW drive detuning, ueV (must be > 0)")
    p.add_argument("--cal-constant", type=float, default=None, help="override the document's CW calibration, ueV/sqrt(uW)")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="simulate tomography counts for a dot")
    p.add_argument("qd_json")
    p.add_argument("--pairs", type=float, required=True, help="mean generated pairs per setting")
    p.add_argument("--seed", type=int, required=True, help="64-bit unsigned seed")
    p.add_argument("--settings", choices=["16", "reduced6"], default="16",
                   help="16: full reconstruction set; reduced6: co/cross pairs in the linear, diagonal and circular bases")
    p.add_argument("--bias", type=float, default=None, help="bias for the per-bias lifetime table, V")
    p.add_argument("-o", "--output", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomography", help="estimate fidelity (and state) from a counts CSV")
    p.add_argument("counts_csv")
    p.add_argument("--method", choices=["mle", "reduced"], required=True)
    p.add_argument("--max-iter", type=int, default=tomography.MLE_MAX_ITER_DEFAULT)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("plan", help="ensemble wavelength matching from an ensemble CSV")
    p.add_argument("ensemble_csv")
    p.add_argument("--target", type=float, default=None,
                   help="external target line; without it, find the best common energy")
    p.add_argument("--unit", choices=["ev", "ghz"], default="ev", help="unit of --target")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_output_path(getattr(args, "output", None))
        return args.func(args)
    except OutOfRangeError as exc:
        lo, hi = exc.achievable
        print(f"error: {exc} (achievable [{lo:.9f}, {hi:.9f}] eV)", file=sys.stderr)
        return EXIT_OUT_OF_RANGE
    except (InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
