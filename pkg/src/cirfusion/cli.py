"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 every window
degenerate.
"""

import argparse
from dataclasses import replace
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .calib import CalibrationConfig, calibrate
from .errors import CirFusionError, ScenarioError
from .formats import format_recording, format_report_csv, format_summary, read_recording
from .pipeline import COUNT_CONVENTIONS, METHODS, WindowConfig, compare_methods, run_recording
from .scenario import load_scenario, load_sweep, preset, simulate
from .spectral import BandOfInterest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


class _Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _config_stage(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, CirFusionError) as exc:
        raise _Failure(EXIT_CONFIG, str(exc)) from None


def _data_stage(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, ArithmeticError, CirFusionError) as exc:
        raise _Failure(EXIT_DATA, str(exc)) from None


def _add_calibration_args(p):
    d = CalibrationConfig()
    g = p.add_argument_group("calibration")
    g.add_argument("--search-start-bin", type=int, default=d.search_start_bin,
                   help="first bin searched for the reference peak (default %(default)s)")
    g.add_argument("--neighbor-radius", type=int, default=d.neighbor_radius,
                   help="bins on each side of the peak used for the energy (default %(default)s)")
    g.add_argument("--target-ref-bin", type=int, default=None,
                   help="alignment bin (default: most common detected peak)")
    g.add_argument("--target-ref-energy", type=float, default=d.target_ref_energy,
                   help="reference energy after scaling (default %(default)s)")


def _add_window_args(p, with_method=True):
    d = WindowConfig()
    g = p.add_argument_group("estimation")
    if with_method:
        g.add_argument("--method", choices=METHODS, default=d.method)
    g.add_argument("--band", default=str(d.band), help="breathing band low:high in Hz (default %(default)s)")
    g.add_argument("--window", type=int, default=d.window_snapshots, help="snapshots per window (default %(default)s)")
    g.add_argument("--hop", type=int, default=d.hop_snapshots, help="window hop in snapshots (default %(default)s)")
    g.add_argument("--rate", type=float, default=None,
                   help="nominal snapshot rate in Hz (default: from the recording header)")
    g.add_argument("--resolution", type=float, default=d.resolution_hz, help="PSD grid step in Hz (default %(default)s)")
    g.add_argument("--rank-tol", type=float, default=d.rank_tol)
    g.add_argument("--noise-floor-factor", type=float, default=d.noise_floor_factor,
                   help="fuse only bins whose power exceeds this multiple of the median (0 keeps all)")
    g.add_argument("--edge-margin", type=float, default=d.edge_margin_bins,
                   help="widen the band by this many DFT bins per side when scoring (default %(default)s)")
    g.add_argument("--count-convention", choices=COUNT_CONVENTIONS, default=d.count_convention)
    g.add_argument("--calibrated", action="store_true", help="input is already calibrated")


def _calib_config(args):
    return _config_stage(
        CalibrationConfig,
        search_start_bin=args.search_start_bin,
        neighbor_radius=args.neighbor_radius,
        target_ref_bin=args.target_ref_bin,
        target_ref_energy=args.target_ref_energy,
    )


def _window_config(args, rate_hz, method=None):
    band = _config_stage(BandOfInterest.parse, args.band)
    return _config_stage(
        WindowConfig,
        window_snapshots=args.window,
        hop_snapshots=args.hop,
        nominal_rate_hz=args.rate or rate_hz,
        resolution_hz=args.resolution,
        band=band,
        method=method or getattr(args, "method", "fusion"),
        rank_tol=args.rank_tol,
        noise_floor_factor=args.noise_floor_factor,
        count_convention=args.count_convention,
        edge_margin_bins=args.edge_margin,
    )


def _load(path):
    return _data_stage(read_recording, path)


def _write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_DATA, f"cannot write {path}: {exc.strerror}") from None


def _outputs(args, default_stem):
    stem = Path(args.input).with_suffix("")
    csv_path = args.csv or f"{stem}.{default_stem}.csv"
    json_path = args.json or f"{stem}.{default_stem}.json"
    return csv_path, json_path


def _fmt(value):
    return "n/a" if value is None else f"{value:.4f}"


def _check_degenerate(*reports):
    if all(r.estimates and not r.valid for r in reports):
        raise _Failure(EXIT_DEGENERATE, "every window was degenerate")


def cmd_simulate(args, out):
    if (args.scenario is None) == (args.preset is None):
        raise _Failure(EXIT_CONFIG, "give exactly one of SCENARIO or --preset")
    if args.scenario is not None:
        try:
            scenario = load_scenario(args.scenario)
        except OSError as exc:
            raise _Failure(EXIT_CONFIG, f"cannot read {args.scenario}: {exc.strerror}") from None
        except (ScenarioError, ValueError) as exc:
            raise _Failure(EXIT_CONFIG, f"{args.scenario}: {exc}") from None
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
    else:
        scenario = _config_stage(preset, args.preset, args.seed or 0)
    recording = _data_stage(simulate, scenario)
    _write_text(args.output, format_recording(recording))
    gt = recording.ground_truth_hz
    print(f"wrote {len(recording)} snapshots x {recording.n_bins} bins to {args.output}", file=out)
    print(f"ground truth: {'none (static scene)' if gt is None else f'{gt:g} Hz'}", file=out)
    return EXIT_OK


def cmd_calibrate(args, out):
    cfg = _calib_config(args)
    recording = _load(args.input)
    calibrated = _data_stage(calibrate, recording, cfg)
    _write_text(args.output, format_recording(calibrated))
    lo, hi = calibrated.meta["valid_bins"]
    print(f"aligned to bin {calibrated.meta['reference_bin']}, valid bins [{lo}, {hi}) -> {args.output}",
          file=out)
    return EXIT_OK


def _print_report(report, out):
    print(f"{report.method}: {len(report.estimates)} windows, {report.n_failed} degenerate, "
          f"median confidence {_fmt(report.median_confidence)}", file=out)
    if report.ground_truth_hz is not None:
        print(f"{report.method}: median abs error {_fmt(report.median_abs_error_hz)} Hz "
              f"(ground truth {report.ground_truth_hz:g} Hz)", file=out)


def cmd_estimate(args, out):
    calib_cfg = _calib_config(args)
    recording = _load(args.input)
    cfg = _window_config(args, recording.nominal_rate_hz)
    report = _data_stage(run_recording, recording, cfg, calib_cfg,
                         calibrated=args.calibrated or bool(recording.meta.get("calibrated")))
    csv_path, json_path = _outputs(args, f"{cfg.method}")
    _write_text(csv_path, format_report_csv(report))
    _write_text(json_path, format_summary(report))
    _print_report(report, out)
    _check_degenerate(report)
    return EXIT_OK


def cmd_compare(args, out):
    calib_cfg = _calib_config(args)
    recording = _load(args.input)
    cfg = _window_config(args, recording.nominal_rate_hz)
    reports = _data_stage(compare_methods, recording, cfg, calib_cfg,
                          calibrated=args.calibrated or bool(recording.meta.get("calibrated")))
    csv_path, json_path = _outputs(args, "compare")
    _write_text(csv_path, format_report_csv(*reports))
    _write_text(json_path, format_summary(*reports))
    for r in reports:
        _print_report(r, out)
    _check_degenerate(*reports)
    return EXIT_OK


def sweep_table(spec, cfg=WindowConfig(), calib_cfg=CalibrationConfig(), log=None):
    """Median absolute error per displacement and preset, as a markdown table.

    A cell holds the median over seeds of each recording's median error. A
    case that fails is reported in its cell and the sweep carries on.
    Returns ``(markdown, n_failed_cells)``.
    """
    cfg = replace(cfg, hop_snapshots=spec.hop_snapshots)
    header = ["Displacement (mm)"]
    for p in spec.presets:
        header += [f"{p.upper()} Sel.", f"{p.upper()} Fus."]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    failed = 0
    for mm in spec.displacements_mm:
        row = [f"{mm:g}"]
        for p in spec.presets:
            errors = {"selection": [], "fusion": []}
            problem = None
            for seed in spec.seeds:
                name = f"{p}-{mm:g}mm-{spec.rate_hz:g}hz"
                try:
                    scenario = replace(preset(name, seed), duration_s=spec.duration_s)
                    sel, fus = compare_methods(simulate(scenario), cfg, calib_cfg)
                except (ValueError, ArithmeticError, CirFusionError) as exc:
                    problem = str(exc)
                    break
                for r in (sel, fus):
                    if r.median_abs_error_hz is not None:
                        errors[r.method].append(r.median_abs_error_hz)
            if problem is not None:
                failed += 1
                if log is not None:
                    print(f"{p} {mm:g} mm failed: {problem}", file=log)
                row += ["failed", "failed"]
                continue
            for m in ("selection", "fusion"):
                row.append(f"{np.median(errors[m]):.3f}" if errors[m] else "failed")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n", failed


def cmd_sweep(args, out):
    try:
        spec = load_sweep(args.spec)
    except OSError as exc:
        raise _Failure(EXIT_CONFIG, f"cannot read {args.spec}: {exc.strerror}") from None
    except (ScenarioError, ValueError) as exc:
        raise _Failure(EXIT_CONFIG, f"{args.spec}: {exc}") from None
    calib_cfg = _calib_config(args)
    table, failed = sweep_table(spec, WindowConfig(), calib_cfg, log=sys.stderr)
    _write_text(Path(args.output) / "sweep.md", table)
    print(table, end="", file=out)
    n_cells = len(spec.displacements_mm) * len(spec.presets)
    if failed == n_cells:
        raise _Failure(EXIT_DATA, "every sweep case failed")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cirfusion", description="Breathing-rate estimation from UWB channel impulse responses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic recording")
    p.add_argument("scenario", nargs="?", help="scenario YAML file")
    p.add_argument("--preset", help="named scenario, e.g. los-2mm-0.3hz, nlos-8mm, static")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("-o", "--output", required=True, help="recording file to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="delay and amplitude calibration")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_calibration_args(p)
    p.set_defaults(func=cmd_calibrate)

    for name, func, helptext in (
        ("estimate", cmd_estimate, "per-window breathing-rate estimation"),
        ("compare", cmd_compare, "selection and fusion on the same windows"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        p.add_argument("--csv", help="per-window CSV (default: next to the input)")
        p.add_argument("--json", help="summary JSON (default: next to the input)")
        _add_window_args(p, with_method=name == "estimate")
        _add_calibration_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="median-error table over displacements and presets")
    p.add_argument("spec", help="sweep YAML file")
    p.add_argument("-o", "--output", default=".", help="directory for sweep.md")
    _add_calibration_args(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except _Failure as exc:
        print(f"cirfusion {args.command}: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
