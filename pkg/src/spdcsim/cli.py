"""Command-line interface: ``spdcsim <command> [options]``.

Commands write data files only (CSV or JSON) into ``--out``. Exit status is
0 on success, 2 for configuration or validation errors and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AnalysisError, schmidt
from .config import ConfigError, SourceConfig, apply_overrides, load_config, parse_quantity
from .design import optimize_filters, walkoff_report
from .dispersion import DispersionError
from .entanglement import (ALICE_ANGLES, FitError, StateError, chsh_from_visibilities, fit_visibility,
                           fringe, synthesize_counts, visibility_report)
from .filters import FilterError, heralded_bob_spectrum
from .jsa import GridError, jsi, phase_matching_ridge_angle, principal_axis_angle
from .pipeline import Source, build_source

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
CW_AXIS_TOL_DEG = 1.0


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    path.write_text(buffer.getvalue(), encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2) + "\n", encoding="utf-8")


def _metadata(command: str, source: Source, **extra) -> dict:
    meta = {
        "tool": "spdcsim",
        "version": __version__,
        "command": command,
        "config_hash": source.config.digest(),
        "grid": source.grid.metadata(),
        "poling_period_m": source.crystal.poling_period,
        "temperature_c": source.crystal.temperature,
    }
    meta.update(extra)
    return meta


def _table(out: Path, fmt: str, name: str, header: list[str], rows: list, meta: dict) -> None:
    if fmt == "csv":
        _write_csv(out / f"{name}.csv", header, rows)
    else:
        _write_json(out / f"{name}.json", {"metadata": meta, "columns": header,
                                           "rows": [list(r) for r in rows]})


def cmd_jsi(source: Source, args, out: Path) -> None:
    grid = source.grid
    intensity = jsi(source.amplitude)
    ridge = phase_matching_ridge_angle(source.crystal, grid)
    axis = principal_axis_angle(intensity, grid)
    meta = _metadata(
        "jsi", source,
        ridge_angle_deg=ridge,
        jsi_principal_axis_deg=axis,
        anti_diagonal=bool(abs(axis - 45.0) < CW_AXIS_TOL_DEG),
        cw=source.pump.cw,
        purity=schmidt(source.amplitude).purity,
        normalization="sum(JSI) * d_omega_signal * d_omega_idler = 1",
    )
    if args.format == "csv":
        header = ["signal_nm\\idler_nm"] + [repr(float(x)) for x in grid.idler_nm]
        rows = ([s] + list(r) for s, r in zip(grid.signal_nm.tolist(), intensity.tolist()))
        _write_csv(out / "jsi.csv", header, rows)
        _write_json(out / "jsi_meta.json", {"metadata": meta})
    else:
        _write_json(out / "jsi.json", {"metadata": meta, "signal_nm": grid.signal_nm,
                                       "idler_nm": grid.idler_nm, "jsi": intensity})


def cmd_herald(source: Source, args, out: Path) -> None:
    terms = source.terms()
    spectra = [heralded_bob_spectrum(t) for t in terms]
    alice, bob = source.filters()
    summary = {
        s.label: {"centroid_nm": s.centroid_nm, "fwhm_nm": s.fwhm_nm,
                  "pass_probability": t.pass_probability}
        for s, t in zip(spectra, terms)
    }
    meta = _metadata("herald", source, alice_filter=alice.describe(),
                     bob_filter=None if bob is None else bob.describe(), spectra=summary,
                     centroid_gap_nm=abs(spectra[0].centroid_nm - spectra[1].centroid_nm),
                     normalization="sum(density) * d_omega = 1")
    for spec in spectra:
        rows = list(zip(spec.wavelength_nm.tolist(), spec.density.tolist()))
        _table(out, args.format, f"herald_{spec.label}", ["wavelength_nm", "density"], rows, meta)
    if args.format == "csv":
        _write_json(out / "herald_meta.json", {"metadata": meta})


def cmd_overlap_scan(source: Source, args, out: Path) -> None:
    results = source.scan()
    rows = [(r.detuning_nm, r.magnitude, *r.term_probabilities) for r in results]
    alice, bob = source.filters()
    meta = _metadata("overlap-scan", source, method=source.config.analysis.overlap_method,
                     alice_template=alice.describe(),
                     bob_template=None if bob is None else bob.describe(),
                     min_overlap=min(r.magnitude for r in results))
    _table(out, args.format, "overlap_scan",
           ["delta_nm", "overlap_magnitude", "term1_prob", "term2_prob"], rows, meta)
    if args.format == "csv":
        _write_json(out / "overlap_scan_meta.json", {"metadata": meta})


def cmd_entanglement(source: Source, args, out: Path) -> None:
    overlap = source.overlap()
    state = source.state(args.overlap_override)
    report = visibility_report(state)
    payload = {
        "overlap": {"magnitude": overlap.magnitude, "real": overlap.overlap.real,
                    "imag": overlap.overlap.imag, "method": overlap.method,
                    "term_probabilities": overlap.term_probabilities},
        "overlap_override": args.overlap_override,
        "weights": state.weights,
        "analytic": report.as_dict(),
        "S_from_visibilities": chsh_from_visibilities(report.v_h, report.v_v,
                                                      report.v_d, report.v_a)[0],
    }
    fits = {}
    for basis in ALICE_ANGLES:
        curve = fringe(state, basis)
        header, rows = ["angle_deg", "probability"], list(zip(curve.angles_deg.tolist(),
                                                               curve.probabilities.tolist()))
        if args.counts:
            curve = synthesize_counts(curve, args.counts, args.seed + list(ALICE_ANGLES).index(basis))
            header.append("counts")
            rows = [r + (int(n),) for r, n in zip(rows, curve.counts.tolist())]
            fit = fit_visibility(curve)
            fits[basis] = {"visibility": fit.visibility, "uncertainty": fit.uncertainty}
        _table(out, args.format, f"fringe_{basis}", header, rows,
               _metadata("entanglement", source, basis=basis))
    if fits:
        s, sigma = chsh_from_visibilities(*(fits[b]["visibility"] for b in "HVDA"),
                                          errors=[fits[b]["uncertainty"] for b in "HVDA"])
        payload["fitted"] = {"visibilities": fits, "S": s, "S_uncertainty": sigma,
                             "mean_pairs_per_setting": args.counts, "seed": args.seed}
    _write_json(out / "report.json", {"metadata": _metadata("entanglement", source), **payload})


def cmd_design(source: Source, args, out: Path) -> None:
    fb = source.config.fibre
    report = walkoff_report(source.crystal, source.degenerate_nm * 1e-3, fb.group_birefringence,
                            fb.compensation_fraction, fb.length)
    result = optimize_filters(source.amplitude, args.w_v, args.w_r,
                              shape=source.config.filters.alice.shape,
                              method=source.config.analysis.overlap_method)
    best = result.best.as_row()
    _write_json(out / "walkoff.json", {
        "metadata": _metadata("design", source),
        "walkoff": report.as_dict(),
        "optimizer": {"w_visibility": args.w_v, "w_rate": args.w_r, "best": best,
                      "alice_filter": result.alice_filter.describe(),
                      "bob_filter": None if result.bob_filter is None else result.bob_filter.describe()},
    })
    header = list(best)
    rows = [[c.as_row()[k] for k in header] for c in result.table]
    _table(out, args.format, "design_scores", header, rows, _metadata("design", source))


COMMANDS = {
    "jsi": cmd_jsi,
    "herald": cmd_herald,
    "overlap-scan": cmd_overlap_scan,
    "entanglement": cmd_entanglement,
    "design": cmd_design,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML source config (defaults if omitted)")
    common.add_argument("--out", type=Path, help="output directory (default: output.path)")
    common.add_argument("--format", choices=("csv", "json"), help="table format (default: output.format)")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic counts")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. --set crystal.temperature='90 degC'")
    common.add_argument("--cw", action="store_true", help="continuous-wave pump")
    common.add_argument("--shape", choices=("gaussian", "rectangular", "super-gaussian"),
                        help="shape for every filter")
    common.add_argument("--detuning", help="separating filter offset from degeneracy, e.g. '0.5 nm'")
    bob = common.add_mutually_exclusive_group()
    bob.add_argument("--bob-filter", nargs="?", const="200 pm", metavar="FWHM",
                     help="add a Bob filter at the conjugate wavelength (default 200 pm)")
    bob.add_argument("--no-bob-filter", action="store_true", help="remove any Bob filter")
    common.add_argument("--method", choices=("spectral", "joint"), help="term-overlap definition")
    common.add_argument("--quiet", action="store_true", help="do not print the effective config")

    parser = argparse.ArgumentParser(prog="spdcsim", description="Pulsed type-II SPDC source simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("jsi", parents=[common], help="joint spectral intensity grid")
    sub.add_parser("herald", parents=[common], help="Bob spectra heralded by each term")
    scan = sub.add_parser("overlap-scan", parents=[common], help="term overlap against detuning")
    scan.add_argument("--start", help="first detuning, e.g. '-1 nm'")
    scan.add_argument("--stop", help="last detuning, e.g. '1 nm'")
    scan.add_argument("--points", type=int, help="number of detunings")
    ent = sub.add_parser("entanglement", parents=[common], help="visibilities, CHSH and fringes")
    ent.add_argument("--overlap-override", type=float, metavar="V",
                     help="replace the computed term overlap by V")
    ent.add_argument("--counts", type=float, metavar="N",
                     help="also synthesize Poisson counts with N mean pairs per setting and fit them")
    des = sub.add_parser("design", parents=[common], help="walk-off compensation and filter search")
    des.add_argument("--w-v", type=float, default=1.0, help="visibility weight")
    des.add_argument("--w-r", type=float, default=0.1, help="log-rate weight")
    return parser


def effective_config(args) -> SourceConfig:
    cfg = load_config(args.config) if args.config else SourceConfig()
    overrides = list(args.overrides)
    if args.cw:
        overrides.append("pump.duration=cw")
    if args.no_bob_filter:
        overrides.append("filters.bob=null")
    if args.bob_filter:
        overrides.append(f"filters.bob={{fwhm: '{args.bob_filter}'}}")
    if args.method:
        overrides.append(f"analysis.overlap_method={args.method}")
    if args.detuning:
        try:
            delta = parse_quantity(args.detuning, "length")[0]
        except ValueError as exc:
            raise ConfigError(f"--detuning: {exc}") from None
        center = cfg.grid.center
        for item in overrides:
            if item.startswith("grid.center="):
                center = parse_quantity(item.split("=", 1)[1].strip("'\""), "length")[0]
        overrides.append(f"filters.alice.center='{center + delta!r} m'")
    for flag in ("start", "stop"):
        value = getattr(args, flag, None)
        if value:
            overrides.append(f"analysis.scan.{flag}='{value}'")
    if getattr(args, "points", None) is not None:
        overrides.append(f"analysis.scan.points={args.points}")
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    if args.shape:
        shape_overrides = [f"filters.alice.shape={args.shape}"]
        if cfg.filters.bob is not None:
            shape_overrides.append(f"filters.bob.shape={args.shape}")
        cfg = apply_overrides(cfg, shape_overrides)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        args.format = args.format or cfg.output.format
        out = args.out or Path(cfg.output.path)
        if not args.quiet:
            print("# effective config", file=sys.stderr)
            print(cfg.dump(), file=sys.stderr, end="")
        if getattr(args, "overlap_override", None) is not None and not 0 <= args.overlap_override <= 1:
            raise ConfigError("--overlap-override must lie in [0, 1]")
        if getattr(args, "counts", None) is not None and not args.counts > 0:
            raise ConfigError("--counts must be positive")
        source = build_source(cfg)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](source, args, out)
    except (GridError, FilterError, AnalysisError, StateError, FitError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"spdcsim: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DispersionError, ValueError, OSError) as exc:
        print(f"spdcsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
