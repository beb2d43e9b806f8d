"""``qci-sim`` command line.

Subcommands: ``pdf-grid``, ``marginal``, ``visibility-scan``, ``thermal``.
Exit codes: 0 success, 2 validation error, 3 quadrature failure, 4 I/O error.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analysis import (LC_PER_FWHM, Fig3Params, marginal_closed, particle_marginal,
                       sqrt2_mapping_check, threshold_find, visibility, visibility_scan)
from .constants import H, M_NEUTRON
from .kinematics import de_broglie_wavelength, mass_boundary, thermal_coherence_length
from .output import grid_columns, write_csv, write_manifest, write_pgm
from .parallel import resolve_threads
from .scenario import Scenario, ScenarioError, load_preset, load_scenario, position_spec
from .wavegroups import QuadratureConvergenceError, QuadratureSpec, evaluate_grid

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

PARTICLES = {"neutron": M_NEUTRON}

# Default (x1, x2) grids for the mirror presets; spacing resolves the half-wavelength fringes.
MIRROR_GRIDS = {
    "fig1a": ((-3.0, 3.0, 241), (-2.5, 2.5, 201)),
    "fig1b": ((-3.0, 3.0, 241), (-0.6, 0.6, 193)),
    "fig1c": ((-3.0, 3.0, 241), (-0.12, 0.12, 97)),
    "fig1d": ((-3.0, 3.0, 241), (-1.6, 1.6, 641)),
}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_VALIDATION, "usage", message)


def parse_range(text: str) -> np.ndarray:
    """``LO:HI:N`` inclusive linspace."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise CliError(EXIT_VALIDATION, "usage", f"bad range {text!r}; expected LO:HI:N") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise CliError(EXIT_VALIDATION, "validation", f"empty or non-finite range {text!r}")
    if n > 1 and hi <= lo:
        raise CliError(EXIT_VALIDATION, "validation", f"range {text!r} must increase")
    return np.linspace(lo, hi, n)


def _named(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise CliError(EXIT_VALIDATION, "usage", f"expected NAME=VALUE, got {text!r}")
    name, value = text.split("=", 1)
    return name.strip(), value.strip()


def _scenario(args) -> Scenario:
    if bool(args.preset) == bool(args.scenario):
        raise CliError(EXIT_VALIDATION, "usage", "give exactly one of --preset or --scenario")
    try:
        return load_preset(args.preset) if args.preset else load_scenario(args.scenario)
    except FileNotFoundError as exc:
        raise CliError(EXIT_IO, "io", str(exc)) from exc


def _quad(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(args.nodes, args.max_nodes, args.tol)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, "validation", str(exc)) from exc


def _manifest_path(args, out: Path) -> Path:
    return Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest.json")


def _finish(args, command: str, scenario: Scenario | None, outputs: list[Path], t0: float,
            extra: dict[str, Any]) -> dict[str, Any]:
    man = {
        "command": command,
        "argv": list(args._argv),
        "scenario_hash": scenario.digest() if scenario is not None else None,
        "quadrature": {"nodes_per_axis": args.nodes, "max_nodes": args.max_nodes, "tol": args.tol,
                       "method": getattr(args, "method", "analytic")},
        "threads": resolve_threads(args.threads),
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "wall_clock_s": time.perf_counter() - t0,
        **extra,
    }
    path = _manifest_path(args, Path(args.out))
    man["outputs"].append(str(path))
    write_manifest(path, man)
    return man


# -- subcommands ---------------------------------------------------------------

def cmd_pdf_grid(args) -> dict[str, Any]:
    t0 = time.perf_counter()
    scen = _scenario(args)
    if args.time is not None:
        scen = scen.with_time(args.time)
    axes: list[tuple[str, np.ndarray]] = []
    for spec in args.axis or []:
        name, rng = _named(spec)
        axes.append((name, parse_range(rng)))
    fixed = {}
    for spec in args.fix or []:
        name, val = _named(spec)
        fixed[name] = float(val)
    if not axes:
        axes = _default_axes(args.preset, scen)
        fixed = {**{"x1": 0.0}, **fixed} if "x1" not in dict(axes) else fixed
    known = set(scen.coordinates)
    for name in [n for n, _ in axes] + list(fixed):
        if name not in known:
            raise CliError(EXIT_VALIDATION, "validation",
                           f"unknown coordinate {name!r}; scenario has {sorted(known)}")
    missing = known - {n for n, _ in axes} - set(fixed)
    if missing:
        raise CliError(EXIT_VALIDATION, "validation",
                       f"coordinates {sorted(missing)} need --axis or --fix")
    field = evaluate_grid(scen, axes, fixed, method=args.method, quad=_quad(args),
                          threads=args.threads)
    out = Path(args.out)
    header, cols = grid_columns(field.axes, field.values)
    outputs = [write_csv(out, header, cols)]
    extra: dict[str, Any] = {"axes": {n: [float(a[0]), float(a[-1]), int(a.size)] for n, a in axes},
                             "fixed": fixed}
    if args.pgm:
        if len(axes) != 2:
            raise CliError(EXIT_VALIDATION, "validation", "--pgm needs exactly two grid axes")
        extra["pgm_scaling"] = write_pgm(args.pgm, field.values)
        outputs.append(Path(args.pgm))
    return _finish(args, "pdf-grid", scen, outputs, t0, extra)


def _default_axes(preset: str | None, scen: Scenario) -> list[tuple[str, np.ndarray]]:
    if preset in MIRROR_GRIDS:
        (a, b, n), (c, d, k) = MIRROR_GRIDS[preset]
        return [("x1", np.linspace(a, b, n)), ("x2", np.linspace(c, d, k))]
    movable = [(scen.coordinate(i), s) for i, s in enumerate(scen.scatterers) if not s.rigid]
    if preset and len(movable) == 1 and movable[0][1].dv > 0:
        name, s = movable[0]
        lc = position_spec(scen, s).lc
        return [(name, np.linspace(s.x0 - 2 * lc, s.x0 + 2 * lc, 801))]
    raise CliError(EXIT_VALIDATION, "usage", "no default grid for this scenario; use --axis")


def cmd_marginal(args) -> dict[str, Any]:
    t0 = time.perf_counter()
    scen = _scenario(args)
    lam = scen.wavelength
    scan = args.scan or ("x1" if scen.has_mirror else "x0")
    period = lam / 2.0
    if args.range:
        xs = parse_range(args.range)
    elif scan == "x1":
        xs = -lam + np.arange(4 * 64) * (period / 64)
    else:
        xs = scen.separation + np.arange(2 * 64) * (period / 64)
    if scan == "x1":
        vals = np.array([particle_marginal(scen, float(x)) for x in xs])
        env = np.array([particle_marginal(scen, float(x), pairs="diagonal") for x in xs])
    elif scan == "x0":
        if len(scen.scatterers) < 2:
            raise CliError(EXIT_VALIDATION, "validation", "separation scans need two scatterers")
        ss = [scen.with_separation(float(x)) for x in xs]
        vals = np.array([particle_marginal(s, args.x1) for s in ss])
        env = np.array([particle_marginal(s, args.x1, pairs="diagonal") for s in ss])
    else:
        raise CliError(EXIT_VALIDATION, "validation", f"unknown scan variable {scan!r}")
    header, cols = [scan, "marginal_pdf"], [xs, vals]
    extra: dict[str, Any] = {"scan": scan, "x1": args.x1}
    closed = _closed_form_column(scen, xs) if scan == "x0" else None
    if closed is not None:
        header.append("closed_form")
        cols.append(closed)
        dev = float(np.max(np.abs(vals - closed)) / np.max(np.abs(closed)))
        extra["closed_form"] = {"max_relative_deviation": dev, "agree": dev < 1e-6}
    try:
        extra["visibility"] = visibility(vals, env, x=xs, period=period)
    except ValueError as exc:
        extra["visibility"] = None
        extra["visibility_note"] = str(exc)
    out = Path(args.out)
    outputs = [write_csv(out, header, cols)]
    return _finish(args, "marginal", scen, outputs, t0, extra)


def _closed_form_column(scen: Scenario, xs) -> np.ndarray | None:
    """Printed heavy-limit marginal, scaled to the numerical mean, for beamsplitter scenarios."""
    sc = scen.scatterers
    if len(sc) != 2 or not sc[0].rigid or sc[1].rigid or sc[1].dv == 0:
        return None
    lc = position_spec(scen, sc[1]).lc
    closed = marginal_closed(np.asarray(xs) - sc[0].x0, lc, scen.wavelength)
    num = np.array([particle_marginal(scen.with_separation(float(x))) for x in xs])
    return closed * (num.mean() / closed.mean())


def cmd_visibility_scan(args) -> dict[str, Any]:
    t0 = time.perf_counter()
    scen = None
    params = Fig3Params()
    if args.preset or args.scenario:
        scen = _scenario(args)
        params = _params_from(scen)
    overrides = {k: v for k, v in (("mass_ratio", args.mass_ratio), ("x0", args.x0),
                                   ("particle_lc_over_x0", args.particle_lc_over_x0))
                 if v is not None}
    if overrides:
        params = Fig3Params(**{**params.__dict__, **overrides})
    if params.mass_ratio <= 0 or params.x0 <= 0 or params.particle_lc_over_x0 <= 0:
        raise CliError(EXIT_VALIDATION, "validation", "scan parameters must be positive")
    ratios = parse_range(args.fwhm_over_lambda)
    if np.any(ratios <= 0):
        raise CliError(EXIT_VALIDATION, "validation", "FWHM/lambda must be positive")
    trace = visibility_scan(args.model, ratios, params, args.threads)
    header, cols = ["fwhm_over_lambda", "lc_over_lambda", "visibility"], [
        ratios, ratios * LC_PER_FWHM, trace.visibility]
    extra: dict[str, Any] = {"model": args.model, "params": params.__dict__,
                             "monotone": trace.is_monotone()}
    try:
        extra["threshold_lc_over_lambda"] = threshold_find(trace, args.cut)
    except ValueError:
        extra["threshold_lc_over_lambda"] = None
    if args.check_sqrt2:
        other = "two-scatterer" if args.model == "one-scatterer" else "one-scatterer"
        other_trace = visibility_scan(other, ratios, params, args.threads)
        header.append(f"visibility_{other}")
        cols.append(other_trace.visibility)
        upper, lower = ((trace, other_trace) if args.model == "one-scatterer"
                        else (other_trace, trace))
        dev = sqrt2_mapping_check(upper, lower)
        extra["sqrt2_max_deviation"] = dev
        print(f"sqrt2 mapping max deviation: {dev:.6g}")
    out = Path(args.out)
    outputs = [write_csv(out, header, cols)]
    return _finish(args, "visibility-scan", scen, outputs, t0, extra)


def _params_from(scen: Scenario) -> Fig3Params:
    sc = scen.scatterers
    if len(sc) != 2 or sc[1].rigid:
        raise CliError(EXIT_VALIDATION, "validation",
                       "visibility scans need a [beamsplitter or scatterer, scatterer] scenario")
    p = scen.particle
    x0 = scen.separation
    plc = position_spec(scen, p).lc
    return Fig3Params(mass_ratio=p.mass / sc[1].mass, x0=x0,
                      particle_lc_over_x0=plc / x0, wavelength=scen.wavelength)


def cmd_thermal(args) -> dict[str, Any]:
    t0 = time.perf_counter()
    if args.T is None or args.T <= 0:
        raise CliError(EXIT_VALIDATION, "validation", "temperature --T must be positive")
    if args.particle and args.mass:
        raise CliError(EXIT_VALIDATION, "usage", "give --particle or --mass, not both")
    report: dict[str, Any] = {"T_K": args.T}
    lam = args.wavelength
    if lam is None and args.v is not None:
        mass = PARTICLES[args.particle] if args.particle else args.mass
        if mass is None or mass <= 0:
            raise CliError(EXIT_VALIDATION, "validation", "particle mass must be positive")
        lam = de_broglie_wavelength(mass, args.v)
        report["particle_mass_kg"] = mass
    if lam is not None:
        if lam <= 0:
            raise CliError(EXIT_VALIDATION, "validation", "wavelength must be positive")
        mb = mass_boundary(lam, args.T)
        report.update({"wavelength_m": lam, "wavelength_nm": lam * 1e9,
                       "mass_boundary_kg": mb, "mass_boundary_neutron_masses": mb / M_NEUTRON})
    if args.M is not None:
        if args.M <= 0:
            raise CliError(EXIT_VALIDATION, "validation", "--M must be positive")
        report["scatterer_mass_kg"] = args.M
        report["thermal_coherence_length_m"] = thermal_coherence_length(args.M, args.T)
    if len(report) == 1:
        raise CliError(EXIT_VALIDATION, "usage", "give --wavelength, --v, or --M")
    report["h"] = H
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _finish(args, "thermal", None, [Path(args.out)], t0, {})
    return report


# -- parser --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--preset", help="named preset (fig1a-d, fig2a, fig2b, fig3)")
    g.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--threads", type=int, help="worker threads (default: $QCI_SIM_THREADS or all cores)")
    p.add_argument("--nodes", type=int, default=64, help="initial Gauss-Hermite nodes per axis")
    p.add_argument("--max-nodes", type=int, default=512)
    p.add_argument("--tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qci-sim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pdf-grid", help="joint PDF on a grid")
    _common(p)
    p.add_argument("--axis", action="append", help="NAME=LO:HI:N swept coordinate (repeatable)")
    p.add_argument("--fix", action="append", help="NAME=VALUE fixed coordinate (repeatable)")
    p.add_argument("--time", type=float)
    p.add_argument("--method", choices=("analytic", "quadrature"), default="analytic")
    p.add_argument("--pgm", help="also write a P5 heatmap of a 2D grid")
    p.set_defaults(func=cmd_pdf_grid)

    p = sub.add_parser("marginal", help="particle marginal PDF versus separation or x1")
    _common(p)
    p.add_argument("--scan", choices=("x0", "x1"))
    p.add_argument("--range", help="LO:HI:N scan range (default: whole fringe periods)")
    p.add_argument("--x1", type=float, default=0.0, help="particle position for x0 scans")
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("visibility-scan", help="marginal visibility versus FWHM/lambda")
    _common(p)
    p.add_argument("--model", choices=("one-scatterer", "two-scatterer"), default="one-scatterer")
    p.add_argument("--fwhm-over-lambda", default="0.05:2.5:50", help="LO:HI:N")
    p.add_argument("--mass-ratio", type=float, help="m/M (default 1/1200)")
    p.add_argument("--x0", type=float, help="scatterer separation in wavelengths (default 5)")
    p.add_argument("--particle-lc-over-x0", type=float, help="default 30")
    p.add_argument("--cut", type=float, default=0.05, help="threshold visibility")
    p.add_argument("--check-sqrt2", action="store_true")
    p.set_defaults(func=cmd_visibility_scan)

    p = sub.add_parser("thermal", help="mass bound and thermal coherence length (SI)")
    p.add_argument("--particle", choices=sorted(PARTICLES))
    p.add_argument("--mass", type=float, help="particle mass in kg")
    p.add_argument("--v", type=float, help="particle speed in m/s")
    p.add_argument("--wavelength", type=float, help="particle wavelength in m")
    p.add_argument("--T", type=float, help="temperature in K")
    p.add_argument("--M", type=float, help="scatterer mass in kg")
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--manifest")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_thermal, nodes=None, max_nodes=None, tol=None)
    return ap


def _fail(exc: CliError) -> int:
    err = {"error": exc.kind, "message": str(exc), **exc.extra}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return exc.code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args._argv = argv
        if args.threads is not None and args.threads < 1:
            raise CliError(EXIT_VALIDATION, "validation", "--threads must be >= 1")
        args.func(args)
    except CliError as exc:
        return _fail(exc)
    except ScenarioError as exc:
        return _fail(CliError(EXIT_VALIDATION, "validation", "invalid scenario", errors=exc.errors))
    except QuadratureConvergenceError as exc:
        return _fail(CliError(EXIT_CONVERGENCE, "convergence", str(exc),
                              history=[list(h) for h in exc.history]))
    except OSError as exc:
        return _fail(CliError(EXIT_IO, "io", str(exc)))
    except (ValueError, KeyError) as exc:
        return _fail(CliError(EXIT_VALIDATION, "validation", str(exc)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
