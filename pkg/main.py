#!/usr/bin/env python3
"""
Optomechanical Squeezing Simulator
Command-line entry point for steady states, stability, variances, output light, trajectories and sweeps

Usage:
    python main.py steady
    python main.py variance --override beta=0.1 --sideband cooling
    python main.py fig1 --out fig1.csv
    python main.py sweep --observable var_x --axis detuning_ratio:0.5:1.5:201 --axis-values beta=0.1,0.39
    python main.py table1
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

import pandas as pd
from tabulate import tabulate

from benchmark import OptomechBenchmark
from errors import ConfigError, InstabilityError, OptomechError
from lindyn import drift_matrix, is_dynamically_stable
from log_setup import setup_logging
from mechvar import SpectrumMode, compare_with_quadrature, mean_energy, variances_closed_form
from optout import AlphaInConvention, output_field, output_variances
from params import PhysicalParams, load_params_file, parse_assignments
from steadystate import cubic_discriminant, select_operating_point, solve_cubic
from sweep import (FIGURE_SPECS, QUAD_OMEGA_FACTOR, Axis, AxisName, Method, Observable, Sideband,
                   Spacing, SweepSpec, figure_spec, resolve_operating_point, run_sweep,
                   solved_range, table1_ranges, write_csv)
from timedomain import TrajectoryState, fixed_point_state, integrate

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).resolve().parent / "configs" / "reference.json"
POINT_KEYS = frozenset({AxisName.DETUNING_RATIO.value, AxisName.BETA.value, AxisName.ETA.value})


class CliParser(argparse.ArgumentParser):
    """argparse that reports usage errors as ConfigError (exit code 1)"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}", field="argv")


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if hasattr(value, "value") and not isinstance(value, (int, float)):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _open_out(path: Optional[str]) -> Tuple[TextIO, bool]:
    if path is None:
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as e:
        raise ConfigError(f"Cannot write output file {path}: {e.strerror or e}", path=path) from e


def _emit_json(payload: Dict[str, Any], path: Optional[str]):
    stream, owned = _open_out(path)
    try:
        json.dump(_jsonable(payload), stream, indent=2)
        stream.write("\n")
    finally:
        if owned:
            stream.close()


def _load(args) -> Tuple[PhysicalParams, Dict[str, float]]:
    """Config with --override applied; operating-point keys are returned separately"""
    assignments = parse_assignments(args.override)
    point = {k: v for k, v in assignments.items() if k in POINT_KEYS}
    config = {k: v for k, v in assignments.items() if k not in POINT_KEYS}
    return load_params_file(args.config, config), point


def _mode(args) -> SpectrumMode:
    return SpectrumMode(args.mode)


def _sideband(args, default: Sideband = Sideband.PRINTED) -> Sideband:
    return Sideband(args.sideband) if args.sideband else default


def _alpha_in(args, default: AlphaInConvention = AlphaInConvention.ZERO) -> AlphaInConvention:
    return AlphaInConvention(args.alpha_in) if args.alpha_in else default


def _resolve(args):
    p, point = _load(args)
    return resolve_operating_point(p, point, args.self_consistent, _sideband(args),
                                   args.reference_detuning_ratio)


def cmd_steady(args) -> int:
    p, point = _load(args)
    ratio = point.get(AxisName.DETUNING_RATIO.value, p.detuning / p.omega_m)
    op = resolve_operating_point(p, {AxisName.DETUNING_RATIO.value: ratio}, self_consistent=True)
    op_detuning = op.field.detuning
    roots = solve_cubic(p, op.derived, op_detuning)
    chosen = select_operating_point(roots)
    _emit_json({
        "detuning": op_detuning,
        "discriminant": cubic_discriminant(p, op.derived, op_detuning),
        "derived": asdict(op.derived),
        "roots": [{
            "x_bar": r.x_bar,
            "x_bar_m": r.x_bar_m,
            "alpha_bar_sq": r.alpha_bar_sq,
            "classification": r.classification,
            "residual": r.residual,
        } for r in roots],
        "operating_point": {"x_bar": chosen.x_bar, "bistable": chosen.bistable},
        "effective": asdict(op.field),
    }, args.out)
    return 0


def cmd_stability(args) -> int:
    op = _resolve(args)
    m = drift_matrix(op.params, op.model)
    report = is_dynamically_stable(m)
    if report.stable != report.routh_hurwitz:
        logger.warning("Eigenvalue and Routh-Hurwitz verdicts disagree near the stability boundary")
    _emit_json({
        "stable": report.stable,
        "margin": report.margin,
        "routh_hurwitz": report.routh_hurwitz,
        "eigenvalues": [complex(z) for z in report.eigenvalues],
        "drift_matrix": m.entries,
        "effective": asdict(op.model),
    }, args.out)
    return 0


def cmd_variance(args) -> int:
    op = _resolve(args)
    if args.method == Method.QUADRATURE.value:
        omega_max = QUAD_OMEGA_FACTOR * max(op.params.omega_m, op.params.kappa)
        closed, integral, deviation = compare_with_quadrature(op.params, op.model, omega_max,
                                                              args.rel_tol, _mode(args))
        payload = {"closed_form": asdict(closed), "quadrature": asdict(integral),
                   "relative_deviation": deviation}
        mv = integral
    else:
        mv = variances_closed_form(op.params, op.model)
        payload = {"closed_form": asdict(mv)}
    payload["satisfies_uncertainty"] = mv.satisfies_uncertainty
    payload["mean_energy"] = mean_energy(op.params, mv)
    payload["effective"] = asdict(op.model)
    _emit_json(payload, args.out)
    return 0


def cmd_output(args) -> int:
    op = _resolve(args)
    mv = variances_closed_form(op.params, op.model)
    out = output_variances(op.params, op.model, mv)
    light = output_field(op.params, op.derived, op.field, op.field.detuning, _alpha_in(args))
    _emit_json({
        "variances": asdict(out),
        "intensity_squeezed": out.intensity_squeezed,
        "alpha_out": light.alpha_out,
        "alpha_out_abs": abs(light.alpha_out),
        "alpha_in": light.alpha_in,
        "effective": asdict(op.field),
    }, args.out)
    return 0


def cmd_evolve(args) -> int:
    p, point = _load(args)
    op = resolve_operating_point(p, {k: v for k, v in point.items()
                                     if k == AxisName.DETUNING_RATIO.value}, self_consistent=True)
    detuning = op.field.detuning
    if args.start == "fixed-point":
        initial = fixed_point_state(op.params, op.derived, detuning)
    else:
        initial = TrajectoryState(t=0.0, x_m=0.0, p_m=0.0, alpha=0j)
    trajectory = integrate(op.params, op.derived, detuning, initial, args.t_end,
                           args.rel_tol, args.samples)

    stream, owned = _open_out(args.out)
    try:
        trajectory.to_frame().to_csv(stream, index=False, float_format="%.17g", lineterminator="\n")
    finally:
        if owned:
            stream.close()
    if not trajectory.is_stable:
        raise InstabilityError(f"Trajectory {trajectory.status.value}: {trajectory.message}",
                               status=trajectory.status.value)
    return 0


def _parse_axis(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"Axis must look like name:min:max:count[:log], got {text!r}", field="axis")
    try:
        name = AxisName(parts[0])
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ConfigError(f"Malformed axis {text!r}", field="axis") from None
    spacing = Spacing.LINEAR
    if len(parts) == 5:
        if parts[4] not in (Spacing.LINEAR.value, Spacing.LOG.value):
            raise ConfigError(f"Axis spacing must be linear or log, got {parts[4]!r}", field="axis")
        spacing = Spacing(parts[4])
    return Axis(name, lo, hi, count, spacing)


def _parse_axis_values(text: str) -> Axis:
    name, sep, raw = text.partition("=")
    try:
        return Axis.from_values(AxisName(name.strip()), [float(v) for v in raw.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"Axis values must look like name=v1,v2,..., got {text!r}", field="axis") from None


def _write_sweep(p: PhysicalParams, spec: SweepSpec, out: Optional[str]) -> int:
    result = run_sweep(p, spec, progress=out is not None)
    stream, owned = _open_out(out)
    try:
        write_csv(result, stream)
    finally:
        if owned:
            stream.close()
    return 0


def cmd_sweep(args) -> int:
    p, point = _load(args)
    axes: List[Axis] = [_parse_axis(a) for a in args.axis]
    axes += [_parse_axis_values(a) for a in args.axis_values]
    spec = SweepSpec(
        observable=Observable(args.observable),
        axes=tuple(axes),
        fixed=point,
        mode=_mode(args),
        self_consistent=args.self_consistent,
        sideband=_sideband(args),
        alpha_in=_alpha_in(args),
        method=Method(args.method),
        reference_detuning_ratio=args.reference_detuning_ratio,
        workers=args.workers,
        max_points=args.max_points,
    )
    return _write_sweep(p, spec, args.out)


def cmd_figure(args) -> int:
    p, point = _load(args)
    preset = FIGURE_SPECS[args.command]
    changes: Dict[str, Any] = {"workers": args.workers, "mode": _mode(args)}
    if args.sideband:
        changes["sideband"] = Sideband(args.sideband)
    if args.alpha_in:
        changes["alpha_in"] = AlphaInConvention(args.alpha_in)
    if point:
        fixed = dict(preset.fixed)
        fixed.update(point)
        changes["fixed"] = fixed
    return _write_sweep(p, figure_spec(args.command, **changes), args.out)


def cmd_table1(args) -> int:
    p, _ = _load(args)
    ranges = table1_ranges(p) + [solved_range(p, ratio) for ratio in (0.0, 1.0)]
    sources = ["listed"] * (len(ranges) - 2) + ["solved"] * 2
    rows = [dict(source=source, **asdict(r)) for source, r in zip(sources, ranges)]
    print(tabulate(rows, headers="keys", floatfmt=".3e", tablefmt="github"))
    if args.out:
        stream, _ = _open_out(args.out)
        with stream:
            pd.DataFrame(rows).to_csv(stream, index=False, float_format="%.17g", lineterminator="\n")
    return 0


def cmd_bench(args) -> int:
    p, _ = _load(args)
    suite = OptomechBenchmark(p, iterations=args.iterations)
    suite.run_all()
    try:
        suite.generate_performance_report(args.out_dir)
    except OSError as e:
        raise ConfigError(f"Cannot write benchmark report to {args.out_dir}: {e.strerror or e}",
                          path=args.out_dir) from e
    print(suite.summary_table())
    return 0


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", default=str(DEFAULT_CONFIG), help="JSON parameter file")
    common.add_argument("--out", help="Output file (default: stdout)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key, or set detuning_ratio, beta or eta")
    common.add_argument("--mode", choices=[m.value for m in SpectrumMode], default=SpectrumMode.EXACT.value)
    common.add_argument("--self-consistent", action="store_true",
                        help="Re-solve the steady state at every point instead of overriding beta/eta")
    common.add_argument("--sideband", choices=[s.value for s in Sideband])
    common.add_argument("--alpha-in", choices=[a.value for a in AlphaInConvention])
    common.add_argument("--reference-detuning-ratio", type=float,
                        help="Detuning ratio at which the coupling G is solved in override mode")
    common.add_argument("--verbose", action="store_true", help="INFO logging")
    common.add_argument("--debug", action="store_true", help="DEBUG logging")

    parser = CliParser(
        description="Optomechanical squeezing simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Figure presets (all evaluate the cooling sideband):
  fig1   var_p vs detuning ratio 0.1..2.0, eta = 0
  fig2   var_x vs detuning ratio 0.5..1.5 for beta in {0.1, 0.39, 0.88}
  fig3   var_x vs detuning ratio 0.8..1.2 for eta in {0, 0.02, 0.04, 0.06, 0.08}, beta = 0.1
  fig4   output intensity noise vs eta in [-2e-4, 2e-4] at zero detuning, P_in = 30 uW
  fig5   |alpha_out| vs detuning ratio 0..2 for eta in {0, 0.25, 0.5, 0.75, 1}

Exit codes: 0 success, 1 invalid input, 2 physics-domain error.
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("steady", parents=[common], help="Roots of the steady-state cubic").set_defaults(
        handler=cmd_steady)
    sub.add_parser("stability", parents=[common], help="Drift matrix and stability verdict").set_defaults(
        handler=cmd_stability)

    variance = sub.add_parser("variance", parents=[common], help="Mechanical quadrature variances")
    variance.add_argument("--method", choices=[m.value for m in Method], default=Method.CLOSED_FORM.value)
    variance.add_argument("--rel-tol", type=float, default=1e-8)
    variance.set_defaults(handler=cmd_variance)

    sub.add_parser("output", parents=[common], help="Output variances and output field").set_defaults(
        handler=cmd_output)

    evolve = sub.add_parser("evolve", parents=[common], help="Mean-field time evolution as CSV")
    evolve.add_argument("--t-end", type=float, default=2e-8, help="Duration in seconds")
    evolve.add_argument("--rel-tol", type=float, default=1e-8)
    evolve.add_argument("--samples", type=int, default=2001)
    evolve.add_argument("--start", choices=["rest", "fixed-point"], default="fixed-point")
    evolve.set_defaults(handler=cmd_evolve)

    sweep = sub.add_parser("sweep", parents=[common], help="Grid of one observable as CSV")
    sweep.add_argument("--observable", choices=[o.value for o in Observable], required=True)
    sweep.add_argument("--axis", action="append", default=[], metavar="NAME:MIN:MAX:COUNT[:log]")
    sweep.add_argument("--axis-values", action="append", default=[], metavar="NAME=V1,V2,...")
    sweep.add_argument("--method", choices=[m.value for m in Method], default=Method.CLOSED_FORM.value)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--max-points", type=int, default=250_000)
    sweep.set_defaults(handler=cmd_sweep)

    for name in sorted(FIGURE_SPECS):
        figure = sub.add_parser(name, parents=[common], help=f"Dataset of {name}")
        figure.add_argument("--workers", type=int, default=1)
        figure.set_defaults(handler=cmd_figure)

    sub.add_parser("table1", parents=[common], help="Nonlinearity ranges").set_defaults(handler=cmd_table1)

    bench = sub.add_parser("bench", parents=[common], help="Runtime benchmarks")
    bench.add_argument("--iterations", type=int, default=20)
    bench.add_argument("--out-dir", default="benchmark_results")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        setup_logging(logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING)
        if args.command in FIGURE_SPECS and args.self_consistent:
            raise ConfigError("Figure presets fix beta or eta; --self-consistent applies to sweep",
                              field="self_consistent")
        return args.handler(args)
    except OptomechError as e:
        sys.stderr.write(json.dumps(_jsonable(e.to_dict())) + "\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
