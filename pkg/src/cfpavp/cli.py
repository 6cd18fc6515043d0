"""Command-line front end: analyze, simulate, optimize and sweep.

Every run writes ``<command>.csv`` and a ``<command>.json`` sidecar holding the
normalized parameters, seed and tolerances needed to repeat it exactly.
Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 infeasible.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .comm import comm_coverage
from .errors import BoundUndefinedError, CfpavpError, ConfigError, InfeasibleError, UnstableServiceError
from .numerics import DEFAULT_QUAD, QuadratureSpec
from .optimizer import solve_partition
from .params import _SI_UNIT, FIELD_DIMENSIONS, SystemParameters, from_config, load_config, default_config, to_config
from .sensing import sensing_coverage
from .snc import best_theta, pavp_networkwide

COMMANDS = ("analyze", "simulate", "optimize", "sweep")

# short axis names and the unit their values are read in
AXES = {
    "delta": ("detect_threshold", "db"),
    "sigma": ("rcs_mean", "dbsm"),
    "zeta": ("paoi_threshold", "ms"),
    "gamma_th": ("sinr_threshold", "db"),
    "beta": ("beta", "linear"),
    "lambda": ("lambda_total", "per_km2"),
    "lambda_u": ("lambda_u", "per_km2"),
    "n": ("n_antennas", "count"),
    "tau_tr": ("pilot_symbols", "count"),
    "theta_bw": ("beam_halfwidth", "pi_rad"),
    "range": ("max_range", "m"),
}

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INFEASIBLE = 2, 3, 4


@dataclass
class ExperimentSpec:
    command: str
    params: SystemParameters
    axis: str | None = None
    axis_field: str | None = None
    axis_unit: str | None = None
    values: list = field(default_factory=list)
    out: Path = Path(".")
    seed: int = 0
    realizations: int | None = None
    packets: int | None = None
    theta: float | None = None
    quad: QuadratureSpec = DEFAULT_QUAD
    workers: int = 1
    grid_points: int = 33
    sinr_source: str = "de"
    arrival_mode: str = "analytic"
    trace: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _default_unit(name: str) -> str:
    dims = FIELD_DIMENSIONS.get(name)
    if dims is None:
        raise ConfigError(f"unknown parameter {name!r}")
    return _SI_UNIT[dims[0]]


def _resolve_axis(name: str) -> tuple[str, str]:
    if name in AXES:
        return AXES[name]
    return name, _default_unit(name)


def _parse_set(item: str):
    if "=" not in item:
        raise ConfigError(f"--set expects key=value[:unit], got {item!r}")
    key, val = item.split("=", 1)
    key = key.strip()
    unit = None
    if ":" in val:
        val, unit = val.rsplit(":", 1)
    if key in AXES:
        key, default = AXES[key]
    else:
        default = _default_unit(key)
    return key, {"value": float(val) if _is_number(val) else val, "unit": unit or default}


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cfpavp", description="Peak-AoI violation bounds and simulation for S&C partitioned CF-mMIMO.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--params", help="JSON parameter file (defaults table when omitted)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE[:UNIT]")
        sp.add_argument("--axis", help="parameter to vary; short names: " + ", ".join(AXES))
        sp.add_argument("--values", help="comma-separated axis values")
        sp.add_argument("--unit", help="unit of --values (default depends on the axis)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--theta", type=float, help="fix the Chernoff parameter instead of optimizing it")
        sp.add_argument("--quad-tol", type=float, help="relative quadrature tolerance")
        sp.add_argument("--workers", type=int, default=1)
        if name == "simulate":
            sp.add_argument("--realizations", type=int, required=True)
            sp.add_argument("--packets", type=int, required=True)
            sp.add_argument("--sinr-source", choices=("de", "bound"), default="de")
            sp.add_argument("--arrivals", choices=("analytic", "physical", "physical-frozen"), default="analytic")
            sp.add_argument("--trace", action="store_true", help="also export the first in-coverage trace")
        if name in ("optimize", "sweep"):
            sp.add_argument("--grid-points", type=int, default=33)
    return ap


def spec_from_args(args) -> ExperimentSpec:
    raw = load_config(args.params) if args.params else default_config()
    raw = dict(raw)
    for item in args.set:
        k, v = _parse_set(item)
        raw[k] = v
    p = from_config(raw)
    spec = ExperimentSpec(args.command, p, out=Path(args.out), seed=args.seed, theta=args.theta,
                          workers=max(1, args.workers))
    if args.seed < 0 or args.seed >= 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer", field="seed")
    if args.theta is not None and not args.theta > 0:
        raise ConfigError("theta must be positive", field="theta")
    if args.quad_tol is not None:
        if not 0 < args.quad_tol < 1:
            raise ConfigError("must be in (0, 1)", field="quad-tol")
        spec.quad = QuadratureSpec(rel_tol=args.quad_tol, abs_tol=DEFAULT_QUAD.abs_tol * args.quad_tol / DEFAULT_QUAD.rel_tol)
    if (args.axis is None) != (args.values is None):
        raise ConfigError("--axis and --values go together")
    if args.command == "sweep" and args.axis is None:
        raise ConfigError("sweep requires --axis and --values")
    if args.axis is not None:
        spec.axis = args.axis
        spec.axis_field, spec.axis_unit = _resolve_axis(args.axis)
        if args.unit:
            spec.axis_unit = args.unit
        try:
            spec.values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--values must be numbers, got {args.values!r}") from None
        if not spec.values:
            raise ConfigError("--values is empty")
        for v in spec.values:
            _with_axis(spec, v)  # validate every point before any work
    if args.command == "simulate":
        if args.realizations < 1 or args.packets < 1:
            raise ConfigError("--realizations and --packets must be >= 1")
        spec.realizations, spec.packets = args.realizations, args.packets
        spec.sinr_source, spec.arrival_mode, spec.trace = args.sinr_source, args.arrivals, args.trace
    if args.command in ("optimize", "sweep"):
        spec.grid_points = args.grid_points
    return spec


def _with_axis(spec: ExperimentSpec, value: float) -> SystemParameters:
    raw = to_config(spec.params)
    raw[spec.axis_field] = {"value": value, "unit": spec.axis_unit}
    return from_config(raw)


def _points(spec: ExperimentSpec):
    if spec.axis is None:
        return [(None, spec.params)]
    return [(v, _with_axis(spec, v)) for v in spec.values]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return str(x)


def _write(spec: ExperimentSpec, header, rows, extra=None) -> Path:
    spec.out.mkdir(parents=True, exist_ok=True)
    path = spec.out / f"{spec.command}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    meta = {
        "command": spec.command,
        "version": __version__,
        "seed": spec.seed,
        "params": to_config(spec.params),
        "axis": None if spec.axis is None else {"name": spec.axis, "field": spec.axis_field,
                                                 "unit": spec.axis_unit, "values": spec.values},
        "quadrature": {"abs_tol": spec.quad.abs_tol, "rel_tol": spec.quad.rel_tol, "max_subdivisions": spec.quad.max_subdivisions},
        "theta": spec.theta,
        "zeta_s": spec.params.paoi_threshold,
        "gamma_th": spec.params.sinr_threshold,
        "csv": path.name,
    }
    if spec.command == "simulate":
        meta.update(realizations=spec.realizations, packets=spec.packets, sinr_source=spec.sinr_source,
                    arrival_mode=spec.arrival_mode)
    if spec.command in ("optimize", "sweep"):
        meta["grid_points"] = spec.grid_points
    if extra:
        meta.update(extra)
    with open(spec.out / f"{spec.command}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _axis_cols(spec):
    return [spec.axis or "point"]


def run_analyze(spec: ExperimentSpec) -> Path:
    rows = []
    for v, p in _points(spec):
        zeta, g = p.paoi_threshold, p.sinr_threshold
        ps = sensing_coverage(p, spec.quad).p_cov_s if p.lambda_s > 0 else 0.0
        pc = comm_coverage(g, p).p_cov_c if p.lambda_c > 0 else 0.0
        if spec.theta is not None:
            res = pavp_networkwide(spec.theta, zeta, p, g, spec.quad, cov_s=ps)
        else:
            res = best_theta(zeta, p, g, spec.quad, cov_s=ps)[1]
        rows.append([0 if v is None else v, ps, pc, res.upsilon_nw, res.upsilon, res.theta_star, res.stable])
    header = _axis_cols(spec) + ["p_cov_s", "p_cov_c", "upsilon_nw", "upsilon", "theta_star", "stable"]
    return _write(spec, header, rows)


def run_simulate(spec: ExperimentSpec) -> Path:
    from .montecarlo import simulate_pavp

    rows = []
    for i, (v, p) in enumerate(_points(spec)):
        trace = spec.out / "trace.csv" if spec.trace and i == 0 else None
        if trace is not None:
            spec.out.mkdir(parents=True, exist_ok=True)
        est = simulate_pavp(p, p.paoi_threshold, p.sinr_threshold, spec.realizations, spec.packets,
                            seed=spec.seed, arrival_mode=spec.arrival_mode, sinr_source=spec.sinr_source,
                            workers=spec.workers, trace_path=trace)
        rows.append([0 if v is None else v, est.mean, est.stderr, est.in_coverage, est.n_realizations,
                     est.packets_simulated, est.p_cov_s])
    header = _axis_cols(spec) + ["pavp", "stderr", "in_coverage", "realizations", "packets", "p_cov_s"]
    return _write(spec, header, rows)


def run_optimize(spec: ExperimentSpec) -> Path:
    p = spec.params
    sol = solve_partition(p, p.paoi_threshold, p.sinr_threshold, spec.grid_points, spec.quad,
                          theta=spec.theta, workers=spec.workers)
    if sol.beta_star is None:
        raise InfeasibleError(sol.error or "no stable theta at any beta")
    pts = list(zip(sol.curve_beta.tolist(), sol.curve_upsilon.tolist(), [0] * sol.curve_beta.size))
    if not any(b == sol.beta_star for b, _, _ in pts):
        pts.append((sol.beta_star, sol.upsilon_nw_star, 0))
    pts.sort(key=lambda t: t[0])
    rows = [[b, u, int(b == sol.beta_star)] for b, u, _ in pts]
    extra = {"beta_star": sol.beta_star, "upsilon_nw_star": sol.upsilon_nw_star, "theta_star": sol.theta_star,
             "feasible_interval": list(sol.feasible_interval) if sol.feasible_interval else None}
    return _write(spec, ["beta", "upsilon_nw", "is_optimum"], rows, extra)


def run_sweep(spec: ExperimentSpec) -> Path:
    rows = []
    for v, p in _points(spec):
        try:
            sol = solve_partition(p, p.paoi_threshold, p.sinr_threshold, spec.grid_points, spec.quad,
                                  theta=spec.theta, workers=spec.workers)
            err = sol.error
        except (CfpavpError, ArithmeticError) as exc:
            sol, err = None, f"{getattr(exc, 'code', type(exc).__name__)}: {exc}"
        fi = sol.feasible_interval if sol is not None and sol.feasible_interval else (None, None)
        rows.append([v, None if sol is None else sol.beta_star, 1.0 if sol is None else sol.upsilon_nw_star,
                     None if sol is None else sol.theta_star, fi[0], fi[1], err or ""])
    header = [spec.axis, "beta_star", "upsilon_nw_star", "theta_star", "feasible_lo", "feasible_hi", "error"]
    return _write(spec, header, rows)


RUNNERS = {"analyze": run_analyze, "simulate": run_simulate, "optimize": run_optimize, "sweep": run_sweep}


def run(spec: ExperimentSpec) -> Path:
    return RUNNERS[spec.command](spec)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, ValueError, TypeError)):
        return EXIT_CONFIG
    if isinstance(exc, (InfeasibleError, BoundUndefinedError, UnstableServiceError)):
        return EXIT_INFEASIBLE
    return EXIT_NUMERICAL


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        run(spec_from_args(args))
    except (CfpavpError, ValueError, TypeError, ArithmeticError, OSError) as exc:
        code = getattr(exc, "code", None)
        if code is None or isinstance(exc, OSError):
            code = "CONFIG_ERROR" if isinstance(exc, OSError) or _exit_code(exc) == EXIT_CONFIG else "NUMERICAL_FAILURE"
        msg = " ".join(str(exc).split())
        print(f"error={code} {msg}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, OSError) else _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
