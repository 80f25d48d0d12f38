"""Command-line front end.

stdout carries data (CSV or JSON), stderr carries diagnostics.  Usage
errors exit with status 2, numerical contract violations with status 1.
If ``--output`` is omitted and ``SPINTERF_OUTPUT_DIR`` is set, data is
written to ``$SPINTERF_OUTPUT_DIR/<command>.<format>``; relative ``--output``
paths are resolved against that directory too.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, selftest
from .channel import reduced_propagator_conserving, reduced_propagator_numeric
from .dynamics import decompose
from .errors import NumericalContractError
from .experiments import run_delta_sweep, run_pairwise_fidelities, run_time_series
from .hamiltonians import ChainSpec, Model, build_full_space, build_single_excitation

OUTPUT_DIR_ENV = "SPINTERF_OUTPUT_DIR"
TIMESERIES_COLUMNS = ["t", "F", "I_r", "I_full", "p11", "p1N"]
SWEEP_COLUMNS = ["delta", "t_star", "max_f1N", "I_r"]


class UsageError(Exception):
    pass


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` (stop kept when within half a step) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"range needs step > 0 and stop >= start, got {text!r}")
        n = math.floor((stop - start) / step + 0.5)
        return start + step * np.arange(n + 1)
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r} as a list of numbers") from exc


def parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"window must be start:stop, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not hi > lo:
        raise UsageError(f"window must have positive length, got {text!r}")
    return lo, hi


def parse_fields(text: str):
    values = [float(v) for v in text.split(",")]
    return values[0] if len(values) == 1 else tuple(values)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _add_spec_args(p: argparse.ArgumentParser, default_model: str = "heisenberg",
                   default_n: int | None = None, delta_grid: bool = False):
    p.add_argument("--model", choices=[m.value for m in Model], default=default_model)
    p.add_argument("--n", type=int, required=default_n is None, default=default_n,
                   help="number of sites N")
    p.add_argument("--j", type=float, default=1.0, help="coupling J (heisenberg, xy-weak-ends)")
    p.add_argument("--a", type=float, default=0.02, help="end-coupling ratio (xy-weak-ends)")
    p.add_argument("--jxy", type=float, default=None, help="XY coupling (flux-qubit, xy-ising)")
    p.add_argument("--jz", type=float, default=None, help="ZZ coupling (flux-qubit, xy-ising)")
    if delta_grid:
        p.add_argument("--delta", dest="delta_grid", type=str, required=True,
                       help="Delta grid: start:stop:step or a comma list")
        p.set_defaults(delta=0.0)
    else:
        p.add_argument("--delta", type=float, default=0.0, help="tunnelling amplitude (flux-qubit)")
    p.add_argument("--b", type=parse_fields, default=0.0,
                   help="field B: one value or a comma list of N values")


def _add_output_args(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")


def _spec_from_args(args) -> ChainSpec:
    model = Model(args.model)
    if model is Model.FLUX_QUBIT:
        jz = 1.0 if args.jz is None else args.jz
        jxy = 0.08 * jz if args.jxy is None else args.jxy
    else:
        jxy = 1.0 if args.jxy is None else args.jxy
        jz = 0.05 * jxy if args.jz is None else args.jz
    if model is not Model.FLUX_QUBIT and args.delta:
        raise UsageError("--delta only applies to --model flux-qubit")
    return ChainSpec(model, args.n, j=args.j, a=args.a, j_xy=jxy, j_z=jz, delta=args.delta,
                     b_fields=args.b)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinterf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ts = sub.add_parser("timeseries", help="F, I_r, I_full and end populations versus time")
    _add_spec_args(ts)
    ts.add_argument("--t-max", type=float, required=True)
    ts.add_argument("--steps", type=int, default=None, help="grid points (default: from spectrum)")
    ts.add_argument("--no-align", action="store_true", help="keep the computed transfer phase in F")
    _add_output_args(ts)

    pw = sub.add_parser("pairwise", help="fidelities F_1j for every site j plus I_full")
    _add_spec_args(pw)
    pw.add_argument("--t-max", type=float, required=True)
    pw.add_argument("--steps", type=int, default=None)
    _add_output_args(pw)

    ds = sub.add_parser("delta-sweep", help="max |f_1N| and I_r at the maximum versus Delta")
    _add_spec_args(ds, default_model="flux-qubit", default_n=3, delta_grid=True)
    ds.add_argument("--window", type=str, default=None, help="time window start:stop "
                    "(default 0:1/J_xy)")
    ds.add_argument("--grid-points", type=int, default=2000)
    _add_output_args(ds)

    cd = sub.add_parser("channel-dump", help="reduced propagator tensor at one time, as JSON")
    _add_spec_args(cd)
    cd.add_argument("--t", type=float, required=True)
    cd.add_argument("--two-spin", action="store_true",
                    help="extract the d = 4 tensor from the full space even for conserving chains")
    cd.add_argument("--output", default=None)

    sub.add_parser("selftest", help="run the invariant checks")
    return parser


def _resolve_output(args) -> Path | None:
    env = os.environ.get(OUTPUT_DIR_ENV)
    ext = "json" if getattr(args, "format", "json") == "json" else "csv"
    if args.output is None:
        return Path(env) / f"{args.command}.{ext}" if env else None
    path = Path(args.output)
    if env and not path.is_absolute():
        path = Path(env) / path
    return path


def _emit(text: str, path: Path | None):
    if path is None:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # downstream reader closed early (e.g. `| head`)
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def render(columns: list[str], rows: list[list[float]], fmt_name: str, meta: dict) -> str:
    if fmt_name == "json":
        return json.dumps({**meta, "columns": columns, "rows": rows}) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _timeseries_table(records, pairwise: bool):
    columns = list(TIMESERIES_COLUMNS)
    if pairwise:
        columns += [f"F_1{j}" for j in range(1, len(records[0].pairwise) + 1)]
    rows = []
    for r in records:
        row = [r.t, r.fidelity, r.i_reduced, r.i_full, r.p11, r.p1N]
        if pairwise:
            row += list(r.pairwise)
        rows.append(row)
    return columns, rows


def _check_finite(rows):
    if not np.all(np.isfinite(np.asarray(rows, dtype=float))):
        raise NumericalContractError("non-finite value in output")


def dispatch(args) -> int:
    if args.command == "selftest":
        return 0 if selftest.run(sys.stdout) else 1

    spec = _spec_from_args(args)
    meta = {"command": args.command, "spec": _spec_meta(spec)}

    if args.command == "channel-dump":
        if spec.conserves_excitations and not args.two_spin:
            sp = decompose(build_single_excitation(spec))
            p = reduced_propagator_conserving(sp, spec.n_sites, args.t)
        else:
            sp = decompose(build_full_space(spec))
            p = reduced_propagator_numeric(sp, spec.n_sites, args.t)
        if max(p.trace_residual(), p.hermiticity_residual()) > 1e-9:
            raise NumericalContractError("extracted channel violates trace/Hermiticity preservation")
        data = json.loads(p.to_json())
        _emit(json.dumps({**meta, "t": args.t, **data}) + "\n",
              _resolve_output(args))
        return 0

    if args.command in ("timeseries", "pairwise"):
        if args.steps is not None and args.steps < 2:
            raise UsageError("--steps must be >= 2")
        if args.command == "timeseries":
            records = run_time_series(spec, args.t_max, args.steps,
                                      align_phase=not args.no_align, jobs=args.jobs)
        else:
            records = run_pairwise_fidelities(spec, args.t_max, args.steps, jobs=args.jobs)
        columns, rows = _timeseries_table(records, args.command == "pairwise")
    else:
        window = parse_window(args.window) if args.window else None
        result = run_delta_sweep(spec, parse_range(args.delta_grid), window, n_grid=args.grid_points,
                                 jobs=args.jobs)
        meta["window"] = list(result.window)
        columns = SWEEP_COLUMNS
        rows = [[p.param, p.t_star, p.max_f1N, p.i_r_at_max] for p in result.points]

    _check_finite(rows)
    _emit(render(columns, rows, args.format, meta), _resolve_output(args))
    return 0


def _spec_meta(spec: ChainSpec) -> dict:
    b = spec.b_fields
    return {
        "model": spec.model.value, "n_sites": spec.n_sites, "j": spec.j, "a": spec.a,
        "j_xy": spec.j_xy, "j_z": spec.j_z, "delta": spec.delta,
        "b_fields": list(b) if isinstance(b, tuple) else b,
    }


def _error(kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return dispatch(args)
    except NumericalContractError as exc:
        _error("numerical", str(exc))
        return 1
    except (UsageError, ValueError) as exc:
        _error("usage", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
