"""Command-line front door: ``hermrank {expand,rank,scan,fgn,regime,report}``.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 I/O error.
Every output carries the package version and the fully resolved configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import DEFAULTS
from .errors import InputError, NumericalError
from .gaussian_sim import FgnModel, sample_fgn
from .hermite_core import (
    FunctionSpec,
    expand,
    gauss_hermite_rule,
    hermite_rank,
    rank_report,
)
from .instability_scan import Axis, ScanGrid, scan_affine, scan_scale, scan_shift
from .regime_lab import RegimeExperiment, run_experiment

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class ReportError(Exception):
    """A result file could not be read or lacks required fields."""


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_header(config: dict) -> str:
    return f"# version={__version__}\n# config={json.dumps(config, sort_keys=True, default=_json_default)}\n"


def _load_json_arg(arg: str) -> str:
    """Inline JSON, or a path to a JSON file."""
    if arg.lstrip().startswith("{"):
        return arg
    return Path(arg).read_text()


def _spec(arg: str) -> FunctionSpec:
    return FunctionSpec.from_json(_load_json_arg(arg))


def _rule_for(spec: FunctionSpec, nodes: int | None):
    if nodes is None:
        nodes = DEFAULTS.indicator_nodes if spec.kind == "indicator" else DEFAULTS.nodes
    return gauss_hermite_rule(nodes), nodes


def _fmt_rank(r):
    return r if isinstance(r, str) else int(r)


# subcommands ------------------------------------------------------------------


def cmd_expand(args) -> int:
    spec = _spec(args.spec)
    rule, nodes = _rule_for(spec, args.nodes)
    exp = expand(spec, args.order, rule)
    rank = hermite_rank(exp, args.tol)
    config = {"command": "expand", "spec": spec.to_dict(), "order": args.order, "nodes": nodes, "tol": args.tol}
    if args.format == "csv":
        lines = [_csv_header(config), f"# rank={rank.hermite_rank}\n", "m,c_m\n"]
        lines += [f"{m},{c!r}\n" for m, c in enumerate(exp.coefficients.tolist())]
        _emit("".join(lines), args.output)
    else:
        out = {"version": __version__, "config": config, **exp.to_dict(), "rank": _fmt_rank(rank.hermite_rank)}
        _emit(_dump(out), args.output)
    return EXIT_OK


def cmd_rank(args) -> int:
    spec = _spec(args.spec)
    rule, nodes = _rule_for(spec, args.nodes)
    report = rank_report(spec, args.tol, rule, args.order)
    agree = report.hermite_rank == report.power_rank
    config = {"command": "rank", "spec": spec.to_dict(), "order": args.order, "nodes": nodes, "tol": args.tol}
    out = {"version": __version__, "config": config, **report.to_dict(), "ranks_agree": agree}
    _emit(_dump(out), args.output)
    if not agree:
        print(f"hermite rank {report.hermite_rank} != power rank {report.power_rank}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_scan(args) -> int:
    spec = _spec(args.spec)
    rule, nodes = _rule_for(spec, args.nodes)
    x_axis = Axis(*args.x) if args.x else None
    y_axis = Axis(*args.y) if args.y else None
    if args.mode == "shift":
        report = scan_shift(spec, ScanGrid(x_axis or Axis(-1.0, 1.0, 201)), args.tol, rule, args.order)
    elif args.mode == "scale":
        axis = y_axis or x_axis or Axis(0.01, 2.0, 200)
        report = scan_scale(spec, ScanGrid(axis), args.tol, rule, args.order)
    else:
        grid = ScanGrid(x_axis or Axis(-1.0, 1.0, 101), y_axis or Axis(0.02, 2.0, 100))
        report = scan_affine(spec, grid, args.tol, rule, args.order)
    config = {"command": "scan", "mode": args.mode, "spec": spec.to_dict(), "x": args.x, "y": args.y,
              "tol": args.tol, "order": args.order, "nodes": nodes}
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or f"scan_{args.mode}"
    report.write_csv(out / f"{stem}.csv", [f"version={__version__}", f"config={json.dumps(config, sort_keys=True)}"])
    report.write_json(out / f"{stem}.json", {"version": __version__, "config": config})
    sys.stdout.write(_dump(report.summary()))
    return EXIT_OK


def cmd_fgn(args) -> int:
    model = FgnModel(args.hurst, args.length)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in range(args.replicates):
        path = sample_fgn(model, args.seed + r)
        if args.format == "bin":
            target = out / f"fgn_H{args.hurst}_N{args.length}_seed{path.seed}.bin"
            path.write_binary(target)
        else:
            target = out / f"fgn_H{args.hurst}_N{args.length}_seed{path.seed}.csv"
            path.write_csv(target)
        written.append(str(target))
    config = {"command": "fgn", "hurst": args.hurst, "length": args.length, "seed": args.seed,
              "replicates": args.replicates, "format": args.format}
    sys.stdout.write(_dump({"version": __version__, "config": config, "files": written}))
    return EXIT_OK


def write_regime_outputs(result: RegimeExperiment, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    stem = result.name or "regime"
    config = {"command": "regime", **result.config_dict(), "defaults": DEFAULTS.to_dict()}
    rows = ["N,sd,stderr,skewness,mean,rms\n"]
    for row in result.table:
        rows.append(f"{row['N']},{row['sd']!r},{row['stderr']!r},{row['skewness']!r},{row['mean']!r},{row['rms']!r}\n")
    (out / f"{stem}.results.csv").write_text(_csv_header(config) + "".join(rows))
    plot = [f"{math.log2(row['N'])!r} {math.log2(row['stat'])!r}\n" for row in result.table]
    (out / f"{stem}.plot.dat").write_text(f"# version={__version__}\n# log2N log2{result.statistic}\n" + "".join(plot))
    payload = {"version": __version__, "config": config, **result.to_dict()}
    (out / f"{stem}.regime.json").write_text(_dump(payload))
    return payload


def cmd_regime(args) -> int:
    exp = RegimeExperiment.from_json(_load_json_arg(args.experiment))
    result = run_experiment(exp, threads=args.threads)
    payload = write_regime_outputs(result, Path(args.output_dir))
    summary = {k: payload[k] for k in ("name", "estimated_exponent", "stderr", "prediction", "complete")}
    sys.stdout.write(_dump(summary))
    return EXIT_OK if result.complete else EXIT_NUMERICAL


def _report_row(path: Path) -> dict:
    try:
        d = json.loads(path.read_text())
        pred = d["prediction"]["fluctuation_exponent"]
        est = d["estimated_exponent"]
        label = d["prediction"]["case_label"]
        name = d.get("name") or path.name[: -len(".regime.json")]
        tol = float(d.get("tolerance", 0.05))
        # a run whose sums vanish identically has no exponent to compare
        pred, est = float(pred), math.nan if est is None else float(est)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ReportError(f"{path}: {exc}") from exc
    delta = abs(est - pred)
    return {"case": f"{name} ({label})", "predicted": pred, "estimated": est, "delta": delta,
            "pass": bool(delta <= tol)}


def format_report(rows) -> str:
    lines = ["| case | predicted α | estimated α | \\|Δ\\| | pass |", "|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['case']} | {r['predicted']:.4f} | {r['estimated']:.4f} | {r['delta']:.4f} | "
                     f"{'yes' if r['pass'] else 'no'} |")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"not a directory: {directory}", file=sys.stderr)
        return EXIT_IO
    try:
        rows = [_report_row(p) for p in sorted(directory.glob("*.regime.json"))]
    except ReportError as exc:
        print(f"malformed result file {exc}", file=sys.stderr)
        return EXIT_IO
    _emit(format_report(rows), args.output)
    return EXIT_OK


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hermrank", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def numeric(sp):
        sp.add_argument("--order", type=int, default=DEFAULTS.order, help="truncation order M")
        sp.add_argument("--nodes", type=int, default=None, help="quadrature nodes (default 200, 2000 for indicators)")
        sp.add_argument("--tol", type=float, default=DEFAULTS.rank_tol, help="relative rank tolerance")

    sp = sub.add_parser("expand", help="Hermite coefficients of a function spec")
    sp.add_argument("spec", help="function spec as JSON text or a path to a JSON file")
    numeric(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("rank", help="Hermite rank and power rank")
    sp.add_argument("spec")
    numeric(sp)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("scan", help="zero set of the first coefficient under perturbation")
    sp.add_argument("spec")
    sp.add_argument("--mode", choices=("shift", "scale", "affine"), required=True)
    sp.add_argument("--x", type=float, nargs=3, metavar=("LO", "HI", "STEPS"), help="shift axis")
    sp.add_argument("--y", type=float, nargs=3, metavar=("LO", "HI", "STEPS"), help="scale axis")
    numeric(sp)
    sp.add_argument("--output-dir", default=".")
    sp.add_argument("--name")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("fgn", help="exact fractional Gaussian noise paths")
    sp.add_argument("--hurst", type=float, required=True)
    sp.add_argument("--length", type=int, required=True)
    sp.add_argument("--seed", type=int, default=DEFAULTS.base_seed)
    sp.add_argument("--replicates", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "bin"), default="csv")
    sp.add_argument("--output-dir", default=".")
    sp.set_defaults(func=cmd_fgn)

    sp = sub.add_parser("regime", help="Monte Carlo scaling study of a perturbed partial sum")
    sp.add_argument("experiment", help="experiment JSON text or a path to a JSON file")
    sp.add_argument("--output-dir", default=".")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_regime)

    sp = sub.add_parser("report", help="markdown table over a directory of regime runs")
    sp.add_argument("directory")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_report)
    return p


def _coerce_axes(args):
    for name in ("x", "y"):
        axis = getattr(args, name, None)
        if axis is not None:
            lo, hi, steps = axis
            if steps != int(steps):
                raise InputError(f"--{name} steps must be an integer")
            setattr(args, name, [lo, hi, int(steps)])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _coerce_axes(args)
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
