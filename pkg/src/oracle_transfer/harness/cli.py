"""Command-line front door: run, sweep, verify, plot, demo."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..errors import OracleTransferError
from ..trace import read_trace_csv
from .config import ExperimentConfig
from .plots import PLOT_KINDS, emit_plot
from .runner import run_experiment, sweep, write_sweep_csv
from .verify import verify_trace

OUT_ENV = "ORACLE_TRANSFER_OUT"


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV, "."))


def demo_configs() -> dict[str, ExperimentConfig]:
    """Canned experiment configurations exercising every transfer mode."""
    return {
        "adversarial-repair": ExperimentConfig.from_dict({
            "name": "adversarial-repair", "dim": 1, "R": 1.0, "T": 10, "seed": 11,
            "transfer": "lipschitz",
            "objective": {"kind": "max-of-affines", "slopes": [[0.0]],
                          "intercepts": [0.25], "minimizer": [0.0], "opt_value": 0.25,
                          "M": 1.0},
            "noise": {"kind": "adversarial-slope-flip", "eta": 0.08},
            "algorithm": {"kind": "projected-subgradient", "start": [0.9]},
        }),
        "subgradient": ExperimentConfig.from_dict({
            "name": "subgradient", "dim": 1, "R": 1.0, "T": 100, "seed": 7,
            "transfer": "lipschitz",
            "objective": {"kind": "abs-distance", "anchor": [0.3]},
            "noise": {"kind": "uniform-random", "eta": 0.001},
            "algorithm": {"kind": "projected-subgradient", "start": [0.0]},
        }),
        "agd-smooth": ExperimentConfig.from_dict({
            "name": "agd-smooth", "dim": 2, "R": 1.0, "T": 30, "seed": 5,
            "transfer": "smooth",
            "objective": {"kind": "quadratic", "anchor": [0.0, 0.0], "alpha": 1.0},
            "noise": {"kind": "uniform-random", "eta": 1.0 / 1500.0},
            "estimator": {"mode": "monte-carlo", "n_samples": 4096, "antithetic": True},
            "algorithm": {"kind": "nesterov-agd", "start": [1.0, 0.0]},
        }),
        "ellipsoid": ExperimentConfig.from_dict({
            "name": "ellipsoid", "dim": 2, "R": 1.0, "T": 60, "seed": 3,
            "transfer": "constrained",
            "objective": {"kind": "max-of-affines", "slopes": [[1.0, 0.0]],
                          "intercepts": [0.0], "minimizer": [-1.0, 0.0],
                          "opt_value": -1.0},
            "constraint": {"kind": "ball", "center": [0.0, 0.0], "radius": 0.8, "R": 1.0},
            "noise": {"kind": "zero", "eta": 0.0},
            "sep_noise": {"kind": "random-rotation", "eta_c": 0.05},
            "constrained_opt_value": -0.8,
            "algorithm": {"kind": "ellipsoid"},
        }),
        "lattice": ExperimentConfig.from_dict({
            "name": "lattice", "dim": 2, "R": 3.0, "T": 29, "seed": 13,
            "transfer": "constrained", "ground_set": "integer-lattice",
            "objective": {"kind": "quadratic", "anchor": [1.2, 0.4], "alpha": 2.0},
            "constraint": {"kind": "ball", "center": [0.0, 0.0], "radius": 2.5,
                           "R": 3.0, "rho": 1.5},
            "noise": {"kind": "zero", "eta": 0.0},
            "sep_noise": {"kind": "random-rotation", "eta_c": 0.1},
            "constrained_opt_value": 0.2,
            "algorithm": {"kind": "lattice-enumerator"},
        }),
    }


def _print_summary(summary) -> None:
    print(f"transfer={summary.transfer} algorithm={summary.algorithm} "
          f"rows={summary.n_rows} hash={summary.config_hash}")
    if summary.final_gap is not None:
        print(f"final gap       : {summary.final_gap:.6g}")
    if summary.bound is not None:
        print(f"guarantee bound : {summary.bound:.6g} "
              f"({'satisfied' if summary.bound_ok else 'VIOLATED'})")
    if summary.final_feasible is not None:
        print(f"final feasible  : {summary.final_feasible}")
    if summary.raw_extensible is not None:
        print(f"raw pairs admit convex extension      : {summary.raw_extensible}")
    if summary.repaired_extensible is not None:
        print(f"repaired pairs admit convex extension : {summary.repaired_extensible}")
    print(f"wall time       : {summary.wall_time:.3f}s")


def _audits_ok(summary) -> bool:
    if summary.bound_ok is False:
        return False
    if summary.repaired_extensible is False:
        return False
    if summary.final_feasible is False:
        return False
    return True


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    trace = run_experiment(cfg, out_dir=_out_dir(args.out))
    _print_summary(trace.summary)
    return 0 if _audits_ok(trace.summary) else 1


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    axis, _, values = args.vary.partition("=")
    grid = [float(v) for v in values.split(",") if v != ""]
    rows = sweep(cfg, axis.strip(), grid, recipe=args.recipe,
                 include_baseline=args.baseline)
    out = _out_dir(args.out) / f"{cfg.name}-sweep-{axis.strip()}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    audited = [r["bound_ok"] for r in rows if r["bound_ok"] is not None]
    ok = all(audited) if audited else True
    print("all guarantee audits satisfied" if ok else "guarantee audit VIOLATED")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    trace_path = Path(args.trace)
    summary_path = trace_path.with_name(trace_path.stem + ".summary.json")
    if not summary_path.exists():
        print(f"missing config sidecar {summary_path}", file=sys.stderr)
        return 2
    with open(summary_path) as fh:
        cfg = ExperimentConfig.from_dict(json.load(fh)["config"])
    trace, stored_hash = read_trace_csv(trace_path)
    if stored_hash and stored_hash != cfg.config_hash():
        print("config hash mismatch between trace and sidecar", file=sys.stderr)
        return 2
    report = verify_trace(trace, cfg)
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


def cmd_plot(args) -> int:
    out = args.out or str(Path(args.csv).with_suffix(".svg"))
    emit_plot(args.csv, args.kind, out)
    print(f"wrote {out}")
    return 0


def cmd_demo(args) -> int:
    demos = demo_configs()
    if args.name not in demos:
        print(f"unknown demo {args.name!r}; choose from {sorted(demos)}", file=sys.stderr)
        return 2
    cfg = demos[args.name]
    trace = run_experiment(cfg, out_dir=_out_dir(args.out))
    _print_summary(trace.summary)
    if cfg.transfer != "none":
        report = verify_trace(trace, cfg)
        for line in report.lines():
            print(line)
        return 0 if (_audits_ok(trace.summary) and report.ok) else 1
    return 0 if _audits_ok(trace.summary) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oracle-transfer",
        description="Run exact-oracle convex optimization algorithms on "
                    "inexact first-order and separation oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or cwd)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs over eta or T")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--vary", required=True, metavar="AXIS=V1,V2,...",
                         help="axis eta or T with comma-separated values")
    p_sweep.add_argument("--recipe", action="store_true",
                         help="couple eta to the accuracy-tradeoff schedule on T sweeps")
    p_sweep.add_argument("--baseline", action="store_true",
                         help="also run the unrepaired baseline at each grid point")
    p_sweep.add_argument("--out")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="replay a trace and audit invariants")
    p_verify.add_argument("trace", help="path to a trace CSV written by `run`")
    p_verify.set_defaults(func=cmd_verify)

    p_plot = sub.add_parser("plot", help="render a sweep CSV to SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p_plot.add_argument("--out")
    p_plot.set_defaults(func=cmd_plot)

    p_demo = sub.add_parser("demo", help="run a canned demonstration")
    p_demo.add_argument("name")
    p_demo.add_argument("--out")
    p_demo.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OracleTransferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
