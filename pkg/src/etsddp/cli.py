"""Command-line interface.

Subcommands:

* ``solve``      run the point- or set-targeted solver from a config file
* ``compare``    run both solvers on one config and tabulate the results
* ``synthesize`` fit an ellipsoidal target set to a labeled dataset
* ``gen-data``   draw synthetic accepted samples from the proposal
* ``serve``      start the labeling/solve HTTP service

Exit codes: 0 success (solves: converged), 1 solver did not converge
(artifacts are still written), 2 invalid configuration or input data.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import backend
from .artifacts import report_dict, write_comparison_csv, \
    write_cost_history_csv, write_report_json, write_trajectory_csv
from .config import ConfigError, RunConfig, load_run_config, parse_run_config
from .ellipsoid import mahalanobis_many, write_ellipsoid_json
from .ets import EtsConfig, compare, ets_solve, point_solve
from .synthesis import Dataset, LabeledSample, mvn_sample_many, \
    read_dataset_csv, synthesize_ellipsoid, write_dataset_csv


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_config(args) -> RunConfig:
    config = load_run_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "out", None) is not None:
        config.out_dir = Path(args.out)
    return config


def _out_dir(config: RunConfig) -> Path:
    out = config.out_dir if config.out_dir is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    try:
        config = _load_config(args)
        out = _out_dir(config)
        if config.target_kind == "point":
            report = point_solve(config.initial_state, config.car,
                                 config.target_point, config.solver,
                                 eval_point=config.eval_point)
            method = "ddp"
        else:
            target = config.resolve_ellipsoid()
            write_ellipsoid_json(out / "ellipsoid.json", target)
            cfg = EtsConfig(base=config.solver, target=target,
                            mode=config.projection_mode,
                            eval_point=config.eval_point,
                            interior_margin=config.interior_margin,
                            exact_curvature=config.exact_curvature)
            report = ets_solve(config.initial_state, config.car, cfg)
            method = "ets-ddp"
    except (ConfigError, ValueError, OSError) as exc:
        return _fail(str(exc))

    write_trajectory_csv(out / "trajectory.csv", report.trajectory)
    write_cost_history_csv(out / "cost_history.csv", report.cost_history,
                           report.comparison_history)
    write_report_json(out / "report.json", report_dict(report, method))
    print(f"{method}: converged={report.converged} iterations={report.iterations} "
          f"cost={report.final_cost:.6g} "
          f"({report.seconds_per_iteration * 1e3:.1f} ms/iter, "
          f"backend={backend.active_backend()})")
    return 0 if report.converged else 1


def cmd_compare(args) -> int:
    try:
        config = _load_config(args)
        out = _out_dir(config)
        target = config.resolve_ellipsoid()
        write_ellipsoid_json(out / "ellipsoid.json", target)
        cfg = EtsConfig(base=config.solver, target=target,
                        mode=config.projection_mode,
                        eval_point=config.eval_point,
                        interior_margin=config.interior_margin,
                        exact_curvature=config.exact_curvature)
        result = compare(config.initial_state, config.car, cfg)
    except (ConfigError, ValueError, OSError) as exc:
        return _fail(str(exc))

    write_comparison_csv(out / "comparison.csv", [result.point, result.ets])
    for name, report in (("ddp", result.point_report), ("ets", result.ets_report)):
        write_trajectory_csv(out / f"{name}_trajectory.csv", report.trajectory)
        write_cost_history_csv(out / f"{name}_cost_history.csv",
                               report.cost_history, report.comparison_history)
        write_report_json(out / f"{name}_report.json",
                          report_dict(report, name))
    for rec in (result.point, result.ets):
        print(f"{rec.method}: iterations={rec.iterations} "
              f"cost={rec.final_cost:.4g} "
              f"time/iter={rec.seconds_per_iteration * 1e3:.1f} ms "
              f"total={rec.total_seconds:.2f} s "
              f"terminal_dM={rec.terminal_mahalanobis:.3f}")
    ok = result.point.converged and result.ets.converged
    return 0 if ok else 1


def cmd_synthesize(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        return _fail("alpha must lie strictly between 0 and 1")
    try:
        data = read_dataset_csv(args.dataset)
        ellipsoid = synthesize_ellipsoid(data, args.alpha,
                                         min_samples=args.min_samples)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ellipsoid.json"
    write_ellipsoid_json(path, ellipsoid)
    points = data.accepted_points()
    inside = mahalanobis_many(points, ellipsoid) < ellipsoid.radius
    print(f"n={ellipsoid.dim} N={points.shape[0]} alpha={args.alpha} "
          f"r={ellipsoid.radius:.6f} coverage={inside.mean():.4f}")
    print(f"wrote {path}")
    return 0


def cmd_gen_data(args) -> int:
    try:
        if args.config:
            config = load_run_config(args.config)
            proposal = config.proposal
        else:
            proposal = parse_run_config({}).proposal
    except ConfigError as exc:
        return _fail(str(exc))
    if args.n < 0:
        return _fail("--n must be nonnegative")
    rng = random.Random(args.seed)
    data = Dataset(dimension=4)
    if args.n > 0:
        points = mvn_sample_many(proposal.mean, proposal.cov, args.n, rng)
        for point in points:
            data.append(LabeledSample(point=point, accepted=True, timestamp=0.0))
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dataset.csv"
    write_dataset_csv(path, data)
    print(f"wrote {args.n} accepted samples to {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    try:
        config = load_run_config(args.config) if args.config else parse_run_config({})
    except ConfigError as exc:
        return _fail(str(exc))
    data_dir = Path(args.out) if args.out else Path("sessions")
    app = create_app(config, data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etsddp",
        description="Trajectory optimization with point or ellipsoidal targets")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solver from a config file")
    p_solve.add_argument("--config", required=True, type=Path)
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--out", type=Path, default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="run both solvers and tabulate")
    p_cmp.add_argument("--config", required=True, type=Path)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", type=Path, default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_syn = sub.add_parser("synthesize", help="fit an ellipsoid to a dataset")
    p_syn.add_argument("dataset", type=Path)
    p_syn.add_argument("--alpha", type=float, default=0.01)
    p_syn.add_argument("--out", type=Path, default=None)
    p_syn.add_argument("--min-samples", type=int, default=None,
                       help="override the minimum accepted-sample count")
    p_syn.set_defaults(func=cmd_synthesize)

    p_gen = sub.add_parser("gen-data", help="draw synthetic accepted samples")
    p_gen.add_argument("--n", type=int, default=86)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", type=Path, default=None)
    p_gen.add_argument("--config", type=Path, default=None,
                       help="run config supplying the proposal distribution")
    p_gen.set_defaults(func=cmd_gen_data)

    p_srv = sub.add_parser("serve", help="start the labeling HTTP service")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--config", type=Path, default=None)
    p_srv.add_argument("--out", type=Path, default=None,
                       help="directory for session datasets")
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
