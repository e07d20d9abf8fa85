"""Command-line entry points.

    run    --config <file> --log <csv> [--export-fields <dir>] [--serve <addr>]
    solve  --occupancy <pgm> --out <psf1> [solver flags]
    replay --log <csv>
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError
from .fileio import read_pgm_occupancy, write_psf1
from .grid import GridSpec, LiftedSafetyField
from .poisson import SolverParams, solve_poisson
from .sim import TrajectoryLog, load_config, run_scenario


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error at '{exc.path}': {exc.message}", file=sys.stderr)
        return 2
    if args.serve:
        from .service import serve
        serve(config, args.serve)
        return 0

    export_dir = args.export_fields
    if export_dir:
        os.makedirs(export_dir, exist_ok=True)

    def on_tick(session, row):
        if export_dir and row["field_ms"] > 0.0:
            path = os.path.join(export_dir,
                                f"field_{len(session.rows) - 1:06d}.psf1")
            write_psf1(session.field, path)

    log = run_scenario(config, on_tick=on_tick)
    log.to_csv(args.log)
    _print_summary(log)
    return 0


def _cmd_solve(args) -> int:
    occ = read_pgm_occupancy(args.occupancy, resolution=args.resolution)
    params = SolverParams(forcing=args.forcing, relax=args.relax,
                          tol=args.tol, max_iters=args.max_iters,
                          exterior_mode=args.exterior_mode)
    fld, report = solve_poisson(occ, params)
    base = occ.spec
    spec = GridSpec(base.nx, base.ny, base.resolution, base.origin, 1, 1, 1.0)
    lifted = LiftedSafetyField(spec, fld.values[:, :, None, None].copy(), 0.0)
    write_psf1(lifted, args.out)
    status = "converged" if report.converged else "NOT converged"
    print(f"{status}: {report.iterations} sweeps, "
          f"residual {report.final_residual:.3e}, "
          f"{report.wall_time * 1e3:.1f} ms")
    return 0 if report.converged else 1


def _cmd_replay(args) -> int:
    log = TrajectoryLog.from_csv(args.log)
    _print_summary(log)
    return 0


def _print_summary(log: TrajectoryLog) -> None:
    s = log.summary()
    print(f"rows            {len(log.rows)}")
    print(f"min h           {s['min_h']:.4f}")
    reach = s["goal_reach_time"]
    print(f"goal reached    {'t=%.2f s' % reach if reach == reach else 'no'}")
    print(f"deadlock        {s['deadlock']}")
    print(f"solve ms        p50 {s['solve_ms_p50']:.2f}  "
          f"p95 {s['solve_ms_p95']:.2f}")
    print(f"field ms        p50 {s['field_ms_p50']:.2f}  "
          f"p95 {s['field_ms_p95']:.2f}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="poisson-safety",
        description="Poisson safety fields and predictive safety filtering")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario closed loop")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--log", required=True)
    p_run.add_argument("--export-fields", default=None,
                       help="directory for PSF1 snapshots of rebuilt fields")
    p_run.add_argument("--serve", default=None,
                       help="host:port; run the teleop service instead")
    p_run.set_defaults(func=_cmd_run)

    p_solve = sub.add_parser("solve", help="one-shot field build from a PGM")
    p_solve.add_argument("--occupancy", required=True)
    p_solve.add_argument("--out", required=True)
    p_solve.add_argument("--resolution", type=float, default=0.05)
    p_solve.add_argument("--forcing", type=float, default=-4.0)
    p_solve.add_argument("--relax", type=float, default=1.9)
    p_solve.add_argument("--tol", type=float, default=1e-6)
    p_solve.add_argument("--max-iters", type=int, default=10000)
    p_solve.add_argument("--exterior-mode", default="zero",
                         choices=["zero", "mirrored-negative"])
    p_solve.set_defaults(func=_cmd_solve)

    p_replay = sub.add_parser("replay", help="summarize a trajectory log")
    p_replay.add_argument("--log", required=True)
    p_replay.set_defaults(func=_cmd_replay)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
