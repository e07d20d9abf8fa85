#!/usr/bin/env python3
"""Per-tick pipeline throughput benchmark.

Measures the median rate of the full perception-to-control tick (velocity
estimation + warm-started 16 x 6-slice lifted field build on a 128 x 128
grid + one MPC solve) and of the MPC solve alone. Run from the repo root:

    python3 scripts/benchmark_throughput.py [--ticks 60]
"""

import argparse
import time

import numpy as np

from poisson_safety.sim import SimSession, config_from_json

BENCH_CONFIG = {
    "name": "throughput-bench",
    "grid": {"nx": 128, "ny": 128, "resolution": 0.05, "origin": [0.0, 0.0]},
    "footprint": {"kind": "ellipse", "a": 0.3, "b": 0.12},
    "start": [3.2, 3.2, 0.0],
    "goal": {"mode": "fixed", "pose": [5.5, 5.5, 0.0]},
    "obstacles": [
        {"shape": {"kind": "ellipse", "a": 0.25, "b": 0.25},
         "pose": [3.2, 0.8, 0.0], "velocity": [0.0, 1.2]},
        {"shape": {"kind": "ellipse", "a": 0.2, "b": 0.2},
         "pose": [5.0, 3.0, 0.0], "velocity": [-0.8, 0.3]},
    ],
    "controller": {"kind": "mpc", "horizon": 8},
    "solver": {"tol": 1e-4, "exterior_mode": "mirrored-negative"},
    "n_theta": 16,
    "n_t": 6,
    "dt_field": 0.1,
    "duration": 10.0,
    "dt": 0.05,
    "rebuild_every": 2,
    "seed": 1,
}

WARMUP_TICKS = 6


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ticks", type=int, default=60)
    args = ap.parse_args()

    session = SimSession(config_from_json(BENCH_CONFIG))
    for _ in range(WARMUP_TICKS):   # JIT warmup + cold field build
        session.tick()

    tick_ms, solve_ms, field_ms = [], [], []
    for _ in range(args.ticks):
        t0 = time.perf_counter()
        row = session.tick()
        tick_ms.append((time.perf_counter() - t0) * 1e3)
        solve_ms.append(row["solve_ms"])
        if row["field_ms"] > 0:
            field_ms.append(row["field_ms"])

    tick_p50 = float(np.percentile(tick_ms, 50))
    solve_p50 = float(np.percentile(solve_ms, 50))
    print(f"ticks measured      {args.ticks}")
    print(f"tick ms             p50 {tick_p50:.1f}   "
          f"p95 {np.percentile(tick_ms, 95):.1f}")
    print(f"mpc solve ms        p50 {solve_p50:.2f}  "
          f"p95 {np.percentile(solve_ms, 95):.2f}")
    if field_ms:
        print(f"field rebuild ms    p50 {np.percentile(field_ms, 50):.1f}  "
              f"p95 {np.percentile(field_ms, 95):.1f}")
    print(f"pipeline rate       {1e3 / tick_p50:.1f} Hz median "
          f"(target >= 10)")
    print(f"mpc rate            {1e3 / solve_p50:.1f} Hz median "
          f"(target >= 100)")


if __name__ == "__main__":
    main()
