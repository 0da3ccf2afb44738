#!/usr/bin/env python3
"""Throughput comparison of the simulation kernel backends.

Runs the same seeded reaction trials through the compiled kernel and the
pure-Python fallback and reports ticks per second for each.
"""

import argparse
import time

from telearm._core import available_backends
from telearm.gateway.config import default_session_config
from telearm.harness import TrialConfig, TrialKind, run_trial
from telearm.retarget import MappingMode


def run_workload(cfg, board, backend, trials, mapping):
    ticks = 0
    t0 = time.perf_counter()
    for seed in range(trials):
        log = run_trial(
            TrialConfig(TrialKind.RXN_M, seed=seed),
            cfg.pilot, mapping, board, cfg.human, cfg.robot, cfg.gains, cfg.plant,
            home_pose=cfg.home_pose, backend=backend,
        )
        ticks += int(log.samples[-1, 0])
    return ticks, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5, help="trials per backend")
    ap.add_argument(
        "--mapping", choices=["joint", "task"], default="task",
        help="retargeting mode for the workload (task is the heavier kernel path)",
    )
    args = ap.parse_args()

    cfg = default_session_config()
    board = cfg.board()
    mapping = MappingMode(args.mapping)

    rows = []
    for name, impl in available_backends().items():
        ticks, elapsed = run_workload(cfg, board, impl, args.trials, mapping)
        rows.append((name, ticks, elapsed, ticks / elapsed))

    print(f"workload: {args.trials} RXN_M trials, {args.mapping} mapping")
    print(f"{'backend':<10} {'ticks':>10} {'seconds':>9} {'ticks/s':>12}")
    for name, ticks, elapsed, rate in rows:
        print(f"{name:<10} {ticks:>10} {elapsed:>9.3f} {rate:>12.0f}")
    if len(rows) == 2:
        speedup = rows[1][3] / rows[0][3] if rows[0][0] == "python" else rows[0][3] / rows[1][3]
        print(f"compiled speedup: {speedup:.1f}x")


if __name__ == "__main__":
    main()
