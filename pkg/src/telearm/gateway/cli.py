"""Command-line gateway: batch runs, controller tuning, sweeps, export, serving.

Subcommands:
  run     execute the configured trial plan headless and write logs
  tune    search PD gains meeting the configured step-response targets
  sweep   run the orientational-offset experiment at both roll levels
  serve   start the live piloting service (WebSocket wire protocol)
  export  aggregate a session directory into stats and analysis files
  replay  re-simulate a recorded live session and write its logs

Set TELEARM_LOG=debug|info|warning to control verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import numpy as np

from ..errors import ConfigInvalid, TargetInfeasible, TelearmError, UnstableResponse
from ..harness import TrialConfig, offset_sweep, run_trial, summarize
from ..plant import GainSet, ResponseCurve, critical_kd, step_response
from ..retarget import MappingMode
from . import logs as logio
from .config import SessionConfig, dump_config, load_config

log = logging.getLogger("telearm")


def run_session(cfg: SessionConfig, out_dir: str, backend=None) -> list:
    """Execute the trial plan; one CSV per trial plus session.jsonl.

    Idempotent for fixed seeds: reruns overwrite with identical bytes.
    """
    os.makedirs(out_dir, exist_ok=True)
    board = cfg.board()
    trial_logs = []
    trial_id = 0
    for ei, entry in enumerate(cfg.plan):
        for ti in range(entry.count):
            tc = TrialConfig(
                entry.kind,
                seed=cfg.trial_seed(ei, ti),
                tick_rate=cfg.tick_rate,
                log_rate=cfg.log_rate,
            )
            pilot = dataclasses.replace(cfg.pilot, seed=cfg.pilot_seed(ei, ti))
            tlog = run_trial(
                tc, pilot, entry.mapping, board, cfg.human, cfg.robot,
                cfg.gains, cfg.plant,
                home_pose=cfg.home_pose,
                per_hit_timeout=cfg.per_hit_timeout,
                trial_id=trial_id,
                backend=backend,
            )
            logio.write_trial_csv(
                os.path.join(out_dir, logio.trial_csv_name(trial_id, tlog)), tlog
            )
            trial_logs.append(tlog)
            log.info(
                "trial %d (%s/%s): mean %.3fs sd %.3fs",
                trial_id, entry.kind.value, entry.mapping.value,
                tlog.mean_reaction, tlog.sd_reaction,
            )
            trial_id += 1
    summary = summarize(trial_logs)
    logio.write_session_jsonl(os.path.join(out_dir, "session.jsonl"), trial_logs, summary)
    dump_config(cfg, os.path.join(out_dir, "config.yaml"))
    return trial_logs


@dataclasses.dataclass(frozen=True)
class TuneReport:
    gains: GainSet
    curves: tuple[ResponseCurve, ...]  # one per joint, at the tuned gains


def tune_gains(cfg: SessionConfig) -> TuneReport:
    """Per-joint bisection for the smallest stiffness meeting the targets.

    Damping tracks the configured damping ratio.  Raises TargetInfeasible
    when even the largest allowed stiffness misses the rise-time target or
    the overshoot cap.
    """
    t = cfg.tuning
    kps: list[float] = []
    kds: list[float] = []
    curves: list[ResponseCurve] = []
    for joint in range(4):
        inertia = cfg.plant.inertia[joint]
        damping = cfg.plant.damping[joint]

        def response(kp: float) -> ResponseCurve | None:
            kd = critical_kd(kp, inertia, damping, t.damping_ratio)
            gains = GainSet((kp,) * 4, (kd,) * 4)
            try:
                return step_response(cfg.plant, gains, joint, t.amplitude, t.horizon)
            except UnstableResponse:
                return None

        def meets(c: ResponseCurve | None) -> bool:
            return (
                c is not None
                and c.rise_time <= t.rise_time
                and c.overshoot_pct <= t.overshoot_cap
                and math.isfinite(c.settle_time)
            )

        # saturation breaks rise-time monotonicity at large kp, so locate a
        # feasible stiffness on a log grid first, then refine its lower edge
        grid = np.geomspace(t.kp_min, t.kp_max, 33)
        feasible = next((kp for kp in grid if meets(response(kp))), None)
        if feasible is None:
            raise TargetInfeasible(
                f"joint {joint}: no gains within kp <= {t.kp_max} meet "
                f"rise <= {t.rise_time}s with overshoot <= {t.overshoot_cap}%"
            )
        if feasible == grid[0]:
            kp = float(feasible)
        else:
            lo = float(grid[np.nonzero(grid == feasible)[0][0] - 1])
            hi = float(feasible)
            for _ in range(40):
                mid = math.sqrt(lo * hi)  # log-space bisection
                if meets(response(mid)):
                    hi = mid
                else:
                    lo = mid
            kp = hi
        kd = critical_kd(kp, inertia, damping, t.damping_ratio)
        kps.append(kp)
        kds.append(kd)
        curves.append(response(kp))
    report = TuneReport(GainSet(tuple(kps), tuple(kds)), tuple(curves))
    return report


def write_tune_report(report: TuneReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    obj = {
        "kp": list(report.gains.kp),
        "kd": list(report.gains.kd),
        "metrics": [
            {
                "joint": j,
                "rise_time": c.rise_time,
                "settle_time": c.settle_time,
                "overshoot_pct": c.overshoot_pct,
            }
            for j, c in enumerate(report.curves)
        ],
    }
    with open(os.path.join(out_dir, "tune.json"), "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "step_curves.csv"), "w") as f:
        f.write("t_s," + ",".join(f"joint{j}" for j in range(4)) + "\n")
        n = len(report.curves[0].time)
        for i in range(n):
            cells = [repr(float(report.curves[0].time[i]))]
            cells += [repr(float(c.position[i])) for c in report.curves]
            f.write(",".join(cells) + "\n")


def run_sweep(cfg: SessionConfig) -> list[dict]:
    rows = []
    for level_deg in (45.0, 0.0):
        for mapping in (MappingMode.JOINT, MappingMode.TASK):
            off = offset_sweep(math.radians(level_deg), mapping, cfg.human, cfg.robot)
            rows.append(
                {"theta2_deg": level_deg, "mapping": mapping.value, "offset_deg": off}
            )
    return rows


def export_session(in_dir: str, out_dir: str, plots: bool = False) -> None:
    """Aggregate a session directory: per-trial stats, stable means,
    nondimensional trajectories, optional PNG plots."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = load_config(os.path.join(in_dir, "config.yaml"))
    summaries = logio.read_session_jsonl(os.path.join(in_dir, "session.jsonl"))
    trials = [s for s in summaries if s.get("type") == "trial"]

    with open(os.path.join(out_dir, "stats.csv"), "w") as f:
        f.write("trial_id,kind,mapping,n_hits,mean_reaction,sd_reaction\n")
        for tr in trials:
            f.write(
                f"{tr['trial_id']},{tr['kind']},{tr['mapping']},{len(tr['hits'])},"
                f"{tr['mean_reaction']!r},{tr['sd_reaction']!r}\n"
            )

    # stable means per (kind, mapping) combination over the last k trials
    stable: dict[str, dict] = {}
    for key in sorted({(t["kind"], t["mapping"]) for t in trials}):
        kind, mapping = key
        means = [t["mean_reaction"] for t in trials if (t["kind"], t["mapping"]) == key]
        k = min(10, len(means))
        stable[f"{kind}/{mapping}"] = {
            "stable_mean": float(np.mean(means[-k:])),
            "k": k,
            "trials": len(means),
        }
    with open(os.path.join(out_dir, "stable_means.json"), "w") as f:
        json.dump(stable, f, indent=2, sort_keys=True)
        f.write("\n")

    lh, lr = cfg.human.arm_length, cfg.robot.arm_length
    for samples, mapping, trial_id in logio.logs_from_dir(in_dir):
        path = os.path.join(out_dir, f"ndl_trial_{trial_id:03d}.csv")
        with open(path, "w") as f:
            f.write(
                "t_s,h_frontal_y,h_frontal_z,h_sagittal_x,h_sagittal_z,"
                "r_frontal_y,r_frontal_z,r_sagittal_x,r_sagittal_z\n"
            )
            for row in samples:
                t_s = row[0] / cfg.tick_rate
                h = row[16:19] / lh
                r = row[13:16] / lr
                cells = [repr(float(v)) for v in (t_s, h[1], h[2], h[0], h[2], r[1], r[2], r[0], r[2])]
                f.write(",".join(cells) + "\n")

    if plots:
        _export_plots(out_dir, trials, in_dir, cfg)


def _export_plots(out_dir: str, trials: list[dict], in_dir: str, cfg) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ids = [t["trial_id"] for t in trials]
    means = [t["mean_reaction"] for t in trials]
    sds = [t["sd_reaction"] for t in trials]
    ax.errorbar(ids, means, yerr=sds, fmt="o-", capsize=3)
    ax.set_xlabel("trial")
    ax.set_ylabel("reaction time (s)")
    ax.set_title("per-trial mean reaction times")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "reaction_progression.png"), dpi=120)
    plt.close(fig)

    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    lh, lr = cfg.human.arm_length, cfg.robot.arm_length
    for samples, mapping, trial_id in logio.logs_from_dir(in_dir):
        h = samples[:, 16:19] / lh
        r = samples[:, 13:16] / lr
        axes[0].plot(h[:, 1], h[:, 2], lw=0.6, alpha=0.6, color="tab:blue")
        axes[0].plot(r[:, 1], r[:, 2], lw=0.6, alpha=0.6, color="tab:orange")
        axes[1].plot(h[:, 0], h[:, 2], lw=0.6, alpha=0.6, color="tab:blue")
        axes[1].plot(r[:, 0], r[:, 2], lw=0.6, alpha=0.6, color="tab:orange")
    axes[0].set_title("frontal (y, z), nondimensional")
    axes[1].set_title("sagittal (x, z), nondimensional")
    for ax in axes:
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "ndl_trajectories.png"), dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------


def cli_run(config_path: str | None, out_dir: str) -> int:
    cfg = load_config(config_path)
    run_session(cfg, out_dir)
    print(f"wrote {out_dir}/session.jsonl")
    return 0


def cli_tune(config_path: str | None, out_dir: str | None) -> int:
    cfg = load_config(config_path)
    report = tune_gains(cfg)
    print(f"{'joint':<6} {'kp':>9} {'kd':>8} {'rise_s':>8} {'settle_s':>9} {'overshoot%':>11}")
    for j, c in enumerate(report.curves):
        print(
            f"{j:<6} {report.gains.kp[j]:>9.3f} {report.gains.kd[j]:>8.3f} "
            f"{c.rise_time:>8.4f} {c.settle_time:>9.4f} {c.overshoot_pct:>11.3f}"
        )
    if out_dir:
        write_tune_report(report, out_dir)
        print(f"wrote {out_dir}/tune.json")
    return 0


def cli_sweep(config_path: str | None, out_dir: str | None) -> int:
    cfg = load_config(config_path)
    rows = run_sweep(cfg)
    print(f"{'theta2_deg':>10} {'mapping':>8} {'offset_deg':>12}")
    for r in rows:
        print(f"{r['theta2_deg']:>10.1f} {r['mapping']:>8} {r['offset_deg']:>12.6f}")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "sweep.csv"), "w") as f:
            f.write("theta2_deg,mapping,offset_deg\n")
            for r in rows:
                f.write(f"{r['theta2_deg']!r},{r['mapping']},{r['offset_deg']!r}\n")
        print(f"wrote {out_dir}/sweep.csv")
    return 0


def cli_export(in_dir: str, out_dir: str, plots: bool) -> int:
    export_session(in_dir, out_dir, plots=plots)
    print(f"wrote {out_dir}/stats.csv")
    return 0


def cli_serve(config_path: str | None, port: int | None, blind: bool | None,
              out_dir: str | None, record: str | None, ui: str | None,
              speed: float | None) -> int:
    from .service import serve_forever

    cfg = load_config(config_path)
    serve_forever(cfg, port=port, blind=blind, out_dir=out_dir, record=record,
                  ui_dir=ui, speed=speed)
    return 0


def cli_replay(trace_path: str, out_dir: str) -> int:
    from .replay import replay_trace

    replay_trace(trace_path, out_dir)
    print(f"wrote {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="telearm", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run the trial plan headless")
    p.add_argument("--config", default=None, help="session config YAML (defaults built in)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the session seed")

    p = sub.add_parser("tune", help="search PD gains for the step-response targets")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="orientational-offset sweep at 45 and 0 degrees")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="start the live piloting service")
    p.add_argument("--config", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--blind", action="store_true", default=None,
                   help="hide the active mapping from clients")
    p.add_argument("--out", default=None, help="directory for live trial logs")
    p.add_argument("--record", default=None, help="record an input trace to this file")
    p.add_argument("--ui", default=None, help="static cockpit directory to serve at /")
    p.add_argument("--speed", type=float, default=None,
                   help="wall-clock pacing multiplier (physics unchanged)")

    p = sub.add_parser("export", help="aggregate a session directory")
    p.add_argument("session_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--plots", action="store_true")

    p = sub.add_parser("replay", help="re-simulate a recorded live trace")
    p.add_argument("trace")
    p.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("TELEARM_LOG", "warning").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg_path = args.config
            if args.seed is not None:
                cfg = load_config(cfg_path)
                cfg = dataclasses.replace(cfg, seed=args.seed)
                run_session(cfg, args.out)
                print(f"wrote {args.out}/session.jsonl")
                return 0
            return cli_run(cfg_path, args.out)
        if args.cmd == "tune":
            return cli_tune(args.config, args.out)
        if args.cmd == "sweep":
            return cli_sweep(args.config, args.out)
        if args.cmd == "serve":
            return cli_serve(args.config, args.port, args.blind, args.out,
                             args.record, args.ui, args.speed)
        if args.cmd == "export":
            return cli_export(args.session_dir, args.out, args.plots)
        if args.cmd == "replay":
            return cli_replay(args.trace, args.out)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TelearmError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
