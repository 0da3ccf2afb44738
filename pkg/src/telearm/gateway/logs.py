"""Trial log persistence: trajectory CSV plus JSONL summaries.

Files are byte-deterministic for a given log: floats are written with
``repr`` (shortest round-trip form), JSON keys are sorted, and nothing
time- or path-dependent is recorded.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..harness import HitRecord, SessionSummary, TrialLog

CSV_COLUMNS = (
    ["tick", "t_s"]
    + [f"theta_H{k}" for k in range(1, 5)]
    + [f"theta_cmd{k}" for k in range(1, 5)]
    + [f"phi{k}" for k in range(1, 5)]
    + ["pW_robot_x", "pW_robot_y", "pW_robot_z"]
    + ["pW_human_x", "pW_human_y", "pW_human_z"]
    + ["mapping", "trial_id"]
)


def trial_csv_name(trial_id: int, log: TrialLog) -> str:
    return f"trial_{trial_id:03d}_{log.config.kind.value}_{log.mapping.value}.csv"


def write_trial_csv(path: str, log: TrialLog) -> None:
    rate = log.config.tick_rate
    with open(path, "w", newline="") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for row in log.samples:
            tick = int(row[0])
            cells = [str(tick), repr(tick / rate)]
            cells += [repr(float(v)) for v in row[1:19]]
            cells += [log.mapping.value, str(log.trial_id)]
            f.write(",".join(cells) + "\n")


def read_trial_csv(path: str) -> tuple[np.ndarray, str, int]:
    """Returns (samples array in the engine row layout, mapping, trial_id)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns in {path}")
        rows = []
        mapping = ""
        trial_id = 0
        for line in f:
            cells = line.rstrip("\n").split(",")
            rows.append([float(cells[0])] + [float(c) for c in cells[2:20]])
            mapping = cells[20]
            trial_id = int(cells[21])
    return np.array(rows), mapping, trial_id


def hit_to_dict(h: HitRecord) -> dict:
    return {
        "target_id": h.target_id,
        "light_tick": h.light_tick,
        "hit_tick": h.hit_tick,
        "reaction_time": h.reaction_time,
    }


def trial_summary_obj(log: TrialLog) -> dict:
    return {
        "type": "trial",
        "trial_id": log.trial_id,
        "kind": log.config.kind.value,
        "mapping": log.mapping.value,
        "seed": log.config.seed,
        "hits": [hit_to_dict(h) for h in log.hits],
        "first_hit_tick": log.first_hit_tick,
        "mean_reaction": log.mean_reaction if log.hits else None,
        "sd_reaction": log.sd_reaction if log.hits else None,
        "timeout": log.timeout,
    }


def write_session_jsonl(path: str, logs, summary: SessionSummary | None) -> None:
    with open(path, "w") as f:
        for log in logs:
            f.write(json.dumps(trial_summary_obj(log), sort_keys=True) + "\n")
        if summary is not None:
            f.write(
                json.dumps(
                    {
                        "type": "session",
                        "trials": len(summary.trials),
                        "stable_mean": summary.stable_mean,
                        "stable_k": summary.stable_k,
                        "used_all_trials": summary.used_all_trials,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_session_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def logs_from_dir(out_dir: str) -> list[tuple[np.ndarray, str, int]]:
    """All trial CSVs in a session directory, ordered by trial id."""
    names = sorted(n for n in os.listdir(out_dir) if n.startswith("trial_") and n.endswith(".csv"))
    return [read_trial_csv(os.path.join(out_dir, n)) for n in names]
