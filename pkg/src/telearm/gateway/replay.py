"""Headless re-execution of a recorded live session.

A trace file is one JSON header line (protocol, resolved config, final
tick) followed by one line per applied message, each carrying the tick it
was applied at.  Replaying feeds the same messages at the same ticks into a
fresh SimSession, which reproduces the live physics and trial logs exactly;
the wall clock never enters the simulation.
"""

from __future__ import annotations

import json

from .config import load_config_dict
from .service import SimSession


def read_trace(path: str) -> tuple[dict, list[dict]]:
    with open(path) as f:
        header = json.loads(f.readline())
        entries = [json.loads(line) for line in f if line.strip()]
    return header, entries


def replay_session(trace_path: str) -> SimSession:
    header, entries = read_trace(trace_path)
    cfg = load_config_dict(header["config"])
    session = SimSession(cfg, record=False)
    for entry in entries:
        tick = entry["tick"]
        while session.tick < tick - 1:
            session.step()
        session.apply(entry["msg"], tick)
    final = header.get("final_tick", session.tick)
    while session.tick < final:
        session.step()
    return session


def replay_trace(trace_path: str, out_dir: str) -> SimSession:
    session = replay_session(trace_path)
    session.save_outputs(out_dir, None)
    return session
