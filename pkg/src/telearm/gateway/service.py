"""Live piloting service: one authoritative simulation loop, many viewers.

The simulation advances on a dedicated thread at the configured tick rate
(wall-clock paced, with catch-up batching).  Client messages are queued and
drained once per wakeup; within a batch the last pilot_input wins.  State
flows out as immutable JSON snapshots at the broadcast rate through
per-client drop-oldest mailboxes, so a slow client skips frames but never
stalls the loop.

Wire protocol (text frames over a WebSocket, ``protocol: 1``):

  client -> server
    {"type": "pilot_input", "ee_frontal": [y, z], "depth": x}
    {"type": "pilot_input", "pose": [t1, t2, t3, t4]}
    {"type": "set_mapping", "mode": "joint"|"task"|"toggle", "blind": bool?}
    {"type": "trial_control", "action": "start", "kind": "seq"|"rxns"|"rxnm", "seed": int}
    {"type": "trial_control", "action": "stop"}
    {"type": "set_config_overrides", "max_joint_speed": float?}

  server -> client
    {"type": "welcome", "role": "pilot"|"observer", "protocol": 1, "config": {...}}
    {"type": "snapshot", ...}   (mapping reads "hidden" while blind mode is on)
    {"type": "event", "kind": "light"|"hit"|"trial_end"|"trial_aborted"|"error", ...}

Malformed frames close the offending client; a second pilot is accepted as
an observer.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import os
import threading
import time
from collections import deque

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .._core import initial_row, initial_state, mode_code, pack_params, step_tick
from ..errors import NoConvergence, PortBusy, Unreachable
from ..harness import TrialConfig, TrialDirector, TrialKind, TrialLog, forward_arm
from ..kinematics import JointPose, clamp
from ..pilots import ik_spatial
from ..retarget import MappingMode, retarget
from . import logs as logio
from .config import SessionConfig, config_to_dict

log = logging.getLogger("telearm.serve")

PROTOCOL_VERSION = 1
MAX_BATCH_TICKS = 64

CLIENT_MESSAGE_TYPES = {"pilot_input", "set_mapping", "trial_control", "set_config_overrides"}
PILOT_ONLY_TYPES = {"pilot_input", "set_mapping", "trial_control", "set_config_overrides"}


class SimSession:
    """Authoritative simulation state, advanced tick by tick.

    Identical message traces applied at identical ticks reproduce identical
    physics and trial logs, which is what the replay path exploits.
    """

    def __init__(self, cfg: SessionConfig, record: bool = False):
        self.cfg = cfg
        self.board = cfg.board()
        self.dt = 1.0 / cfg.tick_rate
        self.log_every = cfg.tick_rate // cfg.log_rate
        self.params = pack_params(cfg.human, cfg.robot, cfg.gains, cfg.plant, self.dt)
        self.mapping = cfg.plan[0].mapping if cfg.plan else MappingMode.JOINT
        self.blind = cfg.serve.blind
        self.max_joint_speed = cfg.serve.max_joint_speed
        self.tick = 0
        self.theta_h = cfg.home_pose.as_tuple()
        self.theta_target = cfg.home_pose.as_tuple()
        cmd0, _ = retarget(cfg.home_pose, self.mapping, cfg.human, cfg.robot)
        self.state = initial_state(cmd0)
        self.last_row = initial_row(cfg.home_pose, self.mapping, cfg.human, cfg.robot, self.state, 0)
        self.director: TrialDirector | None = None
        self.trial_rows: list[np.ndarray] = []
        self.trial_start_tick = 0
        self.trial_logs: list[TrialLog] = []
        self.next_trial_id = 0
        self.last_reaction: float | None = None
        self.trace: list[dict] | None = [] if record else None
        self.max_lag_ticks = 0.0

    # -- message handling ---------------------------------------------------

    def apply(self, msg: dict, tick: int) -> list[dict]:
        """Apply one client message as of ``tick`` (the next tick to step)."""
        if self.trace is not None:
            self.trace.append({"tick": tick, "msg": msg})
        kind = msg.get("type")
        if kind == "pilot_input":
            return self._apply_pilot_input(msg)
        if kind == "set_mapping":
            return self._apply_set_mapping(msg)
        if kind == "trial_control":
            return self._apply_trial_control(msg, tick)
        if kind == "set_config_overrides":
            if "max_joint_speed" in msg:
                v = float(msg["max_joint_speed"])
                if math.isfinite(v) and v > 0:
                    self.max_joint_speed = v
            return []
        return [_error_event(f"unknown message type {kind!r}")]

    def _apply_pilot_input(self, msg: dict) -> list[dict]:
        cfg = self.cfg
        if "pose" in msg:
            vals = msg["pose"]
            if not _finite_list(vals, 4):
                return [_error_event("pose must be four finite numbers")]
            pose = JointPose(*(float(v) for v in vals)).clamped(cfg.human)
            self.theta_target = pose.as_tuple()
            return []
        ee = msg.get("ee_frontal")
        if not _finite_list(ee, 2):
            return [_error_event("ee_frontal must be [y, z]")]
        depth = msg.get("depth", 0.0)
        if not isinstance(depth, (int, float)) or not math.isfinite(depth):
            return [_error_event("depth must be a finite number")]
        point = np.array([float(depth), float(ee[0]), float(ee[1])])
        reach = cfg.human.total_length
        norm = float(np.linalg.norm(point))
        if norm > 0.98 * reach:
            point *= (0.98 * reach) / norm
        try:
            pose = ik_spatial(cfg.human, point, JointPose(*self.theta_h))
        except (Unreachable, NoConvergence):
            return [_error_event("pilot input unreachable")]
        self.theta_target = pose.as_tuple()
        return []

    def _apply_set_mapping(self, msg: dict) -> list[dict]:
        mode = msg.get("mode")
        if mode == "toggle":
            self.mapping = self.mapping.toggled()
        elif mode in ("joint", "task"):
            self.mapping = MappingMode(mode)
        elif mode is not None:
            return [_error_event(f"unknown mapping {mode!r}")]
        if "blind" in msg:
            self.blind = bool(msg["blind"])
        return []

    def _apply_trial_control(self, msg: dict, tick: int) -> list[dict]:
        action = msg.get("action")
        if action == "start":
            if self.director is not None and not self.director.finished:
                return [_error_event("a trial is already running")]
            try:
                kind = TrialKind(msg.get("kind", "rxns"))
            except ValueError:
                return [_error_event(f"unknown trial kind {msg.get('kind')!r}")]
            seed = msg.get("seed", 0)
            if not isinstance(seed, int):
                return [_error_event("seed must be an integer")]
            tc = TrialConfig(kind, seed=seed, tick_rate=self.cfg.tick_rate, log_rate=self.cfg.log_rate)
            self.director = TrialDirector(tc, self.board)
            self.director.start(tick - 1)
            self.trial_rows = []
            self.trial_start_tick = tick
            self.last_reaction = None
            return [{"type": "event", "kind": "trial_start", "tick": tick - 1,
                     "trial_kind": kind.value, "seed": seed}]
        if action == "stop":
            if self.director is None:
                return [_error_event("no trial to stop")]
            self.director = None
            self.trial_rows = []
            return [{"type": "event", "kind": "trial_aborted", "tick": tick - 1}]
        return [_error_event(f"unknown trial action {action!r}")]

    # -- stepping -----------------------------------------------------------

    def step(self) -> list[dict]:
        """Advance one tick; returns events raised at this tick."""
        self.tick += 1
        h = self.theta_h
        tgt = self.theta_target
        cap = self.max_joint_speed * self.dt
        self.theta_h = tuple(
            h[k] + clamp(tgt[k] - h[k], -cap, cap) for k in range(4)
        )
        row = step_tick(self.state, self.params, mode_code(self.mapping), self.theta_h, self.tick)
        self.last_row = row
        events: list[dict] = []
        if self.director is not None and not self.director.finished:
            if self.tick % self.log_every == 0:
                self.trial_rows.append(row.copy())
            pw = row[13:16]
            for ev in self.director.poll(self.tick, pw):
                if ev[0] == "light":
                    events.append({"type": "event", "kind": "light", "tick": self.tick,
                                   "target": ev[1]})
                elif ev[0] == "hit":
                    rec = ev[1]
                    payload = {"type": "event", "kind": "hit", "tick": self.tick,
                               "target": ev[2], "index": self.director.hits_done}
                    if rec is not None:
                        payload["reaction_time"] = rec.reaction_time
                        self.last_reaction = rec.reaction_time
                    events.append(payload)
                elif ev[0] == "trial_end":
                    events.append(self._finish_trial())
        return events

    def _finish_trial(self) -> dict:
        d = self.director
        samples = (
            np.array(self.trial_rows)
            if self.trial_rows
            else np.empty((0, self.last_row.shape[0]))
        )
        tlog = TrialLog(
            config=d.cfg,
            mapping=self.mapping,
            trial_id=self.next_trial_id,
            hits=tuple(d.records),
            first_hit_tick=d.first_hit_tick,
            samples=samples,
            timeout=False,
        )
        self.trial_logs.append(tlog)
        self.next_trial_id += 1
        self.director = None
        self.trial_rows = []
        rts = [h.reaction_time for h in tlog.hits]
        return {
            "type": "event",
            "kind": "trial_end",
            "tick": self.tick,
            "trial_id": tlog.trial_id,
            "reaction_times": rts,
            "mean": tlog.mean_reaction if rts else None,
            "sd": tlog.sd_reaction if rts else None,
        }

    # -- output -------------------------------------------------------------

    def snapshot(self) -> dict:
        row = self.last_row
        cfg = self.cfg
        theta_r = _theta_from_phi(row[9:13])
        human_pts = forward_arm(cfg.human, JointPose(*self.theta_h))
        robot_pts = forward_arm(cfg.robot, JointPose(*theta_r))
        d = self.director
        lit = d.lit_target(self.tick) if d is not None and d.started and not d.finished else None
        trial = None
        if d is not None and not d.finished:
            rts = [r.reaction_time for r in d.records]
            trial = {
                "active": True,
                "kind": d.cfg.kind.value,
                "hits_done": d.hits_done,
                "hits_required": d.cfg.required_hits,
                "mean": float(np.mean(rts)) if rts else None,
                "sd": float(np.std(rts)) if rts else None,
            }
        return {
            "type": "snapshot",
            "protocol": PROTOCOL_VERSION,
            "tick": self.tick,
            "mapping": "hidden" if self.blind else self.mapping.value,
            "blind": self.blind,
            "theta_H": list(self.theta_h),
            "theta_cmd": row[5:9].tolist(),
            "phi": row[9:13].tolist(),
            "pw_robot": row[13:16].tolist(),
            "pw_human": row[16:19].tolist(),
            "arm_human": _arm_points(human_pts),
            "arm_robot": _arm_points(robot_pts),
            "targets": [
                {"id": t.id, "center": list(t.center), "radius": t.radius, "lit": t.id == lit}
                for t in self.board.targets
            ],
            "trial": trial,
            "last_reaction": self.last_reaction,
        }

    def save_outputs(self, out_dir: str | None, trace_path: str | None) -> None:
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            for tlog in self.trial_logs:
                logio.write_trial_csv(
                    os.path.join(out_dir, logio.trial_csv_name(tlog.trial_id, tlog)), tlog
                )
            logio.write_session_jsonl(os.path.join(out_dir, "session.jsonl"), self.trial_logs, None)
        if trace_path and self.trace is not None:
            with open(trace_path, "w") as f:
                f.write(json.dumps({"protocol": PROTOCOL_VERSION,
                                    "config": config_to_dict(self.cfg),
                                    "final_tick": self.tick}, sort_keys=True) + "\n")
                for entry in self.trace:
                    f.write(json.dumps(entry, sort_keys=True) + "\n")


def _theta_from_phi(phi) -> tuple[float, float, float, float]:
    return (
        0.5 * (phi[0] + phi[1]),
        0.5 * (phi[0] - phi[1]),
        float(phi[2]),
        float(phi[3] - phi[2]),
    )


def _arm_points(pts) -> dict:
    return {"d": pts.p_d.tolist(), "e": pts.p_e.tolist(), "w": pts.p_w.tolist()}


def _error_event(message: str) -> dict:
    return {"type": "event", "kind": "error", "message": message}


def _finite_list(v, n) -> bool:
    return (
        isinstance(v, list)
        and len(v) == n
        and all(isinstance(x, (int, float)) and math.isfinite(x) for x in v)
    )


class Mailbox:
    """Per-client outbox: events are queued in order and always delivered;
    snapshots occupy a latest-wins slot, so a slow reader skips frames."""

    def __init__(self):
        self.events: deque = deque()
        self.latest_snapshot: dict | None = None
        self.wakeup = asyncio.Event()

    def put(self, obj: dict) -> None:
        if obj.get("type") == "snapshot":
            self.latest_snapshot = obj
        else:
            self.events.append(obj)
        self.wakeup.set()

    async def get_batch(self) -> list[dict]:
        await self.wakeup.wait()
        self.wakeup.clear()
        batch = list(self.events)
        self.events.clear()
        if self.latest_snapshot is not None:
            batch.append(self.latest_snapshot)
            self.latest_snapshot = None
        return batch


class Hub:
    """Thread-safe message ingress and state fan-out."""

    def __init__(self):
        self.inbox: deque = deque()
        self.clients: dict[int, Mailbox] = {}
        self.pilot_id: int | None = None
        self._next_id = 0
        self.loop: asyncio.AbstractEventLoop | None = None

    def register(self, mailbox: Mailbox) -> tuple[int, str]:
        cid = self._next_id
        self._next_id += 1
        self.clients[cid] = mailbox
        if self.pilot_id is None:
            self.pilot_id = cid
            return cid, "pilot"
        return cid, "observer"

    def unregister(self, cid: int) -> None:
        self.clients.pop(cid, None)
        if self.pilot_id == cid:
            self.pilot_id = None

    def submit(self, msg: dict) -> None:
        self.inbox.append(msg)

    def drain(self) -> list[dict]:
        out = []
        while True:
            try:
                out.append(self.inbox.popleft())
            except IndexError:
                break
        # latest-wins for pilot motion within one drain
        last_input = None
        for m in out:
            if m.get("type") == "pilot_input":
                last_input = m
        if last_input is None:
            return out
        return [m for m in out if m.get("type") != "pilot_input" or m is last_input]

    def publish(self, obj: dict) -> None:
        """Called from the sim thread; never blocks on client I/O."""
        loop = self.loop
        if loop is None or loop.is_closed():
            return
        loop.call_soon_threadsafe(self._fan_out, obj)

    def _fan_out(self, obj: dict) -> None:
        for box in self.clients.values():
            box.put(obj)


class SimLoop:
    """Wall-clock paced driver for a SimSession on its own thread."""

    def __init__(self, session: SimSession, hub: Hub, speed: float = 1.0):
        self.session = session
        self.hub = hub
        self.speed = speed
        self.stop_event = threading.Event()
        self.thread = threading.Thread(target=self._run, name="telearm-sim", daemon=True)
        cfg = session.cfg
        self.broadcast_div = max(1, cfg.tick_rate // cfg.serve.broadcast_hz)

    def start(self) -> None:
        self.thread.start()

    def stop(self) -> None:
        self.stop_event.set()
        self.thread.join(timeout=5.0)

    def _run(self) -> None:
        session = self.session
        hub = self.hub
        tick_rate = session.cfg.tick_rate
        wall_dt = 1.0 / (tick_rate * self.speed)
        t0 = time.perf_counter()
        while not self.stop_event.is_set():
            now = time.perf_counter()
            target = int((now - t0) / wall_dt)
            if target <= session.tick:
                time.sleep(min(wall_dt, 0.001))
                continue
            lag = target - session.tick
            target = min(target, session.tick + MAX_BATCH_TICKS)
            for msg in hub.drain():
                for ev in session.apply(msg, session.tick + 1):
                    hub.publish(ev)
            while session.tick < target:
                for ev in session.step():
                    hub.publish(ev)
                if session.tick % self.broadcast_div == 0:
                    hub.publish(session.snapshot())
            if lag > MAX_BATCH_TICKS:
                # falling behind wall clock; track the worst case for the soak check
                session.max_lag_ticks = max(session.max_lag_ticks, lag)


def build_app(cfg: SessionConfig, *, blind: bool | None = None, record: bool = False,
              out_dir: str | None = None, record_path: str | None = None,
              ui_dir: str | None = None, speed: float | None = None):
    """FastAPI app plus its simulation session and loop (exposed for tests)."""
    if blind is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, serve=dataclasses.replace(cfg.serve, blind=blind))
    session = SimSession(cfg, record=record or record_path is not None)
    hub = Hub()
    loop_driver = SimLoop(session, hub, speed=speed if speed is not None else cfg.serve.speed)
    app = FastAPI()
    app.state.session = session
    app.state.hub = hub
    app.state.sim_loop = loop_driver

    @app.on_event("startup")
    async def _startup():
        hub.loop = asyncio.get_running_loop()
        loop_driver.start()

    @app.on_event("shutdown")
    async def _shutdown():
        loop_driver.stop()
        session.save_outputs(out_dir, record_path)

    welcome_config = {
        "human": {"l1": cfg.human.l1, "l2": cfg.human.l2, "l3": cfg.human.l3,
                  "arm_length": cfg.human.arm_length},
        "robot": {"l1": cfg.robot.l1, "l2": cfg.robot.l2, "l3": cfg.robot.l3,
                  "arm_length": cfg.robot.arm_length},
        "tick_rate": cfg.tick_rate,
        "board": [{"id": t.id, "center": list(t.center), "radius": t.radius}
                  for t in session.board.targets],
        "home_pose": list(cfg.home_pose.as_tuple()),
        "max_joint_speed": cfg.serve.max_joint_speed,
    }

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        mailbox = Mailbox()
        cid, role = hub.register(mailbox)
        await websocket.send_text(json.dumps(
            {"type": "welcome", "role": role, "protocol": PROTOCOL_VERSION,
             "config": welcome_config}
        ))

        async def pump():
            while True:
                for obj in await mailbox.get_batch():
                    await websocket.send_text(json.dumps(obj))

        sender = asyncio.create_task(pump())
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    await websocket.close(code=1008, reason="malformed JSON")
                    break
                if not isinstance(msg, dict) or msg.get("type") not in CLIENT_MESSAGE_TYPES:
                    await websocket.close(code=1008, reason="unknown message type")
                    break
                if role != "pilot" and msg["type"] in PILOT_ONLY_TYPES:
                    await websocket.send_text(json.dumps(
                        _error_event("observers cannot send control messages")
                    ))
                    continue
                hub.submit(msg)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            hub.unregister(cid)

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve_forever(cfg: SessionConfig, *, port: int | None = None, blind: bool | None = None,
                  out_dir: str | None = None, record: str | None = None,
                  ui_dir: str | None = None, speed: float | None = None) -> None:
    import uvicorn

    app = build_app(cfg, blind=blind, out_dir=out_dir, record_path=record,
                    ui_dir=ui_dir, speed=speed)
    use_port = port if port is not None else cfg.serve.port
    config = uvicorn.Config(app, host="127.0.0.1", port=use_port, log_level="warning")
    server = uvicorn.Server(config)
    try:
        server.run()
    except SystemExit:
        raise
    except OSError as e:
        if "address already in use" in str(e).lower():
            raise PortBusy(f"port {use_port} is already bound") from e
        raise
