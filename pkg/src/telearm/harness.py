"""Reaction-test protocol: target board, trials, statistics, trajectory analysis.

Three tests are supported.  In a sequential trial (SEQ) the pilot strikes
the top three targets left to right and the bottom three right to left as
fast as possible; the five intervals between the six hits are the reaction
times.  In the single-target test (RXN_S) the top middle target lights up
at a seeded random delay of 0.5-1 s after the previous hit; in the
multi-target test (RXN_M) a uniformly drawn target lights up instead.  Both
reaction tests run ten hits per trial, measuring light-up to hit, with the
pilot returning to its home pose between hits.

Hits are proximity checks: the trial registers a hit when the robot wrist
enters the closed ball around the active target's center.  Everything is
driven from explicit seeds, so a trial is a pure function of its
configuration and replays bit-identically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._core import initial_row, initial_state, mode_code, pack_params, run_piece
from ._core.params import N_ROW
from .errors import DuplicateCenter, TrialTimeout
from .kinematics import ArmGeometry, JointPose, forward_arm
from .pilots import PilotParams, PilotState
from .retarget import MappingMode, map_task, retarget

#: Strike order of the sequential test: top row left to right, bottom row
#: right to left (target ids 0-2 top, 3-5 bottom, each left to right).
SEQ_ORDER = (0, 1, 2, 5, 4, 3)


class TrialKind(enum.Enum):
    SEQ = "seq"
    RXN_S = "rxns"
    RXN_M = "rxnm"


@dataclass(frozen=True)
class Target:
    id: int
    center: tuple[float, float, float]
    radius: float
    lit: bool = False

    def center_array(self) -> np.ndarray:
        return np.array(self.center)


@dataclass(frozen=True)
class TargetBoard:
    targets: tuple[Target, ...]
    touch_poses: tuple[JointPose, ...]
    radius: float


def calibrate_board(
    robot: ArmGeometry, touch_poses, radius: float
) -> TargetBoard:
    """Record target centers from six touch poses of the robot arm.

    Each center is the wrist position at the corresponding pose; ``radius``
    becomes the proximity-trigger threshold.  Raises DuplicateCenter when
    two centers fall within one radius of each other.
    """
    poses = tuple(touch_poses)
    if len(poses) != 6:
        raise ValueError("a board is calibrated from exactly six touch poses")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    centers = []
    for pose in poses:
        if not pose.within_limits(robot, tol=1e-12):
            raise ValueError(f"touch pose {pose} violates robot joint limits")
        centers.append(tuple(forward_arm(robot, pose).p_w))
    for i in range(6):
        for j in range(i + 1, 6):
            d = math.dist(centers[i], centers[j])
            if d < radius:
                raise DuplicateCenter(
                    f"targets {i} and {j} coincide within the trigger radius ({d:.4f} m)"
                )
    targets = tuple(Target(i, centers[i], radius) for i in range(6))
    return TargetBoard(targets, poses, radius)


def check_hit(p_w, target: Target) -> bool:
    """True iff the wrist is inside the target's closed proximity ball."""
    c = target.center
    dx = p_w[0] - c[0]
    dy = p_w[1] - c[1]
    dz = p_w[2] - c[2]
    return dx * dx + dy * dy + dz * dz <= target.radius * target.radius


@dataclass(frozen=True)
class TrialConfig:
    kind: TrialKind
    seed: int = 0
    hits_per_trial: int = 10
    light_delay: tuple[float, float] = (0.5, 1.0)
    tick_rate: int = 1000
    log_rate: int = 200

    def __post_init__(self):
        if self.kind in (TrialKind.RXN_S, TrialKind.RXN_M) and self.hits_per_trial != 10:
            raise ValueError("reaction trials contain exactly ten hits")
        lo, hi = self.light_delay
        if not 0.0 <= lo <= hi:
            raise ValueError("light_delay must be an ordered non-negative interval")
        if self.tick_rate <= 0 or self.log_rate <= 0:
            raise ValueError("rates must be positive")
        if self.tick_rate % self.log_rate != 0:
            raise ValueError("tick_rate must be an integer multiple of log_rate")

    @property
    def required_hits(self) -> int:
        return len(SEQ_ORDER) if self.kind is TrialKind.SEQ else self.hits_per_trial

    @property
    def log_every(self) -> int:
        return self.tick_rate // self.log_rate


@dataclass(frozen=True)
class HitRecord:
    target_id: int
    light_tick: int  # 0 for SEQ (timed from the previous hit instead)
    hit_tick: int
    reaction_time: float

    def __post_init__(self):
        if self.hit_tick <= self.light_tick:
            raise ValueError("hit_tick must exceed light_tick")
        if self.reaction_time <= 0.0:
            raise ValueError("reaction_time must be positive")


@dataclass(frozen=True)
class TrialLog:
    config: TrialConfig
    mapping: MappingMode
    trial_id: int
    hits: tuple[HitRecord, ...]
    first_hit_tick: int | None  # SEQ reference hit that opens the interval chain
    samples: np.ndarray  # (n, N_ROW): tick, theta_H, theta_cmd, phi, pw_robot, pw_human
    timeout: bool = False

    def reaction_times(self) -> list[float]:
        return [h.reaction_time for h in self.hits]

    @property
    def mean_reaction(self) -> float:
        return float(np.mean(self.reaction_times()))

    @property
    def sd_reaction(self) -> float:
        """Population standard deviation (divide by n)."""
        return float(np.std(self.reaction_times()))


class TrialDirector:
    """Light scheduling and hit recording for one trial.

    Deterministic given the trial seed: each cycle draws its light delay and
    then (RXN_M only) its target id, so identical hit ticks reproduce the
    schedule exactly whether the trial runs batched or tick by tick.
    """

    def __init__(self, cfg: TrialConfig, board: TargetBoard):
        self.cfg = cfg
        self.board = board
        self.rng = np.random.default_rng(cfg.seed)
        self.records: list[HitRecord] = []
        self.hits_done = 0
        self.prev_hit_tick: int | None = None
        self.first_hit_tick: int | None = None
        self.current_target: int | None = None
        self.light_tick = 0
        self.check_from = 0
        self.started = False
        self.finished = False

    def start(self, tick: int) -> None:
        self.started = True
        self._next_cycle(tick)

    def _next_cycle(self, tick: int) -> None:
        if self.cfg.kind is TrialKind.SEQ:
            self.current_target = SEQ_ORDER[self.hits_done]
            self.light_tick = 0
            self.check_from = tick + 1
            return
        lo, hi = self.cfg.light_delay
        delay_ticks = int(round(float(self.rng.uniform(lo, hi)) * self.cfg.tick_rate))
        if self.cfg.kind is TrialKind.RXN_M:
            self.current_target = int(self.rng.integers(0, 6))
        else:
            self.current_target = 1  # top middle
        self.light_tick = tick + delay_ticks
        self.check_from = self.light_tick + 1

    def register_hit(self, hit_tick: int) -> HitRecord | None:
        """Record the hit at ``hit_tick`` and schedule the next cycle.

        Returns the new record, or None for the SEQ trial's first hit, which
        only opens the interval chain.
        """
        rec = None
        if self.cfg.kind is TrialKind.SEQ:
            if self.prev_hit_tick is not None:
                rec = HitRecord(
                    self.current_target, 0, hit_tick,
                    (hit_tick - self.prev_hit_tick) / self.cfg.tick_rate,
                )
            else:
                self.first_hit_tick = hit_tick
            self.prev_hit_tick = hit_tick
        else:
            rec = HitRecord(
                self.current_target, self.light_tick, hit_tick,
                (hit_tick - self.light_tick) / self.cfg.tick_rate,
            )
        if rec is not None:
            self.records.append(rec)
        self.hits_done += 1
        if self.hits_done >= self.cfg.required_hits:
            self.finished = True
            self.current_target = None
        else:
            self._next_cycle(hit_tick)
        return rec

    def lit_target(self, tick: int) -> int | None:
        """Target to highlight at ``tick`` (SEQ shows the next one in order)."""
        if not self.started or self.finished:
            return None
        if self.cfg.kind is TrialKind.SEQ:
            return self.current_target
        return self.current_target if tick >= self.light_tick else None

    def poll(self, tick: int, p_w) -> list[tuple]:
        """Tick-level interface for live loops: returns event tuples among
        ("light", target_id), ("hit", record_or_None, target_id), ("trial_end",)."""
        events: list[tuple] = []
        if not self.started or self.finished:
            return events
        if self.cfg.kind is not TrialKind.SEQ and tick == self.light_tick:
            events.append(("light", self.current_target))
        if tick >= self.check_from and check_hit(p_w, self.board.targets[self.current_target]):
            target = self.current_target
            rec = self.register_hit(tick)
            events.append(("hit", rec, target))
            if self.finished:
                events.append(("trial_end",))
        return events


def pilot_goal_poses(
    board: TargetBoard,
    mapping: MappingMode,
    human: ArmGeometry,
    robot: ArmGeometry,
) -> tuple[JointPose, ...]:
    """Human poses that drive the robot wrist onto each target center.

    Under joint-space mapping the calibration touch poses serve directly;
    under task-space mapping they are inverted through the mapping (role
    swap: scale the robot workplane position back to the human's and solve
    the human's planar IK).  Each goal is verified to place the mapped robot
    wrist within the trigger radius.
    """
    goals = []
    for target, pose in zip(board.targets, board.touch_poses):
        if mapping is MappingMode.JOINT:
            goal = pose
        else:
            goal, _ = map_task(pose, human=robot, robot=human)
        if not goal.within_limits(human, tol=1e-9):
            raise ValueError(
                f"goal pose for target {target.id} violates human joint limits"
            )
        cmd, _ = retarget(goal, mapping, human, robot)
        p_w = forward_arm(robot, cmd).p_w
        err = math.dist(tuple(p_w), target.center)
        if err > board.radius:
            raise ValueError(
                f"target {target.id} unreachable under {mapping.value} mapping "
                f"(wrist misses center by {err:.4f} m)"
            )
        goals.append(goal)
    return tuple(goals)


def _drive(
    pilot: PilotState,
    state: np.ndarray,
    params: np.ndarray,
    mode: int,
    cur: int,
    until: int,
    target: Target | None,
    check_from: int,
    log_every: int,
    rows: list[np.ndarray],
    backend=None,
) -> tuple[int | None, int]:
    """Advance the engine over ticks (cur, until] along the pilot's plan.

    Returns (hit_tick or None, tick actually reached).
    """
    center = target.center if target is not None else None
    radius = target.radius if target is not None else 0.0
    for piece in pilot.plan_through(until):
        if piece.valid_to <= cur:
            continue
        end = min(piece.valid_to, until)
        buf = np.empty(((end - cur) // log_every + 2, N_ROW))
        last, hit, nrows = run_piece(
            state, params, mode,
            piece.pose_from.as_tuple(), piece.pose_to.as_tuple(),
            piece.move_start, piece.move_ticks,
            cur, end,
            target=center, radius=radius, check_from=check_from,
            log_every=log_every, out_log=buf, row0=0, backend=backend,
        )
        if nrows:
            rows.append(buf[:nrows].copy())
        cur = last
        if hit >= 0:
            return hit, cur
    return None, cur


def run_trial(
    cfg: TrialConfig,
    pilot_params: PilotParams,
    mapping: MappingMode,
    board: TargetBoard,
    human: ArmGeometry,
    robot: ArmGeometry,
    gains,
    plant_params,
    *,
    home_pose: JointPose,
    per_hit_timeout: float = 10.0,
    trial_id: int = 0,
    backend=None,
) -> TrialLog:
    """Run one full trial headless through the simulation kernel.

    The pipeline per tick is pilot -> mapping -> velocity filter -> actuator
    translation -> PD -> plant, with hit detection on the robot wrist and
    trajectory samples decimated to the log rate.  Deterministic given
    (cfg.seed, pilot_params.seed).  Raises TrialTimeout (with the partial,
    timeout-marked log attached) if any hit takes longer than
    ``per_hit_timeout`` seconds.
    """
    goals = pilot_goal_poses(board, mapping, human, robot)
    dt = 1.0 / cfg.tick_rate
    params = pack_params(human, robot, gains, plant_params, dt)
    mode = mode_code(mapping)
    cmd0, _ = retarget(home_pose, mapping, human, robot)
    state = initial_state(cmd0)
    pilot = PilotState(pilot_params, home_pose, cfg.tick_rate)
    rows = [initial_row(home_pose, mapping, human, robot, state, 0).reshape(1, N_ROW)]
    director = TrialDirector(cfg, board)
    director.start(0)
    cap_ticks = int(round(per_hit_timeout * cfg.tick_rate))
    log_every = cfg.log_every
    cur = 0
    timeout = False

    while not director.finished:
        target = board.targets[director.current_target]
        goal = goals[target.id]
        if cfg.kind is TrialKind.SEQ:
            pilot.observe(goal, cur)
            hit, cur = _drive(
                pilot, state, params, mode, cur, cur + cap_ticks,
                target, director.check_from, log_every, rows, backend,
            )
        else:
            light = director.light_tick
            if light - 1 > cur:
                _, cur = _drive(
                    pilot, state, params, mode, cur, light - 1,
                    None, 0, log_every, rows, backend,
                )
            pilot.observe(goal, light)
            hit, cur = _drive(
                pilot, state, params, mode, cur, light + cap_ticks,
                target, director.check_from, log_every, rows, backend,
            )
        if hit is None:
            timeout = True
            break
        director.register_hit(hit)
        if cfg.kind is not TrialKind.SEQ:
            pilot.observe(None, hit)

    samples = np.vstack(rows)
    log = TrialLog(
        config=cfg,
        mapping=mapping,
        trial_id=trial_id,
        hits=tuple(director.records),
        first_hit_tick=director.first_hit_tick,
        samples=samples,
        timeout=timeout,
    )
    if timeout:
        raise TrialTimeout(
            f"no hit on target {director.current_target} within {per_hit_timeout}s",
            log=log,
        )
    return log


# ---------------------------------------------------------------------------
# Statistics and trajectory analysis.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialStats:
    trial_id: int
    kind: TrialKind
    mapping: MappingMode
    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class SessionSummary:
    trials: tuple[TrialStats, ...]
    stable_mean: float
    stable_k: int
    used_all_trials: bool


def summarize(logs, stable_k: int = 10) -> SessionSummary:
    """Per-trial mean/sd of reaction times plus the stable mean.

    The stable mean averages the per-trial means over the last ``stable_k``
    trials; if fewer trials exist, all are used and the flag is set.
    """
    logs = list(logs)
    if not logs:
        raise ValueError("summarize requires at least one trial log")
    trials = tuple(
        TrialStats(
            log.trial_id, log.config.kind, log.mapping,
            len(log.hits), log.mean_reaction, log.sd_reaction,
        )
        for log in logs
    )
    used_all = stable_k > len(trials)
    k = min(stable_k, len(trials))
    stable = float(np.mean([t.mean for t in trials[-k:]]))
    return SessionSummary(trials, stable, k, used_all)


@dataclass(frozen=True)
class NondimensionalTrajectories:
    """Paired wrist paths normalized by each arm's length L = l2 + l3."""

    t_s: np.ndarray
    human_frontal: np.ndarray  # (n, 2): y/L_H, z/L_H
    human_sagittal: np.ndarray  # (n, 2): x/L_H, z/L_H
    robot_frontal: np.ndarray
    robot_sagittal: np.ndarray


def nondimensionalize(
    log: TrialLog, human: ArmGeometry, robot: ArmGeometry
) -> NondimensionalTrajectories:
    s = log.samples
    if s.shape[0] == 0:
        raise ValueError("trial log contains no trajectory samples")
    t_s = s[:, 0] / log.config.tick_rate
    pw_r = s[:, 13:16] / robot.arm_length
    pw_h = s[:, 16:19] / human.arm_length
    return NondimensionalTrajectories(
        t_s=t_s,
        human_frontal=pw_h[:, [1, 2]],
        human_sagittal=pw_h[:, [0, 2]],
        robot_frontal=pw_r[:, [1, 2]],
        robot_sagittal=pw_r[:, [0, 2]],
    )


def _principal_direction(points: np.ndarray) -> np.ndarray:
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, -1]  # eigenvector of the largest eigenvalue


def line_fit_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in degrees between the best-fit lines of two planar point sets."""
    ua = _principal_direction(a)
    ub = _principal_direction(b)
    c = abs(float(ua @ ub))
    return math.degrees(math.acos(min(1.0, c)))


def offset_sweep(
    theta2_level: float,
    mapping: MappingMode,
    human: ArmGeometry,
    robot: ArmGeometry,
    *,
    n_waypoints: int = 41,
    half_width_frac: float = 0.2,
    anchor_theta3: float = 1.2,
    anchor_theta4: float = 1.0,
) -> float:
    """Orientational offset (deg) between human and robot frontal paths.

    The human arm holds its shoulder roll near ``theta2_level`` and sweeps
    the wrist along a horizontal line at fixed depth, centered in front of
    the shoulder, solved waypoint by waypoint with the spatial IK (minimum-
    norm updates stand in for the human's redundancy resolution).  The robot
    follows through the chosen mapping, quasi-statically: actuation dynamics
    have no bearing on a path's orientation.  Returns the angle between the
    best-fit lines of the two nondimensional frontal trajectories.

    With the roll upright the sweep rides the shared yaw joint and both
    arms trace the same horizontal line; with the roll tilted, the elbow
    chain gains lateral leverage and the waypoints engage it, exposing the
    link-ratio mismatch as a tilted robot path.
    """
    from .pilots import ik_spatial

    lo2, hi2 = human.limits[1]
    if not lo2 <= theta2_level <= hi2:
        raise ValueError("theta2_level outside the human roll limits")

    anchor = JointPose(0.0, theta2_level, anchor_theta3, anchor_theta4)
    if not anchor.within_limits(human):
        raise ValueError("anchor pose outside human joint limits")
    p0 = forward_arm(human, anchor).p_w
    w = half_width_frac * human.arm_length
    ys = np.linspace(p0[1] - w, p0[1] + w, n_waypoints)

    mid = n_waypoints // 2
    poses: dict[int, JointPose] = {}
    for leg in (range(mid, -1, -1), range(mid + 1, n_waypoints)):
        seed = anchor if poses.get(mid) is None else poses[mid]
        for i in leg:
            q = ik_spatial(human, (p0[0], ys[i], p0[2]), seed, tol=1e-6)
            poses[i] = q
            seed = q

    human_pts = []
    robot_pts = []
    for i in range(n_waypoints):
        q = poses[i]
        cmd, _ = retarget(q, mapping, human, robot)
        hw = forward_arm(human, q).p_w
        rw = forward_arm(robot, cmd).p_w
        human_pts.append((hw[1] / human.arm_length, hw[2] / human.arm_length))
        robot_pts.append((rw[1] / robot.arm_length, rw[2] / robot.arm_length))
    return line_fit_angle_deg(np.array(human_pts), np.array(robot_pts))
