"""Synthetic human pilots and the numerical spatial IK used to aim at targets.

A pilot is a deterministic state machine producing a joint-pose stream at
the simulation tick rate.  It idles until a goal signal appears (a lit
target's calibrated pose), waits out a seeded reaction latency, then moves
to the goal along a componentwise minimum-jerk profile; when the signal
clears it returns to the session's home pose the same way.  Step pilots
jump instantly after the latency and exist for controller tuning.

The machine is event-driven: state changes only at observation edges and
at move/latency breakpoints, so a whole trajectory segment can be handed
to the batched simulation kernel as a handful of motion pieces while the
tick-by-tick ``pilot_step`` view remains available for live use.  Both
views evaluate the same pieces and therefore agree exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, Unreachable
from .kinematics import ArmGeometry, JointPose, wrist_point


class PilotKind(enum.Enum):
    STEP = "step"
    MINIMUM_JERK = "minimum_jerk"


class Phase(enum.Enum):
    IDLE = "idle"
    LATENT = "latent"
    MOVING = "moving"


@dataclass(frozen=True)
class PilotParams:
    kind: PilotKind = PilotKind.MINIMUM_JERK
    latency_mean: float = 0.25
    latency_sd: float = 0.03
    move_duration: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.latency_mean <= 0.0:
            raise ValueError("latency_mean must be positive")
        if self.latency_sd < 0.0:
            raise ValueError("latency_sd must be >= 0")
        if self.move_duration <= 0.0:
            raise ValueError("move_duration must be positive")


@dataclass(frozen=True)
class MotionPiece:
    """One segment of pilot motion: hold ``pose_from`` before ``move_start``,
    blend to ``pose_to`` over ``move_ticks``, hold after.  Valid for ticks up
    to ``valid_to`` inclusive, assuming no observation edge in between."""

    pose_from: JointPose
    pose_to: JointPose
    move_start: int
    move_ticks: int
    valid_to: int


def quintic_blend(s: float) -> float:
    """Minimum-jerk position blend 10s^3 - 15s^4 + 6s^5 on s in [0, 1]."""
    s2 = s * s
    s3 = s2 * s
    return s3 * (10.0 - 15.0 * s + 6.0 * s2)


def eval_piece(
    pose_from: JointPose, pose_to: JointPose, move_start: int, move_ticks: int, tick: int
) -> JointPose:
    if tick < move_start:
        return pose_from
    if tick >= move_start + move_ticks:
        return pose_to
    s = (tick - move_start) / move_ticks
    f = quintic_blend(s)
    a = pose_from.as_tuple()
    b = pose_to.as_tuple()
    return JointPose(*(a[k] + (b[k] - a[k]) * f for k in range(4)))


def minimum_jerk(
    theta_start: JointPose, theta_goal: JointPose, duration: float, t: float
) -> JointPose:
    """Componentwise minimum-jerk interpolation at time ``t`` of ``duration``."""
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if not 0.0 <= t <= duration:
        raise ValueError("t must lie in [0, duration]")
    f = quintic_blend(t / duration)
    a = theta_start.as_tuple()
    b = theta_goal.as_tuple()
    return JointPose(*(a[k] + (b[k] - a[k]) * f for k in range(4)))


def draw_latency_ticks(rng: np.random.Generator, params: PilotParams, tick_rate: int) -> int:
    """Reaction latency in ticks, Normal(mean, sd) truncated at zero."""
    x = -1.0
    for _ in range(100):
        x = float(rng.normal(params.latency_mean, params.latency_sd))
        if x >= 0.0:
            break
    if x < 0.0:
        x = 0.0
    return int(round(x * tick_rate))


class PilotState:
    """Mutable pilot state machine; advance with observe()/pilot_step().

    Phase transitions follow Idle -> Latent -> Moving -> Idle.  A goal that
    arrives mid-move is queued and begins after the current move completes
    and the latency window has elapsed.  The seeded generator is part of the
    state; a fixed seed reproduces the trajectory exactly.
    """

    __slots__ = (
        "params", "home", "tick_rate", "rng", "phase", "phase_start_tick",
        "pose", "move_from", "move_goal", "move_start", "move_end",
        "pending_goal", "react_tick", "last_observation", "move_ticks",
    )

    def __init__(self, params: PilotParams, home: JointPose, tick_rate: int, start_tick: int = 0):
        self.params = params
        self.home = home
        self.tick_rate = tick_rate
        self.rng = np.random.Generator(np.random.PCG64(params.seed))
        self.phase = Phase.IDLE
        self.phase_start_tick = start_tick
        self.pose = home
        self.move_from = home
        self.move_goal = home
        self.move_start = start_tick
        self.move_end = start_tick
        self.pending_goal: JointPose | None = None
        self.react_tick = start_tick
        self.last_observation: JointPose | None = None
        self.move_ticks = max(1, int(round(params.move_duration * tick_rate)))

    # -- event interface ----------------------------------------------------

    def observe(self, observation: JointPose | None, tick: int) -> None:
        """Register the goal signal active at ``tick`` (None = no lit target).

        Edges (signal changes) draw a reaction latency and queue a move to
        the new goal, or back home when the signal clears.
        """
        self._advance(tick)
        if observation == self.last_observation:
            return
        self.last_observation = observation
        goal = observation if observation is not None else self.home
        self.pending_goal = goal
        self.react_tick = tick + draw_latency_ticks(self.rng, self.params, self.tick_rate)
        if self.phase is Phase.IDLE:
            self.phase = Phase.LATENT
            self.phase_start_tick = tick
        self._advance(tick)

    def _advance(self, tick: int) -> None:
        while True:
            if self.phase is Phase.MOVING:
                if tick < self.move_end:
                    return
                self.pose = self.move_goal
                self.phase = Phase.IDLE
                self.phase_start_tick = self.move_end
                if self.pending_goal is not None:
                    self.phase = Phase.LATENT
                continue
            if self.phase is Phase.LATENT:
                start = max(self.react_tick, self.phase_start_tick)
                if tick < start:
                    return
                self._begin_move(start)
                continue
            return

    def _begin_move(self, start: int) -> None:
        goal = self.pending_goal
        self.pending_goal = None
        self.move_from = self.pose
        self.move_goal = goal
        self.move_start = start
        if self.params.kind is PilotKind.STEP:
            self.move_end = start
            self.pose = goal
            self.phase = Phase.IDLE
            self.phase_start_tick = start
        else:
            self.move_end = start + self.move_ticks
            self.phase = Phase.MOVING
            self.phase_start_tick = start

    # -- trajectory views ---------------------------------------------------

    def pose_at(self, tick: int) -> JointPose:
        """Pose at ``tick`` assuming no observation edge before it."""
        if self.phase is Phase.MOVING:
            if tick < self.move_end:
                return eval_piece(
                    self.move_from, self.move_goal, self.move_start,
                    self.move_end - self.move_start, tick,
                )
            base_pose, base_tick = self.move_goal, self.move_end
        else:
            base_pose, base_tick = self.pose, self.phase_start_tick
        if self.pending_goal is not None:
            start = max(self.react_tick, base_tick)
            ticks = 0 if self.params.kind is PilotKind.STEP else self.move_ticks
            return eval_piece(base_pose, self.pending_goal, start, ticks, tick)
        return base_pose

    def plan_through(self, until_tick: int) -> list[MotionPiece]:
        """Motion pieces covering ticks up to ``until_tick`` inclusive,
        assuming no observation edge before then.  Does not mutate state."""
        pieces: list[MotionPiece] = []
        if self.phase is Phase.MOVING:
            if self.move_end >= until_tick:
                return [
                    MotionPiece(
                        self.move_from, self.move_goal, self.move_start,
                        self.move_end - self.move_start, until_tick,
                    )
                ]
            pieces.append(
                MotionPiece(
                    self.move_from, self.move_goal, self.move_start,
                    self.move_end - self.move_start, self.move_end,
                )
            )
            base_pose, base_tick = self.move_goal, self.move_end
        else:
            base_pose, base_tick = self.pose, self.phase_start_tick
        if self.pending_goal is not None:
            start = max(self.react_tick, base_tick)
            ticks = 0 if self.params.kind is PilotKind.STEP else self.move_ticks
            pieces.append(MotionPiece(base_pose, self.pending_goal, start, ticks, until_tick))
        else:
            pieces.append(MotionPiece(base_pose, base_pose, base_tick, 0, until_tick))
        return pieces


def pilot_step(
    state: PilotState, params: PilotParams, observation: JointPose | None, tick: int
) -> tuple[JointPose, PilotState]:
    """Tick-level pilot interface: register the observation, return the pose."""
    if params is not state.params:
        raise ValueError("params must be the state's own parameter set")
    state.observe(observation, tick)
    return state.pose_at(tick), state


# ---------------------------------------------------------------------------
# Spatial IK (damped least squares on the wrist-position Jacobian).
# ---------------------------------------------------------------------------


def wrist_jacobian(g: ArmGeometry, q: np.ndarray) -> np.ndarray:
    """3x4 Jacobian of the inertial wrist position w.r.t. the joint vector."""
    t1, t2, t3, t4 = q
    c1, s1 = math.cos(t1), math.sin(t1)
    c2, s2 = math.cos(t2), math.sin(t2)
    s3, c3 = math.sin(t3), math.cos(t3)
    s34, c34 = math.sin(t3 + t4), math.cos(t3 + t4)
    ut = g.l2 * s3 + g.l3 * s34  # in-plane swing coordinate
    uz = -(g.l1 + g.l2 * c3 + g.l3 * c34)
    # World directions of the local workplane axes.
    rt = (c1, s1, 0.0)
    rz = (-s1 * s2, c1 * s2, c2)
    dt3 = g.l2 * c3 + g.l3 * c34
    dz3 = ut
    dt4 = g.l3 * c34
    dz4 = g.l3 * s34
    j = np.empty((3, 4))
    j[:, 0] = (-s1 * ut - c1 * s2 * uz, c1 * ut - s1 * s2 * uz, 0.0)
    j[:, 1] = (-s1 * c2 * uz, c1 * c2 * uz, -s2 * uz)
    j[:, 2] = (rt[0] * dt3 + rz[0] * dz3, rt[1] * dt3 + rz[1] * dz3, rt[2] * dt3 + rz[2] * dz3)
    j[:, 3] = (rt[0] * dt4 + rz[0] * dz4, rt[1] * dt4 + rz[1] * dz4, rt[2] * dt4 + rz[2] * dz4)
    return j


def ik_spatial(
    g: ArmGeometry,
    target,
    seed_pose: JointPose,
    tol: float = 1e-4,
    max_iters: int = 200,
    damping: float = 0.01,
) -> JointPose:
    """Solve for a joint pose placing the wrist at ``target`` (3-vector, m).

    Damped-least-squares iteration from ``seed_pose``; the redundancy is
    resolved by the minimum-norm update, so nearby seeds give nearby
    solutions.  Joints with degenerate limit intervals (lo == hi) are held
    frozen.  Raises Unreachable for targets beyond the arm's total length
    and NoConvergence when the iteration cap is hit.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (3,):
        raise ValueError("target must be a 3-vector")
    if float(np.linalg.norm(target)) > g.total_length + 1e-12:
        raise Unreachable(
            f"target at {float(np.linalg.norm(target)):.4f} m exceeds total arm length "
            f"{g.total_length:.4f} m"
        )
    lo = np.array([iv[0] for iv in g.limits])
    hi = np.array([iv[1] for iv in g.limits])
    frozen = lo == hi
    q = np.clip(seed_pose.as_array(), lo, hi)
    lam2 = damping * damping
    eye3 = np.eye(3)
    for _ in range(max_iters):
        p = np.array(wrist_point(g.l1, g.l2, g.l3, q[0], q[1], q[2], q[3]))
        err = target - p
        if float(np.linalg.norm(err)) < tol:
            return JointPose(*q)
        j = wrist_jacobian(g, q)
        if frozen.any():
            j[:, frozen] = 0.0
        w = np.linalg.solve(j @ j.T + lam2 * eye3, err)
        q = np.clip(q + j.T @ w, lo, hi)
    raise NoConvergence(f"spatial IK did not reach {tol} m in {max_iters} iterations")
