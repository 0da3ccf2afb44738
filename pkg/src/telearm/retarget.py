"""Teleoperation mappings from human joint poses to robot commands.

Two mappings are supported: joint-space (robot joints mirror the human's)
and hybrid task-space (shoulder yaw/roll mirrored, wrist position matched
in the workplane after scaling by the arm-length ratio L_R/L_H, then solved
with planar IK on the robot's elbow chain).  Both command streams feed a
first-order velocity approximator, a low-pass-filtered finite difference
with a 3 Hz cutoff by default.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .kinematics import (
    ArmGeometry,
    JointPose,
    clamp,
    ik_workplane_scalar,
    workplane_point,
)

DEFAULT_CUTOFF_HZ = 3.0
DEFAULT_DT = 1e-3


class MappingMode(enum.Enum):
    JOINT = "joint"
    TASK = "task"

    def toggled(self) -> "MappingMode":
        return MappingMode.TASK if self is MappingMode.JOINT else MappingMode.JOINT


@dataclass(frozen=True)
class CommandFrame:
    """One retargeted command: pose, filtered joint rates, and saturation flag."""

    tick: int
    theta_cmd: JointPose
    theta_dot_cmd: tuple[float, float, float, float]
    clamped: bool


@dataclass(frozen=True)
class VelocityFilterState:
    """Memory of the dirty-derivative filter: previous input pose and output rates."""

    prev_input: JointPose
    prev_output: tuple[float, float, float, float]
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")

    @classmethod
    def initial(
        cls,
        theta0: JointPose,
        cutoff_hz: float = DEFAULT_CUTOFF_HZ,
        dt: float = DEFAULT_DT,
    ) -> "VelocityFilterState":
        return cls(theta0, (0.0, 0.0, 0.0, 0.0), filter_alpha(cutoff_hz, dt))


def filter_alpha(cutoff_hz: float, dt: float) -> float:
    """Exact-pole discretization of a first-order lag at ``cutoff_hz``."""
    return math.exp(-2.0 * math.pi * cutoff_hz * dt)


def map_joint(theta_h: JointPose, robot: ArmGeometry) -> JointPose:
    """Joint-space mapping: mirror the human pose, saturated into robot limits."""
    return theta_h.clamped(robot)


def map_task(
    theta_h: JointPose, human: ArmGeometry, robot: ArmGeometry
) -> tuple[JointPose, bool]:
    """Hybrid task-space mapping.

    Shoulder yaw/roll pass through unchanged; the human wrist's workplane
    position is scaled by L_R/L_H and solved with the robot's planar IK.
    The result is saturated into robot limits; the flag reports whether any
    reach or limit clamping occurred.
    """
    scale = robot.arm_length / human.arm_length
    wy, wz = workplane_point(human.l2, human.l3, theta_h.theta3, theta_h.theta4)
    lo3, hi3 = robot.limits[2]
    t3, t4, reach_clamped = ik_workplane_scalar(
        robot.l2, robot.l3, scale * wy, scale * wz, lo3, hi3
    )
    raw = (theta_h.theta1, theta_h.theta2, t3, t4)
    out = tuple(clamp(v, lo, hi) for v, (lo, hi) in zip(raw, robot.limits))
    limit_clamped = out != raw
    return JointPose(*out), reach_clamped or limit_clamped


def filter_velocity(
    state: VelocityFilterState, theta_cmd: JointPose, dt: float
) -> tuple[tuple[float, float, float, float], VelocityFilterState]:
    """One filter step: y_k = alpha*y_{k-1} + (1-alpha)*(u_k - u_{k-1})/dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    a = state.alpha
    b = 1.0 - a
    u = theta_cmd.as_tuple()
    pu = state.prev_input.as_tuple()
    py = state.prev_output
    y = tuple(a * py[k] + b * ((u[k] - pu[k]) / dt) for k in range(4))
    return y, VelocityFilterState(theta_cmd, y, a)


def retarget(
    theta_h: JointPose,
    mode: MappingMode,
    human: ArmGeometry,
    robot: ArmGeometry,
) -> tuple[JointPose, bool]:
    """Apply the active mapping; returns (theta_cmd, clamped)."""
    if mode is MappingMode.JOINT:
        cmd = map_joint(theta_h, robot)
        return cmd, cmd.as_tuple() != theta_h.as_tuple()
    return map_task(theta_h, human, robot)


def command_frame(
    tick: int,
    theta_h: JointPose,
    mode: MappingMode,
    human: ArmGeometry,
    robot: ArmGeometry,
    state: VelocityFilterState,
    dt: float = DEFAULT_DT,
) -> tuple[CommandFrame, VelocityFilterState]:
    """Full retargeting step: mapping followed by the velocity approximator."""
    cmd, clamped = retarget(theta_h, mode, human, robot)
    rates, state = filter_velocity(state, cmd, dt)
    return CommandFrame(tick, cmd, rates, clamped), state


def scaling_deviation(
    human: ArmGeometry,
    robot: ArmGeometry,
    poses,
) -> float:
    """Worst relative wrist deviation of task-space mapping over ``poses``.

    For each pose the robot wrist under the hybrid mapping is compared with
    the ideal uniformly scaled human wrist, normalized by the robot arm
    length L_R.  With zero shoulder-offset links the deviation vanishes;
    otherwise it grows with the offset-to-arm-length ratios.
    """
    from .kinematics import wrist_point

    scale = robot.arm_length / human.arm_length
    worst = 0.0
    for pose in poses:
        cmd, _ = map_task(pose, human, robot)
        rw = wrist_point(robot.l1, robot.l2, robot.l3, *cmd.as_tuple())
        hw = wrist_point(human.l1, human.l2, human.l3, *pose.as_tuple())
        dev = math.sqrt(
            (rw[0] - scale * hw[0]) ** 2
            + (rw[1] - scale * hw[1]) ** 2
            + (rw[2] - scale * hw[2]) ** 2
        )
        worst = max(worst, dev / robot.arm_length)
    return worst
