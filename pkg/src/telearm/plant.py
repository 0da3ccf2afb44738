"""Robot-side actuation: actuator/topological translation, PD control, dynamics.

The four actuators relate linearly to the topological joints: two shoulder
motors form a differential (phi1 = theta1 + theta2, phi2 = theta1 - theta2),
the pitch actuator is direct, and the elbow actuator is ground-referenced
through a parallelogram (phi4 = theta3 + theta4).  Because the map is
linear, the same matrix translates velocities exactly.

The plant is a decoupled per-joint rotor: inertia plus viscous damping,
integrated semi-implicitly at a fixed tick, with hard stops that zero the
violating velocity component.  A reactive position-velocity (PD) law in
actuator space closes the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnstableResponse
from .kinematics import ArmGeometry, JointPose, clamp

Vec4 = tuple[float, float, float, float]


@dataclass(frozen=True)
class ActuatorPose:
    """Actuator joint positions (rad)."""

    phi1: float
    phi2: float
    phi3: float
    phi4: float

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3", "phi4"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def as_tuple(self) -> Vec4:
        return (self.phi1, self.phi2, self.phi3, self.phi4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())


@dataclass(frozen=True)
class GainSet:
    """Per-joint stiffness (N*m/rad) and damping (N*m*s/rad)."""

    kp: Vec4
    kd: Vec4

    def __post_init__(self):
        if len(self.kp) != 4 or len(self.kd) != 4:
            raise ValueError("gains must have four components")
        if any(v < 0 for v in self.kp) or any(v < 0 for v in self.kd):
            raise ValueError("gains must be non-negative")
        object.__setattr__(self, "kp", tuple(float(v) for v in self.kp))
        object.__setattr__(self, "kd", tuple(float(v) for v in self.kd))


@dataclass(frozen=True)
class PlantParams:
    """Decoupled rotor parameters: inertia (kg*m^2), viscous damping, torque cap."""

    inertia: Vec4 = (0.01, 0.01, 0.01, 0.01)
    damping: Vec4 = (0.05, 0.05, 0.05, 0.05)
    tau_max: Vec4 = (8.0, 8.0, 8.0, 8.0)

    def __post_init__(self):
        for name, lo_ok in (("inertia", False), ("damping", True), ("tau_max", False)):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 4:
                raise ValueError(f"{name} must have four components")
            if any(not math.isfinite(v) for v in vals):
                raise ValueError(f"{name} must be finite")
            if lo_ok:
                if any(v < 0 for v in vals):
                    raise ValueError(f"{name} must be >= 0")
            elif any(v <= 0 for v in vals):
                raise ValueError(f"{name} must be > 0")
            object.__setattr__(self, name, vals)


@dataclass(frozen=True)
class PlantState:
    """Actuator positions/velocities plus the tick index."""

    phi: ActuatorPose
    phi_dot: Vec4
    tick: int

    @classmethod
    def at_rest(cls, phi: ActuatorPose, tick: int = 0) -> "PlantState":
        return cls(phi, (0.0, 0.0, 0.0, 0.0), tick)


UNBOUNDED_BOX = ((-math.inf,) * 4, (math.inf,) * 4)


def actuator_from_topological(theta: JointPose) -> ActuatorPose:
    """phi = A theta with the differential shoulder and parallelogram elbow."""
    t1, t2, t3, t4 = theta.as_tuple()
    return ActuatorPose(t1 + t2, t1 - t2, t3, t3 + t4)


def actuator_rates_from_topological(rates) -> Vec4:
    """Velocity translation through the same linear map (exact by linearity)."""
    r1, r2, r3, r4 = rates
    return (r1 + r2, r1 - r2, r3, r3 + r4)


def topological_from_actuator(phi: ActuatorPose) -> JointPose:
    """Exact inverse of the actuator map."""
    p1, p2, p3, p4 = phi.as_tuple()
    return JointPose(0.5 * (p1 + p2), 0.5 * (p1 - p2), p3, p4 - p3)


def actuator_limit_box(geometry: ArmGeometry) -> tuple[Vec4, Vec4]:
    """Interval image of the topological limit box under the actuator map.

    The image is not a box (phi1 and phi2 are coupled through theta1 and
    theta2), so this is the enclosing box: commands clamped in topological
    space always stay inside it.
    """
    (l1, h1), (l2, h2), (l3, h3), (l4, h4) = geometry.limits
    lo = (l1 + l2, l1 - h2, l3, l3 + l4)
    hi = (h1 + h2, h1 - l2, h3, h3 + h4)
    return lo, hi


def pd_torque(
    gains: GainSet,
    cmd: tuple[ActuatorPose, Vec4],
    meas: PlantState,
    params: PlantParams,
) -> Vec4:
    """tau = Kp (phi_cmd - phi) + Kd (phid_cmd - phid), saturated to +/-tau_max."""
    cmd_pose, cmd_rates = cmd
    pc = cmd_pose.as_tuple()
    p = meas.phi.as_tuple()
    v = meas.phi_dot
    out = []
    for k in range(4):
        tau = gains.kp[k] * (pc[k] - p[k]) + gains.kd[k] * (cmd_rates[k] - v[k])
        out.append(clamp(tau, -params.tau_max[k], params.tau_max[k]))
    return tuple(out)


def step_plant(
    state: PlantState,
    tau: Vec4,
    dt: float,
    params: PlantParams,
    limits: tuple[Vec4, Vec4] = UNBOUNDED_BOX,
) -> PlantState:
    """One semi-implicit Euler step with hard joint-limit stops."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    lo, hi = limits
    p = state.phi.as_tuple()
    v = state.phi_dot
    new_p = []
    new_v = []
    for k in range(4):
        acc = (tau[k] - params.damping[k] * v[k]) / params.inertia[k]
        vk = v[k] + acc * dt
        pk = p[k] + vk * dt
        if pk < lo[k]:
            pk = lo[k]
            if vk < 0.0:
                vk = 0.0
        elif pk > hi[k]:
            pk = hi[k]
            if vk > 0.0:
                vk = 0.0
        new_p.append(pk)
        new_v.append(vk)
    return PlantState(ActuatorPose(*new_p), tuple(new_v), state.tick + 1)


@dataclass(frozen=True)
class ResponseCurve:
    """Step-response time series with the usual scalar metrics."""

    time: np.ndarray
    position: np.ndarray
    amplitude: float
    rise_time: float
    settle_time: float
    overshoot_pct: float


def step_response(
    params: PlantParams,
    gains: GainSet,
    joint: int,
    amplitude: float,
    duration: float = 2.0,
    dt: float = 1e-3,
) -> ResponseCurve:
    """Closed-loop step on one joint from rest: position series plus
    10-90% rise time, 2% settling time, and percent overshoot.

    The commanded rate is zero (pure position step).  Raises
    UnstableResponse if the position diverges beyond 10x the amplitude.
    """
    if not math.isfinite(amplitude):
        raise ValueError("amplitude must be finite")
    n = int(round(duration / dt))
    t = np.arange(n + 1) * dt
    pos = np.zeros(n + 1)
    if amplitude == 0.0:
        return ResponseCurve(t, pos, 0.0, 0.0, 0.0, 0.0)

    cmd_pose = ActuatorPose(*(amplitude if k == joint else 0.0 for k in range(4)))
    cmd = (cmd_pose, (0.0, 0.0, 0.0, 0.0))
    state = PlantState.at_rest(ActuatorPose(0.0, 0.0, 0.0, 0.0))
    guard = 10.0 * abs(amplitude)
    for i in range(1, n + 1):
        tau = pd_torque(gains, cmd, state, params)
        state = step_plant(state, tau, dt, params)
        pos[i] = state.phi.as_tuple()[joint]
        if abs(pos[i]) > guard:
            raise UnstableResponse(
                f"joint {joint} exceeded 10x the step amplitude at t={i * dt:.3f}s"
            )

    y = pos / amplitude
    above10 = np.nonzero(y >= 0.1)[0]
    above90 = np.nonzero(y >= 0.9)[0]
    if len(above10) == 0 or len(above90) == 0:
        rise = math.inf
    else:
        rise = float(t[above90[0]] - t[above10[0]])
    outside = np.nonzero(np.abs(y - 1.0) > 0.02)[0]
    if len(outside) == 0:
        settle = 0.0
    elif outside[-1] == n:
        settle = math.inf
    else:
        settle = float(t[outside[-1] + 1])
    overshoot = float(max(0.0, np.max(y) - 1.0) * 100.0)
    return ResponseCurve(t, pos, amplitude, rise, settle, overshoot)


def critical_kd(kp: float, inertia: float, damping: float, zeta: float = 1.0) -> float:
    """Damping gain that places the closed loop at damping ratio ``zeta``."""
    return max(0.0, 2.0 * zeta * math.sqrt(kp * inertia) - damping)
