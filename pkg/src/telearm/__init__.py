"""Deterministic teleoperation simulator for a 4-DoF anthropomorphic arm.

Core surfaces: closed-form arm kinematics, joint/task-space retargeting,
actuator-space PD control over a per-joint plant, synthetic pilots, the
reaction-test protocol, and an operational gateway (CLI plus a live
WebSocket piloting service).
"""

from .errors import (
    ConfigInvalid,
    DegenerateGeometry,
    DuplicateCenter,
    NoConvergence,
    NotInSubgroup,
    PortBusy,
    ProtocolViolation,
    TargetInfeasible,
    TelearmError,
    TrialTimeout,
    Unreachable,
    UnstableResponse,
)
from .kinematics import (
    ArmGeometry,
    ArmPoints,
    JointPose,
    PlanarPoint,
    Rotation,
    decompose_shoulder,
    forward_arm,
    ik_workplane,
    shoulder_orientation,
    workplane_position,
)
from .retarget import (
    CommandFrame,
    MappingMode,
    VelocityFilterState,
    filter_velocity,
    map_joint,
    map_task,
)
from .plant import (
    ActuatorPose,
    GainSet,
    PlantParams,
    PlantState,
    actuator_from_topological,
    pd_torque,
    step_plant,
    step_response,
    topological_from_actuator,
)
from .pilots import PilotKind, PilotParams, PilotState, ik_spatial, minimum_jerk, pilot_step
from .harness import (
    HitRecord,
    Target,
    TargetBoard,
    TrialConfig,
    TrialKind,
    TrialLog,
    calibrate_board,
    check_hit,
    nondimensionalize,
    offset_sweep,
    run_trial,
    summarize,
)

__version__ = "0.1.0"
