"""Packing of the numeric context consumed by the simulation kernels.

Both kernel backends read the same flat float64 vector; the index constants
below are the layout contract.  All derived quantities (filter pole, scale
ratio, actuator box) are computed here, in Python, so the backends never
have to agree on anything beyond plain arithmetic.
"""

from __future__ import annotations

import numpy as np

from ..kinematics import REACH_MARGIN, ArmGeometry, JointPose
from ..plant import GainSet, PlantParams, actuator_from_topological, actuator_limit_box
from ..retarget import MappingMode, filter_alpha

MODE_JOINT = 0
MODE_TASK = 1

# Layout indices.
P_L1H, P_L2H, P_L3H = 0, 1, 2
P_L1R, P_L2R, P_L3R = 3, 4, 5
P_SCALE = 6
P_RLO = 7          # 7..10  robot topological limit lows
P_RHI = 11         # 11..14 robot topological limit highs
P_ALPHA = 15
P_BETA = 16
P_DT = 17
P_KP = 18          # 18..21
P_KD = 22          # 22..25
P_INERTIA = 26     # 26..29
P_DAMPING = 30     # 30..33
P_TAUMAX = 34      # 34..37
P_ALO = 38         # 38..41 actuator box lows
P_AHI = 42         # 42..45 actuator box highs
P_MARGIN = 46
N_PARAMS = 47

# State layout: [phi(4), phi_dot(4), prev_input(4), prev_rate(4)].
N_STATE = 16

# Log row layout: [tick, theta_H(4), theta_cmd(4), phi(4), pw_robot(3), pw_human(3)].
N_ROW = 19


def mode_code(mode: MappingMode) -> int:
    return MODE_JOINT if mode is MappingMode.JOINT else MODE_TASK


def pack_params(
    human: ArmGeometry,
    robot: ArmGeometry,
    gains: GainSet,
    plant: PlantParams,
    dt: float,
    cutoff_hz: float = 3.0,
    reach_margin: float = REACH_MARGIN,
) -> np.ndarray:
    p = np.zeros(N_PARAMS)
    p[P_L1H], p[P_L2H], p[P_L3H] = human.l1, human.l2, human.l3
    p[P_L1R], p[P_L2R], p[P_L3R] = robot.l1, robot.l2, robot.l3
    p[P_SCALE] = robot.arm_length / human.arm_length
    for k, (lo, hi) in enumerate(robot.limits):
        p[P_RLO + k] = lo
        p[P_RHI + k] = hi
    alpha = filter_alpha(cutoff_hz, dt)
    p[P_ALPHA] = alpha
    p[P_BETA] = 1.0 - alpha
    p[P_DT] = dt
    p[P_KP : P_KP + 4] = gains.kp
    p[P_KD : P_KD + 4] = gains.kd
    p[P_INERTIA : P_INERTIA + 4] = plant.inertia
    p[P_DAMPING : P_DAMPING + 4] = plant.damping
    p[P_TAUMAX : P_TAUMAX + 4] = plant.tau_max
    alo, ahi = actuator_limit_box(robot)
    p[P_ALO : P_ALO + 4] = alo
    p[P_AHI : P_AHI + 4] = ahi
    p[P_MARGIN] = reach_margin
    return p


def initial_state(theta_cmd0: JointPose) -> np.ndarray:
    """Engine state at rest with the plant converged on the initial command."""
    s = np.zeros(N_STATE)
    s[0:4] = actuator_from_topological(theta_cmd0).as_tuple()
    s[8:12] = theta_cmd0.as_tuple()
    return s
