import math

import numpy as np
import pytest

from telearm import ArmGeometry, JointPose
from telearm.gateway.config import default_session_config

# Near-full-range limits for tests that probe the kinematics alone.
WIDE_LIMITS = (
    (-math.pi + 1e-9, math.pi),
    (-1.55, 1.55),
    (-math.pi + 1e-9, math.pi),
    (0.0, math.pi - 1e-9),
)


@pytest.fixture(scope="session")
def session_cfg():
    return default_session_config()


@pytest.fixture(scope="session")
def board(session_cfg):
    return session_cfg.board()


@pytest.fixture
def wide_geometry():
    return ArmGeometry(0.05, 0.3, 0.35, WIDE_LIMITS)


def sample_poses(geometry, n, seed, theta4_min=0.0, theta4_max_margin=0.0):
    """Uniform poses within limits, optionally keeping theta4 off its ends."""
    rng = np.random.default_rng(seed)
    lims = list(geometry.limits)
    lo4, hi4 = lims[3]
    lo4 = max(lo4, theta4_min)
    hi4 = hi4 - theta4_max_margin
    out = []
    for _ in range(n):
        vals = [rng.uniform(lo, hi) for lo, hi in lims[:3]]
        vals.append(rng.uniform(lo4, hi4))
        out.append(JointPose(*vals))
    return out
