"""Simulation kernel with backend selection.

The hot 1 kHz pipeline (retargeting, velocity filter, PD control, plant
integration, wrist FK, hit detection) runs in a compiled Cython kernel when
the extension is built, with a pure-Python twin as fallback.  Set
``TELEARM_PURE_PYTHON=1`` to force the fallback.  Both backends produce
bit-identical trajectories; ``benchmarks/bench_backends.py`` compares their
throughput.
"""

from __future__ import annotations

import os

import numpy as np

from ..kinematics import ArmGeometry, JointPose, wrist_point
from ..retarget import MappingMode, retarget
from . import engine_py
from .params import (  # noqa: F401  (re-exported layout contract)
    MODE_JOINT,
    MODE_TASK,
    N_PARAMS,
    N_ROW,
    N_STATE,
    initial_state,
    mode_code,
    pack_params,
)

try:
    from . import _engine as _compiled
except ImportError:
    _compiled = None


def available_backends() -> dict[str, object]:
    out = {"python": engine_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def get_backend(name: str):
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available") from None


if _compiled is not None and not os.environ.get("TELEARM_PURE_PYTHON"):
    _active = _compiled
else:
    _active = engine_py

BACKEND = _active.BACKEND_NAME


def run_piece(
    state,
    params,
    mode,
    pose_from,
    pose_to,
    move_start,
    move_ticks,
    start_tick,
    end_tick,
    target=None,
    radius=0.0,
    check_from=0,
    log_every=5,
    out_log=None,
    row0=0,
    backend=None,
):
    """Advance the engine along one pilot motion piece (see engine_py)."""
    impl = _active if backend is None else backend
    f1, f2, f3, f4 = pose_from
    g1, g2, g3, g4 = pose_to
    if target is None:
        has_target, tx, ty, tz = False, 0.0, 0.0, 0.0
    else:
        has_target = True
        tx, ty, tz = target
    if out_log is None:
        out_log = np.empty((0, N_ROW))
        log_every = 1 << 60  # effectively never
    return impl.run_piece(
        state, params, mode,
        f1, f2, f3, f4, g1, g2, g3, g4,
        move_start, move_ticks, start_tick, end_tick,
        has_target, tx, ty, tz, radius, check_from,
        log_every, out_log, row0,
    )


def step_tick(state, params, mode, theta_h, tick, backend=None) -> np.ndarray:
    """Advance exactly one tick with the pilot held at ``theta_h``.

    Returns the full log row for the tick (see params.N_ROW layout).
    """
    row = np.empty((1, N_ROW))
    run_piece(
        state, params, mode,
        theta_h, theta_h, tick, 0,
        tick - 1, tick,
        log_every=1, out_log=row, row0=0, backend=backend,
    )
    return row[0]


def initial_row(
    theta_h0: JointPose,
    mode: MappingMode,
    human: ArmGeometry,
    robot: ArmGeometry,
    state,
    tick: int = 0,
) -> np.ndarray:
    """Log row for the session's initial tick, before any engine step."""
    cmd, _ = retarget(theta_h0, mode, human, robot)
    r = np.empty(N_ROW)
    r[0] = tick
    r[1:5] = theta_h0.as_tuple()
    r[5:9] = cmd.as_tuple()
    r[9:13] = state[0:4]
    phi = state[0:4]
    t1 = 0.5 * (phi[0] + phi[1])
    t2 = 0.5 * (phi[0] - phi[1])
    t3 = phi[2]
    t4 = phi[3] - phi[2]
    r[13:16] = wrist_point(robot.l1, robot.l2, robot.l3, t1, t2, t3, t4)
    r[16:19] = wrist_point(human.l1, human.l2, human.l3, *theta_h0.as_tuple())
    return r
