"""Session configuration: schema, validation, defaults, YAML round trip.

The configuration is a plain key-value tree (YAML on disk).  Validation
errors carry the dotted path of the offending field.  Defaults describe a
desk-scale session: a forearm-dominant human arm, an upper-arm-dominant
robot at roughly 57% of the human's arm length, a six-target board in the
robot's frontal plane, and a minimum-jerk pilot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from ..errors import ConfigInvalid
from ..harness import TargetBoard, TrialKind, calibrate_board
from ..kinematics import ArmGeometry, JointPose
from ..pilots import PilotKind, PilotParams, ik_spatial
from ..plant import GainSet, PlantParams
from ..retarget import MappingMode

LIMIT_KEYS = ("theta1", "theta2", "theta3", "theta4")

DEFAULT_LIMITS = (
    (-1.2, 1.2),
    (-0.5, 1.4),
    (-1.0, 2.4),
    (0.0, 2.7),
)

#: Board centers (m, robot frame): two rows of three in a vertical plane
#: anterior to the shoulder, ids 0-2 top row left to right (left = -y),
#: 3-5 bottom row.
DEFAULT_BOARD_CENTERS = (
    (0.22, -0.12, -0.10),
    (0.22, 0.0, -0.10),
    (0.22, 0.12, -0.10),
    (0.22, -0.12, -0.22),
    (0.22, 0.0, -0.22),
    (0.22, 0.12, -0.22),
)


DEFAULT_HOME_POSE = JointPose(0.0, 0.05, 0.1, 0.6)


@dataclass(frozen=True)
class TrialPlanEntry:
    kind: TrialKind
    mapping: MappingMode
    count: int


@dataclass(frozen=True)
class TuningConfig:
    rise_time: float = 0.05
    overshoot_cap: float = 5.0
    amplitude: float = 0.3
    damping_ratio: float = 1.1
    kp_min: float = 0.5
    kp_max: float = 400.0
    horizon: float = 2.0


@dataclass(frozen=True)
class ServeConfig:
    port: int = 8765
    blind: bool = False
    broadcast_hz: int = 60
    max_joint_speed: float = 8.0
    speed: float = 1.0  # wall-clock pacing multiplier; physics unaffected


@dataclass(frozen=True)
class SessionConfig:
    human: ArmGeometry
    robot: ArmGeometry
    gains: GainSet
    plant: PlantParams
    board_radius: float
    board_centers: tuple | None
    board_touch_poses: tuple | None
    home_pose: JointPose
    pilot: PilotParams
    plan: tuple[TrialPlanEntry, ...]
    seed: int = 12345
    tick_rate: int = 1000
    log_rate: int = 200
    per_hit_timeout: float = 10.0
    tuning: TuningConfig = field(default_factory=TuningConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)

    def board(self) -> TargetBoard:
        """Calibrate the target board from touch poses, deriving them with
        the spatial IK when only centers are configured."""
        if self.board_touch_poses is not None:
            poses = self.board_touch_poses
        else:
            poses = tuple(
                ik_spatial(self.robot, np.array(c), self.home_pose)
                for c in self.board_centers
            )
        return calibrate_board(self.robot, poses, self.board_radius)

    def trial_seed(self, entry_index: int, trial_index: int) -> int:
        ss = np.random.SeedSequence([self.seed, entry_index, trial_index, 0])
        return int(ss.generate_state(1)[0])

    def pilot_seed(self, entry_index: int, trial_index: int) -> int:
        ss = np.random.SeedSequence([self.seed, entry_index, trial_index, 1])
        return int(ss.generate_state(1)[0])


def default_touch_poses(
    robot: ArmGeometry, centers=DEFAULT_BOARD_CENTERS, seed_pose: JointPose | None = None
):
    """Touch poses for the default board via the spatial IK (calibration step)."""
    seed = seed_pose if seed_pose is not None else DEFAULT_HOME_POSE
    return tuple(ik_spatial(robot, np.array(c), seed) for c in centers)


def default_session_config() -> SessionConfig:
    human = ArmGeometry(0.04, 0.28, 0.33, DEFAULT_LIMITS)
    robot = ArmGeometry(0.025, 0.20, 0.15, DEFAULT_LIMITS)
    return SessionConfig(
        human=human,
        robot=robot,
        # output of the tuning search at the default targets (rise 50 ms,
        # damping ratio 1.1), rounded up to keep the targets met
        gains=GainSet(kp=(62.0,) * 4, kd=(1.68,) * 4),
        plant=PlantParams(),
        board_radius=0.03,
        board_centers=DEFAULT_BOARD_CENTERS,
        board_touch_poses=default_touch_poses(robot),
        home_pose=DEFAULT_HOME_POSE,
        pilot=PilotParams(),
        plan=(
            TrialPlanEntry(TrialKind.SEQ, MappingMode.JOINT, 2),
            TrialPlanEntry(TrialKind.RXN_S, MappingMode.JOINT, 2),
            TrialPlanEntry(TrialKind.RXN_M, MappingMode.TASK, 2),
        ),
    )


# ---------------------------------------------------------------------------
# Loading / dumping.
# ---------------------------------------------------------------------------


def _get(tree: dict, path: str, typ, default=...):
    node = tree
    parts = path.split(".")
    for i, key in enumerate(parts):
        if not isinstance(node, dict):
            raise ConfigInvalid(".".join(parts[:i]), "expected a mapping")
        if key not in node:
            if default is not ...:
                return default
            raise ConfigInvalid(path, "missing required field")
        node = node[key]
    if typ is float and isinstance(node, int) and not isinstance(node, bool):
        node = float(node)
    if typ is not None and not isinstance(node, typ):
        raise ConfigInvalid(path, f"expected {typ.__name__}, got {type(node).__name__}")
    return node


def _vector(tree, path, n, default=...):
    v = _get(tree, path, list, default)
    if v is default:
        return default
    if len(v) != n or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigInvalid(path, f"expected a list of {n} numbers")
    return tuple(float(x) for x in v)


def _geometry(tree: dict, path: str) -> ArmGeometry:
    sub = _get(tree, path, dict)
    l1 = _get(tree, f"{path}.l1", float)
    l2 = _get(tree, f"{path}.l2", float)
    l3 = _get(tree, f"{path}.l3", float)
    if "limits" in sub:
        limits = tuple(
            _vector(tree, f"{path}.limits.{k}", 2) for k in LIMIT_KEYS
        )
    else:
        limits = DEFAULT_LIMITS
    try:
        return ArmGeometry(l1, l2, l3, limits)
    except ValueError as e:
        raise ConfigInvalid(path, str(e)) from None


def load_config_dict(tree: dict) -> SessionConfig:
    if not isinstance(tree, dict):
        raise ConfigInvalid("", "configuration root must be a mapping")
    base = default_session_config()
    human = _geometry(tree, "human") if "human" in tree else base.human
    robot = _geometry(tree, "robot") if "robot" in tree else base.robot

    if "gains" in tree:
        gains = GainSet(_vector(tree, "gains.kp", 4), _vector(tree, "gains.kd", 4))
    else:
        gains = base.gains
    if "plant" in tree:
        try:
            plant = PlantParams(
                _vector(tree, "plant.inertia", 4, base.plant.inertia),
                _vector(tree, "plant.damping", 4, base.plant.damping),
                _vector(tree, "plant.tau_max", 4, base.plant.tau_max),
            )
        except ValueError as e:
            raise ConfigInvalid("plant", str(e)) from None
    else:
        plant = base.plant

    radius = _get(tree, "board.radius", float, base.board_radius)
    centers = None
    touch_poses = None
    def _row(raw, i, n, path):
        row = raw[i]
        if (
            not isinstance(row, list)
            or len(row) != n
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row)
        ):
            raise ConfigInvalid(f"{path}[{i}]", f"expected a list of {n} numbers")
        return tuple(float(x) for x in row)

    if "board" in tree and "touch_poses" in tree["board"]:
        raw = _get(tree, "board.touch_poses", list)
        if len(raw) != 6:
            raise ConfigInvalid("board.touch_poses", "expected six poses")
        touch_poses = tuple(
            JointPose(*_row(raw, i, 4, "board.touch_poses")) for i in range(6)
        )
    elif "board" in tree and "centers" in tree["board"]:
        raw = _get(tree, "board.centers", list)
        if len(raw) != 6:
            raise ConfigInvalid("board.centers", "expected six centers")
        centers = tuple(_row(raw, i, 3, "board.centers") for i in range(6))
    else:
        touch_poses = default_touch_poses(robot) if robot == base.robot else None
        centers = base.board_centers

    home = (
        JointPose(*_vector(tree, "home_pose", 4))
        if "home_pose" in tree
        else base.home_pose
    )

    if "pilot" in tree:
        kind_s = _get(tree, "pilot.kind", str, "minimum_jerk")
        try:
            kind = PilotKind(kind_s)
        except ValueError:
            raise ConfigInvalid("pilot.kind", f"unknown pilot kind {kind_s!r}") from None
        try:
            pilot = PilotParams(
                kind=kind,
                latency_mean=_get(tree, "pilot.latency_mean", float, 0.25),
                latency_sd=_get(tree, "pilot.latency_sd", float, 0.03),
                move_duration=_get(tree, "pilot.move_duration", float, 0.4),
                seed=_get(tree, "pilot.seed", int, 0),
            )
        except ValueError as e:
            raise ConfigInvalid("pilot", str(e)) from None
    else:
        pilot = base.pilot

    plan = []
    if "trials" in tree:
        raw_plan = _get(tree, "trials", list)
        if not raw_plan:
            raise ConfigInvalid("trials", "trial plan must be non-empty")
        for i, entry in enumerate(raw_plan):
            if not isinstance(entry, dict):
                raise ConfigInvalid(f"trials[{i}]", "expected a mapping")
            kind_s = _get(entry, "kind", str)
            try:
                kind = TrialKind(kind_s)
            except ValueError:
                raise ConfigInvalid(f"trials[{i}].kind", f"unknown kind {kind_s!r}") from None
            mapping_s = _get(entry, "mapping", str)
            try:
                mapping = MappingMode(mapping_s)
            except ValueError:
                raise ConfigInvalid(
                    f"trials[{i}].mapping", f"unknown mapping {mapping_s!r}"
                ) from None
            count = _get(entry, "count", int, 1)
            if count < 1:
                raise ConfigInvalid(f"trials[{i}].count", "count must be >= 1")
            plan.append(TrialPlanEntry(kind, mapping, count))
    else:
        plan = list(base.plan)

    tuning = TuningConfig(
        rise_time=_get(tree, "tuning.rise_time", float, base.tuning.rise_time),
        overshoot_cap=_get(tree, "tuning.overshoot_cap", float, base.tuning.overshoot_cap),
        amplitude=_get(tree, "tuning.amplitude", float, base.tuning.amplitude),
        damping_ratio=_get(tree, "tuning.damping_ratio", float, base.tuning.damping_ratio),
        kp_min=_get(tree, "tuning.kp_min", float, base.tuning.kp_min),
        kp_max=_get(tree, "tuning.kp_max", float, base.tuning.kp_max),
        horizon=_get(tree, "tuning.horizon", float, base.tuning.horizon),
    )
    serve = ServeConfig(
        port=_get(tree, "serve.port", int, base.serve.port),
        blind=_get(tree, "serve.blind", bool, base.serve.blind),
        broadcast_hz=_get(tree, "serve.broadcast_hz", int, base.serve.broadcast_hz),
        max_joint_speed=_get(tree, "serve.max_joint_speed", float, base.serve.max_joint_speed),
        speed=_get(tree, "serve.speed", float, base.serve.speed),
    )

    tick_rate = _get(tree, "rates.tick", int, base.tick_rate)
    log_rate = _get(tree, "rates.log", int, base.log_rate)
    if tick_rate <= 0 or log_rate <= 0 or tick_rate % log_rate != 0:
        raise ConfigInvalid("rates", "tick rate must be a positive multiple of log rate")

    cfg = SessionConfig(
        human=human,
        robot=robot,
        gains=gains,
        plant=plant,
        board_radius=radius,
        board_centers=centers,
        board_touch_poses=touch_poses,
        home_pose=home,
        pilot=pilot,
        plan=tuple(plan),
        seed=_get(tree, "seed", int, base.seed),
        tick_rate=tick_rate,
        log_rate=log_rate,
        per_hit_timeout=_get(tree, "timeouts.per_hit", float, base.per_hit_timeout),
        tuning=tuning,
        serve=serve,
    )
    if not cfg.home_pose.within_limits(cfg.human):
        raise ConfigInvalid("home_pose", "outside human joint limits")
    return cfg


def load_config(path: str | None) -> SessionConfig:
    """Load a session config from YAML; None gives the built-in defaults."""
    if path is None:
        return default_session_config()
    try:
        with open(path) as f:
            tree = yaml.safe_load(f)
    except OSError as e:
        raise ConfigInvalid("", f"cannot read config: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigInvalid("", f"invalid YAML: {e}") from None
    return load_config_dict(tree if tree is not None else {})


def config_to_dict(cfg: SessionConfig) -> dict:
    def geom(g: ArmGeometry):
        return {
            "l1": g.l1,
            "l2": g.l2,
            "l3": g.l3,
            "limits": {k: list(iv) for k, iv in zip(LIMIT_KEYS, g.limits)},
        }

    board: dict = {"radius": cfg.board_radius}
    if cfg.board_touch_poses is not None:
        board["touch_poses"] = [list(p.as_tuple()) for p in cfg.board_touch_poses]
    else:
        board["centers"] = [list(c) for c in cfg.board_centers]
    return {
        "seed": cfg.seed,
        "human": geom(cfg.human),
        "robot": geom(cfg.robot),
        "gains": {"kp": list(cfg.gains.kp), "kd": list(cfg.gains.kd)},
        "plant": {
            "inertia": list(cfg.plant.inertia),
            "damping": list(cfg.plant.damping),
            "tau_max": list(cfg.plant.tau_max),
        },
        "board": board,
        "home_pose": list(cfg.home_pose.as_tuple()),
        "pilot": {
            "kind": cfg.pilot.kind.value,
            "latency_mean": cfg.pilot.latency_mean,
            "latency_sd": cfg.pilot.latency_sd,
            "move_duration": cfg.pilot.move_duration,
            "seed": cfg.pilot.seed,
        },
        "trials": [
            {"kind": e.kind.value, "mapping": e.mapping.value, "count": e.count}
            for e in cfg.plan
        ],
        "rates": {"tick": cfg.tick_rate, "log": cfg.log_rate},
        "timeouts": {"per_hit": cfg.per_hit_timeout},
        "tuning": {
            "rise_time": cfg.tuning.rise_time,
            "overshoot_cap": cfg.tuning.overshoot_cap,
            "amplitude": cfg.tuning.amplitude,
            "damping_ratio": cfg.tuning.damping_ratio,
            "kp_min": cfg.tuning.kp_min,
            "kp_max": cfg.tuning.kp_max,
            "horizon": cfg.tuning.horizon,
        },
        "serve": {
            "port": cfg.serve.port,
            "blind": cfg.serve.blind,
            "broadcast_hz": cfg.serve.broadcast_hz,
            "max_joint_speed": cfg.serve.max_joint_speed,
            "speed": cfg.serve.speed,
        },
    }


def dump_config(cfg: SessionConfig, path: str) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(config_to_dict(cfg), f, sort_keys=True)
