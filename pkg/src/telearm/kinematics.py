"""Closed-form kinematics of the shared 4-DoF topological arm model.

Human and robot use the same abstraction and differ only in link lengths
and joint limits: a yaw/roll universal joint at the shoulder O, a fixed
offset link to the deltoid point D, then a shoulder-pitch joint and an
elbow joint rotating about the same local axis, forming the chain
O -> D -> E(lbow) -> W(rist).

Frame convention: inertial frame at the shoulder, z up, x anterior,
y lateral.  theta1 is yaw about z; theta2 is roll, realized as a rotation
by -theta2 about x; theta3 (shoulder pitch) and theta4 (elbow) rotate the
upper arm and forearm about the shared local lateral axis, positive angles
swinging the limb anterior.  The zero pose hangs straight down along -z;
pure pitch at the zero shoulder raises the wrist toward +x.

The plane spanned by the upper arm and forearm is the *workplane*; its
origin sits at D, its normal is the shared pitch/elbow axis, and only
theta3/theta4 move within it, so planar positions are independent of the
shoulder angles by construction.  Workplane coordinates are (y, z) in the
plane's own frame: y along the in-plane swing direction (world +x at the
zero shoulder pose), z along the local up axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, NotInSubgroup

TWO_PI = 2.0 * math.pi

#: Default radial margin (m) kept away from the workplane reach boundary so
#: that clamped targets remain solvable with a well-conditioned elbow angle.
REACH_MARGIN = 1e-6

Interval = tuple[float, float]


@dataclass(frozen=True)
class ArmGeometry:
    """Link lengths (m) and per-joint closed limit intervals (rad) of one arm.

    ``l1`` is the shoulder-to-deltoid offset O->D, ``l2`` the upper arm D->E,
    ``l3`` the forearm E->W.  Limit intervals must be non-empty and contained
    in (-pi, pi].
    """

    l1: float
    l2: float
    l3: float
    limits: tuple[Interval, Interval, Interval, Interval]

    def __post_init__(self):
        if not (math.isfinite(self.l1) and self.l1 >= 0.0):
            raise ValueError("l1 must be finite and >= 0")
        if not (math.isfinite(self.l2) and self.l2 > 0.0):
            raise ValueError("l2 must be finite and > 0")
        if not (math.isfinite(self.l3) and self.l3 > 0.0):
            raise ValueError("l3 must be finite and > 0")
        if len(self.limits) != 4:
            raise ValueError("limits must contain four intervals")
        clean = []
        for k, (lo, hi) in enumerate(self.limits):
            lo, hi = float(lo), float(hi)
            if not (-math.pi < lo <= hi <= math.pi):
                raise ValueError(
                    f"limit interval for theta{k + 1} must be non-empty and within (-pi, pi]"
                )
            clean.append((lo, hi))
        object.__setattr__(self, "limits", tuple(clean))

    @property
    def arm_length(self) -> float:
        """Two-link chain length l2 + l3 used for workplane scaling."""
        return self.l2 + self.l3

    @property
    def total_length(self) -> float:
        return self.l1 + self.l2 + self.l3

    def scaled(self, factor: float) -> "ArmGeometry":
        """Same proportions and limits with all links scaled by ``factor``."""
        return ArmGeometry(self.l1 * factor, self.l2 * factor, self.l3 * factor, self.limits)


@dataclass(frozen=True)
class JointPose:
    """Topological joint vector (theta1..theta4), ordered by the rotational sequence."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3", "theta4"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.theta2, self.theta3, self.theta4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    @classmethod
    def from_sequence(cls, seq) -> "JointPose":
        t1, t2, t3, t4 = (float(v) for v in seq)
        return cls(t1, t2, t3, t4)

    def within_limits(self, geometry: ArmGeometry, tol: float = 0.0) -> bool:
        return all(
            lo - tol <= v <= hi + tol
            for v, (lo, hi) in zip(self.as_tuple(), geometry.limits)
        )

    def clamped(self, geometry: ArmGeometry) -> "JointPose":
        """Componentwise saturation into the geometry's limit intervals."""
        return JointPose(
            *(clamp(v, lo, hi) for v, (lo, hi) in zip(self.as_tuple(), geometry.limits))
        )


ZERO_POSE = JointPose(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Rotation:
    """3x3 rotation matrix, validated orthonormal with determinant +1."""

    matrix: np.ndarray

    ORTHONORMAL_TOL = 1e-9

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        if not np.all(np.isfinite(m)):
            raise ValueError("rotation matrix must be finite")
        if np.max(np.abs(m.T @ m - np.eye(3))) > self.ORTHONORMAL_TOL:
            raise ValueError("matrix columns are not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > self.ORTHONORMAL_TOL:
            raise ValueError("matrix determinant is not +1")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def transpose(self) -> "Rotation":
        return Rotation(self.matrix.T.copy())


@dataclass(frozen=True)
class PlanarPoint:
    """Position (m) in the workplane frame at the deltoid: y along the
    in-plane swing direction, z along the local up axis."""

    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("planar point must be finite")

    def as_tuple(self) -> tuple[float, float]:
        return (self.y, self.z)

    def norm(self) -> float:
        return math.hypot(self.y, self.z)


@dataclass(frozen=True)
class ArmPoints:
    """Deltoid, elbow, and wrist positions (m) in the inertial shoulder frame."""

    p_d: np.ndarray
    p_e: np.ndarray
    p_w: np.ndarray


def clamp(v: float, lo: float, hi: float) -> float:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


# ---------------------------------------------------------------------------
# Scalar core.  These free functions carry the actual math; the typed API
# below wraps them, and the simulation engines evaluate them per tick (the
# compiled engine mirrors them expression for expression, so keep any edits
# in sync with _core/_engine.pyx).
# ---------------------------------------------------------------------------


def rot_shoulder_entries(theta1: float, theta2: float):
    """Row-major entries of R_z(theta1) @ R_x(-theta2)."""
    c1 = math.cos(theta1)
    s1 = math.sin(theta1)
    c2 = math.cos(theta2)
    s2 = math.sin(theta2)
    return (
        c1, -s1 * c2, -s1 * s2,
        s1, c1 * c2, c1 * s2,
        0.0, -s2, c2,
    )


def workplane_point(l2: float, l3: float, t3: float, t4: float) -> tuple[float, float]:
    """Wrist position in the workplane frame for the two-link chain."""
    y = l2 * math.sin(t3) + l3 * math.sin(t3 + t4)
    z = -(l2 * math.cos(t3) + l3 * math.cos(t3 + t4))
    return y, z


def wrist_point(
    l1: float, l2: float, l3: float, t1: float, t2: float, t3: float, t4: float
) -> tuple[float, float, float]:
    """Inertial-frame wrist position of the full four-joint chain."""
    c1 = math.cos(t1)
    s1 = math.sin(t1)
    c2 = math.cos(t2)
    s2 = math.sin(t2)
    ut = l2 * math.sin(t3) + l3 * math.sin(t3 + t4)
    uz = -(l1 + l2 * math.cos(t3) + l3 * math.cos(t3 + t4))
    px = c1 * ut + (-s1 * s2) * uz
    py = s1 * ut + (c1 * s2) * uz
    pz = c2 * uz
    return px, py, pz


def ik_workplane_scalar(
    l2: float,
    l3: float,
    y: float,
    z: float,
    lim3_lo: float,
    lim3_hi: float,
    reach_margin: float = REACH_MARGIN,
) -> tuple[float, float, bool]:
    """Planar two-link inverse kinematics with elbow branch t4 in [0, pi).

    Targets outside the reachable annulus are projected radially onto the
    nearest reachable radius (minus ``reach_margin``) and flagged clamped.
    The shoulder-pitch solution is returned in whichever 2*pi branch falls
    inside [lim3_lo, lim3_hi] when one exists, so composing with the forward
    workplane map is the identity on every in-limit pose.
    """
    r = math.sqrt(y * y + z * z)
    r_min = abs(l2 - l3) + reach_margin
    r_max = (l2 + l3) - reach_margin
    clamped = False
    if r < r_min:
        clamped = True
        if r == 0.0:
            y = 0.0
            z = -r_min
        else:
            s = r_min / r
            y = y * s
            z = z * s
    elif r > r_max:
        clamped = True
        s = r_max / r
        y = y * s
        z = z * s
    by = y
    bz = -z
    c4 = (by * by + bz * bz - l2 * l2 - l3 * l3) / (2.0 * l2 * l3)
    if c4 > 1.0:
        c4 = 1.0
    elif c4 < -1.0:
        c4 = -1.0
    t4 = math.acos(c4)
    psi = math.atan2(l3 * math.sin(t4), l2 + l3 * c4)
    t3 = math.atan2(by, bz) - psi
    if t3 > math.pi:
        t3 -= TWO_PI
    elif t3 <= -math.pi:
        t3 += TWO_PI
    if not (lim3_lo <= t3 <= lim3_hi):
        if lim3_lo <= t3 + TWO_PI <= lim3_hi:
            t3 += TWO_PI
        elif lim3_lo <= t3 - TWO_PI <= lim3_hi:
            t3 -= TWO_PI
    return t3, t4, clamped


# ---------------------------------------------------------------------------
# Typed operations.
# ---------------------------------------------------------------------------


def shoulder_orientation(theta1: float, theta2: float) -> Rotation:
    """Deltoid orientation R_z(theta1) @ R_x(-theta2) for shoulder yaw and roll."""
    e = rot_shoulder_entries(theta1, theta2)
    return Rotation(np.array(e).reshape(3, 3))


def decompose_shoulder(rotation, tol: float = 1e-6) -> tuple[float, float]:
    """Recover (theta1, theta2) from a yaw-roll shoulder orientation.

    Raises NotInSubgroup when the matrix is not expressible as
    R_z(a) @ R_x(-b) within ``tol`` (Frobenius norm of the reconstruction
    residual), which signals an invalid captured orientation.
    """
    if isinstance(rotation, Rotation):
        m = rotation.matrix
    else:
        m = Rotation(np.asarray(rotation, dtype=float)).matrix
    a = math.atan2(m[1, 0], m[0, 0])
    b = math.atan2(-m[2, 1], m[2, 2])
    recon = np.array(rot_shoulder_entries(a, b)).reshape(3, 3)
    residual = float(np.linalg.norm(recon - m))
    if residual > tol:
        raise NotInSubgroup(
            f"orientation is not a yaw-roll composition (residual {residual:.3e} > {tol:.1e})"
        )
    return a, b


def forward_arm(g: ArmGeometry, pose: JointPose) -> ArmPoints:
    """Deltoid/elbow/wrist positions of the chain in the inertial frame."""
    t1, t2, t3, t4 = pose.as_tuple()
    r = rot_shoulder_entries(t1, t2)
    # Local chain points share the rotated shoulder frame; each link lies in
    # the local x-z plane at its accumulated pitch angle.
    d_t, d_z = 0.0, -g.l1
    e_t = d_t + g.l2 * math.sin(t3)
    e_z = d_z - g.l2 * math.cos(t3)
    w_t = e_t + g.l3 * math.sin(t3 + t4)
    w_z = e_z - g.l3 * math.cos(t3 + t4)

    def to_world(t, z):
        return np.array(
            (r[0] * t + r[2] * z, r[3] * t + r[5] * z, r[6] * t + r[8] * z)
        )

    return ArmPoints(to_world(d_t, d_z), to_world(e_t, e_z), to_world(w_t, w_z))


def workplane_position(g: ArmGeometry, pose: JointPose) -> PlanarPoint:
    """Wrist position relative to the deltoid, expressed in the workplane.

    Independent of theta1/theta2 by construction: theta3 and theta4 rotate
    about the workplane normal, so the planar coordinates depend on the
    elbow chain alone.
    """
    y, z = workplane_point(g.l2, g.l3, pose.theta3, pose.theta4)
    return PlanarPoint(y, z)


def ik_workplane(
    g: ArmGeometry, target: PlanarPoint, reach_margin: float = REACH_MARGIN
) -> tuple[float, float, bool]:
    """Solve (theta3, theta4) bringing the wrist to ``target`` in the workplane.

    Returns ``(theta3, theta4, clamped)`` where ``clamped`` reports radial
    projection of an unreachable target onto the reach boundary.
    """
    if g.l2 <= 0.0 or g.l3 <= 0.0:
        raise DegenerateGeometry("workplane IK requires l2 > 0 and l3 > 0")
    lo3, hi3 = g.limits[2]
    return ik_workplane_scalar(g.l2, g.l3, target.y, target.z, lo3, hi3, reach_margin)
