"""Pinhole camera models, SE(3) poses, and keyframed camera trajectories.

Conventions used throughout the package:

* Extrinsics are world-to-camera: ``x_cam = R @ x_world + t``.
* Camera space is +X right, +Y down, +Z forward; pixel origin top-left.
* The world frame is the source camera frame, so an all-zero keyframe
  compiles to the identity pose.
* Orbit parameters (yaw/pitch/roll, degrees) rotate the camera rig about a
  pivot point on the source optical axis at ``(0, 0, pivot_depth)``;
  truck/pedestal/dolly then translate the camera center along its own
  +X/+Y/+Z axes.  Rotations are right-handed about the respective axis, so
  positive yaw swings the camera toward world -X while it keeps facing the
  pivot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TrajectorySemanticError

__all__ = [
    "CameraModel",
    "Pose",
    "Keyframe",
    "Trajectory",
    "sample_poses",
    "invert_pose",
    "max_view_angle",
    "rotation_angle_deg",
]

_ORTHO_TOL = 1e-9


def _frozen_array(values, dtype, shape) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def intrinsic_matrix(self) -> np.ndarray:
        """3x3 intrinsic matrix K."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid transform ``x_cam = rotation @ x_world + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "rotation", _frozen_array(self.rotation, np.float64, (3, 3))
        )
        object.__setattr__(
            self, "translation", _frozen_array(self.translation, np.float64, (3,))
        )
        residual = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if residual > _ORTHO_TOL:
            raise ValueError(f"rotation is not orthonormal (residual {residual:.3g})")
        if abs(np.linalg.det(self.rotation) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant must be +1")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """Pose applying ``other`` first, then ``self``."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Pose":
        rot = self.rotation.T
        return Pose(rot, -rot @ self.translation)

    def camera_center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous world-to-camera matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 matrix, got {m.shape}")
        return cls(m[:3, :3], m[:3, 3])


def invert_pose(pose: Pose) -> Pose:
    """Inverse transform: composing a pose with its inverse is the identity."""
    return pose.inverse()


def rotation_angle_deg(rotation: np.ndarray) -> float:
    """Geodesic angle in degrees between a rotation matrix and the identity."""
    cos_angle = (float(np.trace(rotation)) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos_angle))))


# --- quaternion helpers (w, x, y, z) ---------------------------------------


def _quat_from_matrix(r: np.ndarray) -> np.ndarray:
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] >= r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    return q / np.linalg.norm(q)


def _matrix_from_quat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _slerp(q0: np.ndarray, q1: np.ndarray, s: float) -> np.ndarray:
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 0.9995:
        # nearly parallel: normalized lerp avoids a degenerate divisor
        out = q0 + s * (q1 - q0)
        return out / np.linalg.norm(out)
    theta0 = math.acos(min(1.0, dot))
    sin0 = math.sin(theta0)
    theta = theta0 * s
    c0 = math.cos(theta) - dot * math.sin(theta) / sin0
    c1 = math.sin(theta) / sin0
    return c0 * q0 + c1 * q1


def _rot_x(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# --- trajectories -----------------------------------------------------------


@dataclass(frozen=True)
class Keyframe:
    """Camera parameters pinned at one frame index.

    Angles are degrees; truck/pedestal/dolly are scene depth units along the
    camera +X/+Y/+Z axes.
    """

    index: int
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    truck: float = 0.0
    pedestal: float = 0.0
    dolly: float = 0.0

    def is_zero(self) -> bool:
        return all(
            v == 0.0
            for v in (self.yaw, self.pitch, self.roll, self.truck, self.pedestal, self.dolly)
        )

    def orbit_rotation(self) -> np.ndarray:
        """Rig rotation, composed yaw then pitch then roll."""
        if self.yaw == 0.0 and self.pitch == 0.0 and self.roll == 0.0:
            return np.eye(3)
        return _rot_y(self.yaw) @ _rot_x(self.pitch) @ _rot_z(self.roll)


@dataclass(frozen=True)
class Trajectory:
    """Named keyframe sequence compilable to one pose per frame."""

    name: str
    frame_count: int
    keyframes: tuple[Keyframe, ...]
    pivot: float | None = None  # None means "auto": caller supplies a depth
    interp_mode: str = "slerp"

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        if self.frame_count <= 0:
            raise TrajectorySemanticError(
                f"frame count must be positive, got {self.frame_count}"
            )
        if not self.keyframes:
            raise TrajectorySemanticError("trajectory needs at least one keyframe")
        if self.keyframes[0].index != 0:
            raise TrajectorySemanticError(
                f"first keyframe must be at index 0, got {self.keyframes[0].index}"
            )
        indices = [kf.index for kf in self.keyframes]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise TrajectorySemanticError(
                f"keyframe indices must be strictly increasing, got {indices}"
            )
        if indices[-1] >= self.frame_count:
            raise TrajectorySemanticError(
                f"keyframe index {indices[-1]} outside {self.frame_count}-frame trajectory"
            )
        if self.interp_mode not in ("slerp", "linear"):
            raise TrajectorySemanticError(f"unknown interp mode {self.interp_mode!r}")
        if self.pivot is not None and self.pivot <= 0:
            raise TrajectorySemanticError("explicit pivot depth must be positive")


def _keyframe_pose(rotation: np.ndarray, shift: np.ndarray, pivot_depth: float) -> Pose:
    """Pose of a camera orbited about ``(0, 0, pivot_depth)`` then shifted
    by ``shift`` along its own axes."""
    pivot = np.array([0.0, 0.0, pivot_depth])
    center = pivot - rotation @ pivot + rotation @ shift
    return Pose(rotation.T, -rotation.T @ center)


def _keyframe_shift(kf: Keyframe) -> np.ndarray:
    return np.array([kf.truck, kf.pedestal, kf.dolly])


def sample_poses(traj: Trajectory, pivot_depth: float) -> list[Pose]:
    """Compile a trajectory to one world-to-camera pose per frame.

    ``pivot_depth`` resolves a "pivot auto" trajectory (typically the median
    valid scene depth of frame 0); an explicit pivot in the trajectory wins.
    Keyframe poses are exact compositions; frames in between interpolate the
    rig rotation (quaternion slerp, or per-angle lerp in linear mode) and
    lerp the truck/pedestal/dolly shift, then recompose about the pivot, so
    interpolated cameras stay on the orbit arc.  Frames past the last
    keyframe hold its pose.
    """
    pivot = traj.pivot if traj.pivot is not None else float(pivot_depth)
    if pivot <= 0:
        raise ValueError("pivot depth must be positive")

    kfs = traj.keyframes
    rotations = [kf.orbit_rotation() for kf in kfs]
    quats = [_quat_from_matrix(r) for r in rotations]
    shifts = [_keyframe_shift(kf) for kf in kfs]

    poses: list[Pose] = []
    seg = 0
    for frame in range(traj.frame_count):
        while seg + 1 < len(kfs) and kfs[seg + 1].index <= frame:
            seg += 1
        if frame <= kfs[seg].index or seg + 1 >= len(kfs):
            # at a keyframe, or holding after the last one
            poses.append(_keyframe_pose(rotations[seg], shifts[seg], pivot))
            continue
        a, b = seg, seg + 1
        s = (frame - kfs[a].index) / (kfs[b].index - kfs[a].index)
        if traj.interp_mode == "slerp":
            rot = _matrix_from_quat(_slerp(quats[a], quats[b], s))
        else:
            yaw = kfs[a].yaw + s * (kfs[b].yaw - kfs[a].yaw)
            pitch = kfs[a].pitch + s * (kfs[b].pitch - kfs[a].pitch)
            roll = kfs[a].roll + s * (kfs[b].roll - kfs[a].roll)
            rot = _rot_y(yaw) @ _rot_x(pitch) @ _rot_z(roll)
        shift = shifts[a] + s * (shifts[b] - shifts[a])
        poses.append(_keyframe_pose(rot, shift, pivot))
    return poses


def max_view_angle(traj: Trajectory) -> float:
    """Largest geodesic rotation angle (degrees) any frame reaches from the
    source view.  Rotation is pivot-independent, so any pivot resolves it."""
    poses = sample_poses(traj, pivot_depth=1.0)
    return max(rotation_angle_deg(p.rotation) for p in poses)
