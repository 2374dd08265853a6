"""Rigid-body transforms between named frames, angle-axis rotations, and an
ideal distortion-free pinhole camera.

Frame labels are free-form strings. Composition checks frame adjacency so a
chain of transforms cannot silently mix coordinate systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Construction accepts rotations up to this far from orthonormal; values
# produced by the library itself stay within 1e-9.
ORTHONORMAL_TOL = 1e-6

_ZERO_ANGLE_EPS = 1e-9
_PI_ANGLE_EPS = 1e-6


def rot_x(angle: float) -> np.ndarray:
    """Rotation matrix about the x axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    """Rotation matrix about the y axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    """Rotation matrix about the z axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


_EYE3 = np.eye(3)


def _rotation_defect(r: np.ndarray) -> float:
    # Closed-form determinant: np.linalg.det dominates hot paths on 3x3s.
    det = (
        r[0, 0] * (r[1, 1] * r[2, 2] - r[1, 2] * r[2, 1])
        - r[0, 1] * (r[1, 0] * r[2, 2] - r[1, 2] * r[2, 0])
        + r[0, 2] * (r[1, 0] * r[2, 1] - r[1, 1] * r[2, 0])
    )
    return float(max(np.abs(r.T @ r - _EYE3).max(), abs(det - 1.0)))


def check_rotation(r: np.ndarray, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    """Return ``r`` as a float array, raising if it is not a proper rotation."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got shape {r.shape}")
    defect = _rotation_defect(r)
    if defect > tol:
        raise ValueError(
            f"matrix is not a proper rotation (orthonormality defect {defect:.3e} > {tol:.1e})"
        )
    return r


def orthonormalize(r: np.ndarray) -> np.ndarray:
    """Project a nearly-orthonormal matrix back onto SO(3).

    Two Newton steps of the polar decomposition; exact to ~1e-15 for the
    small drift produced by Euler integration.
    """
    for _ in range(2):
        r = r @ (1.5 * np.eye(3) - 0.5 * (r.T @ r))
    return r


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping points in ``from_frame`` to ``to_frame``.

    ``p_to = rotation @ p_from + translation``; ``translation`` is therefore
    the position of the ``from_frame`` origin expressed in ``to_frame``.
    """

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str
    to_frame: str

    def __post_init__(self):
        object.__setattr__(self, "rotation", check_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not (math.isfinite(t[0]) and math.isfinite(t[1]) and math.isfinite(t[2])):
            raise ValueError("translation has non-finite components")
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, frame: str, to_frame: str | None = None) -> "Pose":
        return cls(np.eye(3), np.zeros(3), frame, to_frame if to_frame is not None else frame)

    def transform(self, point: np.ndarray) -> np.ndarray:
        """Map a point from ``from_frame`` coordinates into ``to_frame``."""
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


def compose(a: Pose, b: Pose) -> Pose:
    """Chain two transforms: the result maps ``b.from_frame`` to ``a.to_frame``."""
    if a.from_frame != b.to_frame:
        raise ValueError(
            f"cannot compose: left transform expects frame '{a.from_frame}' "
            f"but right transform produces frame '{b.to_frame}'"
        )
    return Pose(
        a.rotation @ b.rotation,
        a.rotation @ b.translation + a.translation,
        b.from_frame,
        a.to_frame,
    )


def invert(p: Pose) -> Pose:
    """Inverse transform, mapping ``to_frame`` back to ``from_frame``."""
    rt = p.rotation.T
    return Pose(rt, -rt @ p.translation, p.to_frame, p.from_frame)


@dataclass(frozen=True)
class AngleAxis:
    """Rotation as a unit axis and an angle in [0, pi].

    The zero rotation is canonicalized to axis (0, 0, 1). At angle pi, where
    the axis sign is ambiguous, the first nonzero axis component is positive.
    """

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        angle = float(self.angle)
        if angle < 0.0 or angle > math.pi + 1e-12:
            raise ValueError(f"angle must lie in [0, pi], got {angle}")
        if angle > _ZERO_ANGLE_EPS:
            n = float(np.linalg.norm(axis))
            if abs(n - 1.0) > 1e-9:
                raise ValueError(f"axis must be a unit vector, norm was {n}")
        else:
            axis = np.array([0.0, 0.0, 1.0])
            angle = 0.0
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", angle)

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "AngleAxis":
        """Build from a rotation vector (axis scaled by angle)."""
        vec = np.asarray(vec, dtype=float).reshape(3)
        angle = float(np.linalg.norm(vec))
        if angle <= _ZERO_ANGLE_EPS:
            return cls(np.array([0.0, 0.0, 1.0]), 0.0)
        return cls(vec / angle, angle)

    def as_vector(self) -> np.ndarray:
        return self.axis * self.angle


def angle_axis_to_rotation(aa: AngleAxis) -> np.ndarray:
    """Rodrigues formula: R = I + sin(t) K + (1 - cos(t)) K^2."""
    k = np.array(
        [
            [0.0, -aa.axis[2], aa.axis[1]],
            [aa.axis[2], 0.0, -aa.axis[0]],
            [-aa.axis[1], aa.axis[0], 0.0],
        ]
    )
    return np.eye(3) + math.sin(aa.angle) * k + (1.0 - math.cos(aa.angle)) * (k @ k)


def rotation_to_angle_axis(r: np.ndarray) -> AngleAxis:
    """Angle-axis extraction with a dedicated branch for angles near pi."""
    r = check_rotation(r)
    cos_angle = min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0))
    angle = math.acos(cos_angle)
    if angle <= _ZERO_ANGLE_EPS:
        return AngleAxis(np.array([0.0, 0.0, 1.0]), 0.0)
    if math.pi - angle < _PI_ANGLE_EPS:
        # Near pi the skew part vanishes; recover the axis from (R + I)/2,
        # whose diagonal is axis_i^2 and whose rows fix the relative signs.
        b = (r + np.eye(3)) / 2.0
        k = int(np.argmax(np.diag(b)))
        axis = b[k] / math.sqrt(max(b[k, k], 1e-300))
        axis = axis / np.linalg.norm(axis)
        for component in axis:
            if abs(component) > 1e-9:
                if component < 0.0:
                    axis = -axis
                break
        return AngleAxis(axis, angle)
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    axis = axis / (2.0 * math.sin(angle))
    axis = axis / np.linalg.norm(axis)
    return AngleAxis(axis, angle)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics plus the camera frame period in seconds."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    frame_period: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 < self.cx < self.width):
            raise ValueError(f"principal point cx={self.cx} outside (0, {self.width})")
        if not (0 < self.cy < self.height):
            raise ValueError(f"principal point cy={self.cy} outside (0, {self.height})")
        if self.frame_period <= 0:
            raise ValueError(f"frame_period must be positive, got {self.frame_period}")


@dataclass(frozen=True)
class OutOfView:
    """Projection failure value; ``reason`` is 'behind-camera' or 'outside-frame'."""

    reason: str


def project_point(point_in_camera: np.ndarray, k: CameraIntrinsics):
    """Project a camera-frame point to a pixel, or report why it is not visible.

    Returns an (u, v) tuple for points with positive depth landing inside
    [0, width] x [0, height], otherwise an OutOfView value.
    """
    p = np.asarray(point_in_camera, dtype=float).reshape(3)
    if p[2] <= 0.0:
        return OutOfView("behind-camera")
    u = k.fx * p[0] / p[2] + k.cx
    v = k.fy * p[1] / p[2] + k.cy
    if u < 0.0 or u > k.width or v < 0.0 or v > k.height:
        return OutOfView("outside-frame")
    return (u, v)


def fov_half_angle(k: CameraIntrinsics) -> float:
    """Half field of view of the limiting image axis.

    Using the min over axes guarantees that a centered square of the
    corresponding angular extent fits in both image dimensions.
    """
    return min(
        math.atan(k.width / (2.0 * k.fx)),
        math.atan(k.height / (2.0 * k.fy)),
    )
