"""Core geometric types and rigid-transform helpers.

Conventions used throughout the package:

* LiDAR frame: right-handed, meters.  Camera frame: x right, y down,
  z forward (optical axis).  The extrinsic maps LiDAR points into the
  camera frame, ``p_cam = R @ p_lidar + t``.
* Euler perturbations are intrinsic Z-Y-X (yaw, pitch, roll applied in
  that order), expressed in degrees at every public interface.  Radians
  are an implementation detail.
* Perturbations act on the camera side: the delta rotation is
  left-multiplied onto the base rotation and the translation offset is
  added in the camera frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


def _as_readonly(a: np.ndarray, shape: tuple, name: str) -> np.ndarray:
    if (isinstance(a, np.ndarray) and a.dtype == np.float64
            and not a.flags.writeable and a.shape == shape):
        return a
    out = np.array(a, dtype=np.float64)
    if out.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Point:
    """A single LiDAR return.

    ``normal`` is a unit vector or the all-zero sentinel meaning "no
    reliable normal".  ``label`` is a small non-negative segment id, or
    -1 for noise / unsegmented points.
    """

    x: float
    y: float
    z: float
    reflectivity: float
    nx: float = 0.0
    ny: float = 0.0
    nz: float = 0.0
    label: int = -1

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    def has_normal(self) -> bool:
        return self.nx != 0.0 or self.ny != 0.0 or self.nz != 0.0


@dataclass(frozen=True)
class PointCloud:
    """Column-oriented, immutable point cloud.

    The cloud itself is the ordered point sequence: ``len(cloud)``,
    ``cloud[i]`` and iteration yield :class:`Point` views in storage
    order.  Point order is part of the contract; operations that build
    new clouds preserve it.
    """

    positions: np.ndarray      # (n, 3) float64
    reflectivity: np.ndarray   # (n,) float64 in [0, 1]
    normals: np.ndarray        # (n, 3) float64, rows unit or zero
    labels: np.ndarray         # (n,) int32, -1 = noise

    def __post_init__(self) -> None:
        def keep(a, dtype):
            # Reuse arrays this class already froze; copy anything else.
            if isinstance(a, np.ndarray) and a.dtype == dtype and not a.flags.writeable:
                return a
            return np.array(a, dtype=dtype)

        pos = keep(self.positions, np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] == 0:
            raise ValueError("positions must be a non-empty (n, 3) array")
        n = pos.shape[0]
        refl = keep(self.reflectivity, np.float64)
        normals = keep(self.normals, np.float64)
        labels = keep(self.labels, np.int32)
        if refl.shape != (n,) or normals.shape != (n, 3) or labels.shape != (n,):
            raise ValueError("attribute arrays must match the point count")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(refl))
                and np.all(np.isfinite(normals))):
            raise ValueError("cloud arrays must be finite")
        for arr, name in ((pos, "positions"), (refl, "reflectivity"),
                          (normals, "normals"), (labels, "labels")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_arrays(cls, positions, reflectivity, normals=None, labels=None) -> "PointCloud":
        n = np.asarray(positions).shape[0]
        if normals is None:
            normals = np.zeros((n, 3))
        if labels is None:
            labels = np.full(n, -1, dtype=np.int32)
        return cls(positions, reflectivity, normals, labels)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, i: int) -> Point:
        p = self.positions[i]
        nrm = self.normals[i]
        return Point(float(p[0]), float(p[1]), float(p[2]),
                     float(self.reflectivity[i]),
                     float(nrm[0]), float(nrm[1]), float(nrm[2]),
                     int(self.labels[i]))

    def __iter__(self) -> Iterator[Point]:
        for i in range(len(self)):
            yield self[i]

    def with_attributes(self, reflectivity=None, normals=None, labels=None) -> "PointCloud":
        """Return a new cloud sharing positions, with some attributes replaced."""
        return PointCloud(
            self.positions,
            self.reflectivity if reflectivity is None else reflectivity,
            self.normals if normals is None else normals,
            self.labels if labels is None else labels,
        )


@dataclass(frozen=True)
class PixelCoord:
    """Continuous image coordinates; the containing pixel is ``(floor(u), floor(v))``."""

    u: float
    v: float

    def pixel(self) -> tuple:
        return (math.floor(self.u), math.floor(self.v))


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole camera matrix plus image size in pixels."""

    k: np.ndarray  # (3, 3)
    width: int
    height: int

    def __post_init__(self) -> None:
        k = _as_readonly(self.k, (3, 3), "k")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise ValueError("focal lengths must be positive")
        if not np.array_equal(k[2], [0.0, 0.0, 1.0]):
            raise ValueError("bottom row of k must be (0, 0, 1)")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ValueError("image size must be positive")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @classmethod
    def from_params(cls, fx: float, fy: float, cx: float, cy: float,
                    width: int, height: int, skew: float = 0.0) -> "Intrinsics":
        k = np.array([[fx, skew, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
        return cls(k, width, height)

    @property
    def fx(self) -> float:
        return float(self.k[0, 0])

    @property
    def fy(self) -> float:
        return float(self.k[1, 1])

    @property
    def cx(self) -> float:
        return float(self.k[0, 2])

    @property
    def cy(self) -> float:
        return float(self.k[1, 2])


_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Extrinsic:
    """Rigid transform from the LiDAR frame to the camera frame."""

    rotation: np.ndarray     # (3, 3), orthonormal, det +1
    translation: np.ndarray  # (3,), meters

    def __post_init__(self) -> None:
        r = _as_readonly(self.rotation, (3, 3), "rotation")
        t = _as_readonly(self.translation, (3,), "translation")
        if not np.allclose(r.T @ r, np.eye(3), atol=_ORTHO_TOL):
            raise ValueError("rotation must be orthonormal")
        if abs(float(np.linalg.det(r)) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Extrinsic":
        return cls(np.eye(3), np.zeros(3))

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Extrinsic":
        rt = self.rotation.T
        return Extrinsic(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (n, 3) array of points into the camera frame."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class EulerDelta:
    """Small perturbation of an extrinsic: degrees for angles, meters for offsets."""

    d_roll: float = 0.0
    d_pitch: float = 0.0
    d_yaw: float = 0.0
    d_tx: float = 0.0
    d_ty: float = 0.0
    d_tz: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.d_roll, self.d_pitch, self.d_yaw,
                self.d_tx, self.d_ty, self.d_tz)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("delta components must be finite")

    def is_zero(self) -> bool:
        return (self.d_roll == 0.0 and self.d_pitch == 0.0 and self.d_yaw == 0.0
                and self.d_tx == 0.0 and self.d_ty == 0.0 and self.d_tz == 0.0)

    @property
    def rotation_part(self) -> tuple:
        return (self.d_roll, self.d_pitch, self.d_yaw)

    @property
    def translation_part(self) -> tuple:
        return (self.d_tx, self.d_ty, self.d_tz)


def rotation_from_euler_deg(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix for intrinsic Z-Y-X Euler angles given in degrees.

    Equivalent to ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
    """
    rr, rp, ry = (math.radians(a) for a in (roll, pitch, yaw))
    cr, sr = math.cos(rr), math.sin(rr)
    cp, sp = math.cos(rp), math.sin(rp)
    cy, sy = math.cos(ry), math.sin(ry)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry_m = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry_m @ rx


def rotation_from_axis_angle(axis, angle_deg: float) -> np.ndarray:
    """Rotation matrix for a given axis (any nonzero vector) and angle in degrees."""
    ax = np.asarray(axis, dtype=np.float64)
    norm = float(np.linalg.norm(ax))
    if norm == 0.0:
        raise ValueError("axis must be nonzero")
    x, y, z = ax / norm
    c = math.cos(math.radians(angle_deg))
    s = math.sin(math.radians(angle_deg))
    cross = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return c * np.eye(3) + s * cross + (1.0 - c) * np.outer([x, y, z], [x, y, z])


def compose_delta(base: Extrinsic, delta: EulerDelta) -> Extrinsic:
    """Apply a camera-frame perturbation to a base extrinsic.

    The delta rotation is left-multiplied (``R_new = R_delta @ R_base``)
    and the translation offset is added (``t_new = t_base + dt``), so a
    zero delta returns the base transform unchanged.
    """
    r_delta = rotation_from_euler_deg(delta.d_roll, delta.d_pitch, delta.d_yaw)
    t_new = base.translation + np.array(delta.translation_part)
    return Extrinsic(r_delta @ base.rotation, t_new)


def rotation_angle_between(a: Extrinsic, b: Extrinsic) -> float:
    """Geodesic angle in degrees between two extrinsics' rotations."""
    trace = float(np.trace(a.rotation @ b.rotation.T))
    # Clamp: float error can push the cosine a hair outside [-1, 1].
    cos_ang = min(1.0, max(-1.0, (trace - 1.0) / 2.0))
    return math.degrees(math.acos(cos_ang))


def translation_distance(a: Extrinsic, b: Extrinsic) -> float:
    """Euclidean distance in meters between two extrinsics' translations."""
    return float(np.linalg.norm(a.translation - b.translation))
