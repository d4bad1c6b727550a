"""Pinhole camera model, voxel grids and the analytic box-size depth relation.

World frame: z-up, ground plane z = 0, millimetres everywhere. Camera frame:
x right, y down, z forward (depth). Pixel coordinates put pixel centres at
integer (u, v) with u along the image width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class BehindCameraError(ValueError):
    pass


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    R: np.ndarray  # 3x3, world -> camera
    t: np.ndarray  # 3, mm
    width: int
    height: int

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        self.t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        ortho = np.abs(self.R.T @ self.R - np.eye(3)).max()
        if ortho >= 1e-9:
            raise ValueError(f"rotation not orthonormal (|R^T R - I| = {ortho:.3e})")
        if abs(np.linalg.det(self.R) - 1.0) >= 1e-9:
            raise ValueError("rotation determinant must be +1")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "R": [float(x) for x in self.R.ravel()],
            "t": [float(x) for x in self.t],
            "w": self.width, "h": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(fx=d["fx"], fy=d["fy"], cx=d["cx"], cy=d["cy"],
                   R=np.array(d["R"], dtype=np.float64).reshape(3, 3),
                   t=np.array(d["t"], dtype=np.float64),
                   width=d["w"], height=d["h"])


@dataclass
class GridSpec:
    """Axis-aligned voxel grid; voxel (i,j,k) is centred at origin + (i+.5, j+.5, k+.5)*size."""

    origin: np.ndarray  # mm, corner of voxel (0,0,0)
    voxel_size: np.ndarray  # mm per axis
    dims: tuple[int, int, int]

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.voxel_size = np.asarray(self.voxel_size, dtype=np.float64).reshape(3)
        self.dims = tuple(int(d) for d in self.dims)
        if not np.all(self.voxel_size > 0):
            raise ValueError("voxel_size must be positive on every axis")
        if any(d < 1 for d in self.dims):
            raise ValueError("grid dims must be >= 1")

    @property
    def n_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def to_dict(self) -> dict:
        return {"origin": [float(x) for x in self.origin],
                "voxel_size": [float(x) for x in self.voxel_size],
                "dims": list(self.dims)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(origin=np.array(d["origin"]), voxel_size=np.array(d["voxel_size"]),
                   dims=tuple(d["dims"]))


@dataclass
class BodyHeights:
    h_real: float  # standing height, mm
    h_pose: float  # pose-dependent vertical extent, mm

    def __post_init__(self):
        if self.h_real <= 0:
            raise ValueError("h_real must be positive")
        g = self.gamma_pose
        if not (0 < g <= 1.2):
            raise ValueError(f"gamma_pose {g:.3f} outside (0, 1.2]")

    @property
    def gamma_pose(self) -> float:
        return self.h_pose / self.h_real


def camera_frame(cam: CameraModel, pts: np.ndarray) -> np.ndarray:
    """World -> camera for an (..., 3) array.

    Written elementwise (no matmul) so vectorized and scalar callers produce
    bit-identical float64 results.
    """
    pts = np.asarray(pts, dtype=np.float64)
    R, t = cam.R, cam.t
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    xc = x * R[0, 0] + y * R[0, 1] + z * R[0, 2] + t[0]
    yc = x * R[1, 0] + y * R[1, 1] + z * R[1, 2] + t[1]
    zc = x * R[2, 0] + y * R[2, 1] + z * R[2, 2] + t[2]
    return np.stack([xc, yc, zc], axis=-1)


def project_points(cam: CameraModel, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project (..., 3) world points; returns (u, v, depth) without validity checks.

    Entries with depth <= 0 are behind the camera; callers mask them.
    """
    pc = camera_frame(cam, pts)
    zc = pc[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * pc[..., 0] / zc + cam.cx
        v = cam.fy * pc[..., 1] / zc + cam.cy
    return u, v, zc


def project(cam: CameraModel, p_world) -> tuple[float, float, float]:
    """Project one world point to (u, v, depth); raises if behind the camera."""
    u, v, z = project_points(cam, np.asarray(p_world, dtype=np.float64))
    if z <= 0:
        raise BehindCameraError(f"point {p_world} has camera depth {z:.1f} <= 0")
    return float(u), float(v), float(z)


def backproject(cam: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    """Exact inverse of project for the returned point."""
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    xc = (u - cam.cx) / cam.fx * depth
    yc = (v - cam.cy) / cam.fy * depth
    pc = np.array([xc, yc, depth])
    return cam.R.T @ (pc - cam.t)


def pitch_camera(f: float, theta: float, cam_height: float, image_w: int, image_h: int) -> CameraModel:
    """Camera at (0, 0, cam_height) looking along +y, pitched down by theta."""
    if not abs(theta) < math.pi / 2:
        raise ValueError("|theta| must be < pi/2")
    s, c = math.sin(theta), math.cos(theta)
    right = np.array([1.0, 0.0, 0.0])
    down = np.array([0.0, -s, -c])
    fwd = np.array([0.0, c, -s])
    R = np.stack([right, down, fwd])
    t = -R @ np.array([0.0, 0.0, cam_height])
    return CameraModel(fx=f, fy=f, cx=image_w / 2.0, cy=image_h / 2.0,
                       R=R, t=t, width=image_w, height=image_h)


def oriented_camera(f: float, theta: float, yaw: float, height: float, distance: float,
                    image_w: int, image_h: int, aim_xy=(0.0, 0.0)) -> CameraModel:
    """Camera a horizontal `distance` from aim_xy along bearing `yaw`, pitched down by theta."""
    sy, cy_ = math.sin(yaw), math.cos(yaw)
    st, ct = math.sin(theta), math.cos(theta)
    pos = np.array([aim_xy[0] - distance * sy, aim_xy[1] - distance * cy_, height])
    fwd = np.array([sy * ct, cy_ * ct, -st])
    right = np.array([cy_, -sy, 0.0])
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd])
    t = -R @ pos
    return CameraModel(fx=f, fy=f, cx=image_w / 2.0, cy=image_h / 2.0,
                       R=R, t=t, width=image_w, height=image_h)


def tbs_depth(f: float, heights: BodyHeights, theta: float, h_img: float) -> float:
    """Depth from projected body height: d = f * gamma * h_real * cos(theta) / h_img."""
    if h_img <= 0:
        raise ValueError(f"h_img must be positive, got {h_img}")
    return f * heights.gamma_pose * heights.h_real * math.cos(theta) / h_img


def voxel_center(grid: GridSpec, idx: tuple[int, int, int]) -> np.ndarray:
    i, j, k = idx
    X, Y, Z = grid.dims
    if not (0 <= i < X and 0 <= j < Y and 0 <= k < Z):
        raise IndexError(f"voxel index {idx} outside grid dims {grid.dims}")
    o, s = grid.origin, grid.voxel_size
    return np.array([o[0] + (i + 0.5) * s[0], o[1] + (j + 0.5) * s[1], o[2] + (k + 0.5) * s[2]])


def world_to_voxel(grid: GridSpec, p) -> tuple[int, int, int]:
    """Index of the voxel containing a world point (may fall outside the grid)."""
    p = np.asarray(p, dtype=np.float64)
    f = (p - grid.origin) / grid.voxel_size
    return tuple(int(np.floor(c)) for c in f)


def voxel_coords(grid: GridSpec, p) -> np.ndarray:
    """Continuous voxel-index coordinates of a world point (centres at integers)."""
    p = np.asarray(p, dtype=np.float64)
    return (p - grid.origin) / grid.voxel_size - 0.5


def grid_axis_centers(grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-axis voxel-centre coordinate arrays; formula matches voxel_center exactly."""
    o, s = grid.origin, grid.voxel_size
    X, Y, Z = grid.dims
    cx = o[0] + (np.arange(X, dtype=np.float64) + 0.5) * s[0]
    cy = o[1] + (np.arange(Y, dtype=np.float64) + 0.5) * s[1]
    cz = o[2] + (np.arange(Z, dtype=np.float64) + 0.5) * s[2]
    return cx, cy, cz


def grid_depth_range(cam: CameraModel, grid: GridSpec, floor: float = 500.0) -> tuple[float, float]:
    """Camera-depth span of the grid's corners.

    Corners behind (or grazing) the camera would stretch the range towards
    zero, so the lower bound is the smallest corner depth past `floor`.
    """
    o, s = grid.origin, grid.voxel_size
    ext = s * np.array(grid.dims)
    corners = np.array([[o[0] + a * ext[0], o[1] + b * ext[1], o[2] + c * ext[2]]
                        for a in (0, 1) for b in (0, 1) for c in (0, 1)])
    z = camera_frame(cam, corners)[:, 2]
    past_floor = z[z > floor]
    lo = float(past_floor.min()) if past_floor.size else floor
    hi = max(float(z.max()), lo + 1.0)
    return lo, hi
