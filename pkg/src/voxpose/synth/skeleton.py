"""Articulated skeleton template and forward-kinematic pose sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JOINT_NAMES = (
    "pelvis", "neck", "head",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
)

_PARENTS = (-1, 0, 1, 0, 3, 4, 0, 6, 7, 1, 9, 10, 1, 12, 13)

# rest offsets from parent (direction * length), facing +x, z up; unit stature
_REST_OFFSETS = (
    (0.0, 0.0, 0.0),      # pelvis (root)
    (0.0, 0.0, 500.0),    # neck
    (0.0, 0.0, 250.0),    # head
    (0.0, 110.0, 0.0),    # l_hip
    (0.0, 0.0, -450.0),   # l_knee
    (0.0, 0.0, -450.0),   # l_ankle
    (0.0, -110.0, 0.0),   # r_hip
    (0.0, 0.0, -450.0),   # r_knee
    (0.0, 0.0, -450.0),   # r_ankle
    (0.0, 180.0, 30.0),   # l_shoulder
    (0.0, 20.0, -300.0),  # l_elbow
    (0.0, 0.0, -270.0),   # l_wrist
    (0.0, -180.0, 30.0),  # r_shoulder
    (0.0, -20.0, -300.0), # r_elbow
    (0.0, 0.0, -270.0),   # r_wrist
)


@dataclass
class SkeletonSpec:
    names: tuple[str, ...]
    parents: tuple[int, ...]
    rest_offsets: np.ndarray  # (N, 3) mm, offset from parent in the rest pose
    root_index: int = 0

    def __post_init__(self):
        self.rest_offsets = np.asarray(self.rest_offsets, dtype=np.float64).reshape(-1, 3)
        n = len(self.names)
        if len(self.parents) != n or self.rest_offsets.shape[0] != n:
            raise ValueError("names, parents and rest_offsets must have matching lengths")
        if self.parents[self.root_index] != -1:
            raise ValueError("root joint must have parent -1")
        for j, p in enumerate(self.parents):
            if j == self.root_index:
                continue
            if not (0 <= p < n) or p >= j:
                # topological order (parent before child) keeps FK a single pass
                raise ValueError(f"joint {j} has invalid parent {p}")
            if self.bone_lengths[j] <= 0:
                raise ValueError(f"joint {j} has non-positive bone length")

    @property
    def joint_count(self) -> int:
        return len(self.names)

    @property
    def bone_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.rest_offsets, axis=1)

    def rest_pose(self) -> np.ndarray:
        """Template pose with the root at the origin."""
        joints = np.zeros((self.joint_count, 3))
        for j, p in enumerate(self.parents):
            if j == self.root_index:
                continue
            joints[j] = joints[p] + self.rest_offsets[j]
        return joints

    def stature(self) -> float:
        rest = self.rest_pose()
        return float(rest[:, 2].max() - rest[:, 2].min())

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "parents": list(self.parents),
            "rest_offsets": [[float(v) for v in row] for row in self.rest_offsets],
            "root_index": self.root_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonSpec":
        return cls(names=tuple(d["names"]), parents=tuple(d["parents"]),
                   rest_offsets=np.array(d["rest_offsets"]), root_index=d["root_index"])


def default_skeleton(stature: float = 1700.0) -> SkeletonSpec:
    """15-joint human skeleton scaled so the rest pose spans `stature` mm vertically."""
    offsets = np.array(_REST_OFFSETS, dtype=np.float64)
    base = SkeletonSpec(JOINT_NAMES, _PARENTS, offsets)
    scale = stature / base.stature()
    return SkeletonSpec(JOINT_NAMES, _PARENTS, offsets * scale)


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = axis
    K = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return np.eye(3) * c + s * K + (1 - c) * np.outer(axis, axis)


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    n = np.linalg.norm(v)
    if n < 1e-12:
        return np.array([0.0, 0.0, 1.0])
    return v / n


def sample_pose(skel: SkeletonSpec, rng: np.random.Generator, angle_jitter: float,
                root_yaw_range: float = 0.0) -> np.ndarray:
    """Forward-kinematic pose with the root at the origin.

    Every joint's local rotation is a random axis-angle with angle drawn from
    [0, angle_jitter]; the root additionally yaws uniformly within
    [-root_yaw_range, root_yaw_range]. angle_jitter = 0 (and zero yaw range)
    reproduces the rest template exactly; bone lengths are always preserved.
    """
    if angle_jitter < 0:
        raise ValueError("angle_jitter must be >= 0")
    n = skel.joint_count
    joints = np.zeros((n, 3))
    rotations = [np.eye(3)] * n

    yaw = rng.uniform(-root_yaw_range, root_yaw_range) if root_yaw_range > 0 else 0.0
    g_root = _rotation(np.array([0.0, 0.0, 1.0]), yaw) if yaw != 0.0 else np.eye(3)
    rotations[skel.root_index] = g_root

    for j in range(n):
        if j == skel.root_index:
            continue
        axis = _random_axis(rng)
        angle = rng.uniform(0.0, angle_jitter) if angle_jitter > 0 else 0.0
        local = _rotation(axis, angle) if angle != 0.0 else np.eye(3)
        g = rotations[skel.parents[j]] @ local
        rotations[j] = g
        joints[j] = joints[skel.parents[j]] + g @ skel.rest_offsets[j]
    return joints


def pose_heights(skel: SkeletonSpec, pose: np.ndarray):
    """BodyHeights of a posed skeleton (vertical extent vs rest stature)."""
    from ..geometry import BodyHeights

    h_pose = float(pose[:, 2].max() - pose[:, 2].min())
    return BodyHeights(h_real=skel.stature(), h_pose=h_pose)
