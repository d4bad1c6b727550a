"""Scene sampling: people placement and camera draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import CameraModel, oriented_camera


class PlacementError(RuntimeError):
    pass


@dataclass
class CameraRanges:
    """Uniform sampling ranges for the virtual camera (radians for angles)."""

    f: tuple[float, float] = (85.0, 110.0)
    pitch: tuple[float, float] = (0.15, 0.42)
    height: tuple[float, float] = (1400.0, 2600.0)
    yaw: tuple[float, float] = (0.0, 6.283185307179586)
    distance: tuple[float, float] = (3800.0, 5200.0)

    def __post_init__(self):
        for name in ("f", "pitch", "height", "yaw", "distance"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"camera range {name} has hi < lo")


def place_people(poses: list[np.ndarray], bounds: tuple[float, float, float, float],
                 min_sep: float, rng: np.random.Generator, retries: int = 1000) -> list[np.ndarray]:
    """Translate root-centred poses into the world so feet touch z=0.

    bounds is (x_min, x_max, y_min, y_max) for the root; pairwise root
    distances stay >= min_sep. Raises PlacementError after `retries` failed
    draws for any one person.
    """
    x_min, x_max, y_min, y_max = bounds
    if x_max < x_min or y_max < y_min:
        raise ValueError("bounds must have max >= min")
    placed: list[np.ndarray] = []
    roots: list[np.ndarray] = []
    for pose in poses:
        ok = False
        for _ in range(retries):
            tx = rng.uniform(x_min, x_max)
            ty = rng.uniform(y_min, y_max)
            ground = pose[:, 2].min()
            root = pose[0] * 0  # root is at origin in a sampled pose
            shift = np.array([tx - root[0], ty - root[1], -ground])
            candidate_root = root + shift
            if all(np.linalg.norm(candidate_root - r) >= min_sep for r in roots):
                placed.append(pose + shift)
                roots.append(candidate_root)
                ok = True
                break
        if not ok:
            raise PlacementError(
                f"could not place person {len(placed)} with min_sep={min_sep} after {retries} tries"
            )
    return placed


def sample_camera(ranges: CameraRanges, rng: np.random.Generator,
                  image_w: int, image_h: int, aim_xy=(0.0, 0.0)) -> CameraModel:
    """Uniform camera draw aimed at the scene region. Draw order is fixed."""
    f = rng.uniform(*ranges.f)
    theta = rng.uniform(*ranges.pitch)
    height = rng.uniform(*ranges.height)
    yaw = rng.uniform(*ranges.yaw)
    distance = rng.uniform(*ranges.distance)
    return oriented_camera(f, theta, yaw, height, distance, image_w, image_h, aim_xy=aim_xy)
