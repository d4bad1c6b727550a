"""Sample container and on-disk dataset layout.

A dataset directory holds manifest.json, cameras.json and one tensor file
per field per sample in the shared tensor format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import CameraModel
from ..nn.tensorio import load_tensor, save_tensor


class DataError(IOError):
    pass


FORMAT_VERSION = 1
_FIELDS = ("heatmaps", "box_map", "depth_targets", "root_pixels", "gt_poses")


@dataclass
class AgrSample:
    """One scene: joint heatmaps, box map, depth targets and ground truth."""

    heatmaps: np.ndarray      # (N, H, W) float32 in [0, 1]
    box_map: np.ndarray       # (4, H, W) float32, px edge distances
    depth_targets: np.ndarray # (P,) float64 mm
    root_pixels: np.ndarray   # (P, 2) int64, (u, v)
    gt_poses: np.ndarray      # (P, N, 3) float64 world mm
    camera: CameraModel
    sigma_px: float
    pad_px: float

    def __post_init__(self):
        if self.gt_poses.ndim != 3 or self.gt_poses.shape[2] != 3:
            raise ValueError("gt_poses must be (P, N, 3)")
        p = self.gt_poses.shape[0]
        if self.depth_targets.shape != (p,) or self.root_pixels.shape != (p, 2):
            raise ValueError("per-person arrays disagree on person count")

    @property
    def person_count(self) -> int:
        return self.gt_poses.shape[0]


def _sample_path(directory: Path, index: int, field: str) -> Path:
    return directory / f"sample_{index:05d}.{field}.agrt"


def write_dataset(samples: list[AgrSample], directory: str | Path, meta: dict | None = None) -> None:
    """Write samples plus manifest/cameras; read_dataset(write_dataset(s)) is bit-exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cameras = []
    person_counts = []
    sigma_px = samples[0].sigma_px if samples else None
    pad_px = samples[0].pad_px if samples else None
    for i, s in enumerate(samples):
        save_tensor(_sample_path(directory, i, "heatmaps"), s.heatmaps)
        save_tensor(_sample_path(directory, i, "box_map"), s.box_map)
        save_tensor(_sample_path(directory, i, "depth_targets"), s.depth_targets.astype(np.float64))
        save_tensor(_sample_path(directory, i, "root_pixels"), s.root_pixels.astype(np.float64))
        save_tensor(_sample_path(directory, i, "gt_poses"), s.gt_poses.astype(np.float64))
        cameras.append(s.camera.to_dict())
        person_counts.append(s.person_count)
    manifest = {
        "format_version": FORMAT_VERSION,
        "count": len(samples),
        "person_counts": person_counts,
        "sigma_px": sigma_px,
        "pad_px": pad_px,
    }
    manifest.update(meta or {})
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    (directory / "cameras.json").write_text(json.dumps(cameras, indent=2, sort_keys=True))


def read_manifest(directory: str | Path) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise DataError(f"{path}: missing dataset manifest")
    manifest = json.loads(path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported dataset format_version {manifest.get('format_version')}")
    return manifest


def read_dataset(directory: str | Path) -> tuple[list[AgrSample], dict]:
    directory = Path(directory)
    manifest = read_manifest(directory)
    cameras_path = directory / "cameras.json"
    if not cameras_path.exists():
        raise DataError(f"{cameras_path}: missing cameras file")
    cameras = json.loads(cameras_path.read_text())
    count = manifest["count"]
    if len(cameras) != count:
        raise DataError(f"{cameras_path}: {len(cameras)} cameras for {count} samples")
    samples = []
    for i in range(count):
        arrays = {field: load_tensor(_sample_path(directory, i, field)) for field in _FIELDS}
        sample = AgrSample(
            heatmaps=arrays["heatmaps"],
            box_map=arrays["box_map"],
            depth_targets=arrays["depth_targets"],
            root_pixels=arrays["root_pixels"].astype(np.int64),
            gt_poses=arrays["gt_poses"],
            camera=CameraModel.from_dict(cameras[i]),
            sigma_px=manifest["sigma_px"],
            pad_px=manifest["pad_px"],
        )
        if sample.person_count != manifest["person_counts"][i]:
            raise DataError(f"sample {i}: person count {sample.person_count} does not match manifest")
        samples.append(sample)
    return samples, manifest
