"""Corruption model standing in for upstream estimation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import project_points
from ..numutil import flush_subnormals
from .data import AgrSample
from .render import in_image, person_boxes, render_box_map, render_gaussian_channels


@dataclass
class NoiseConfig:
    peak_jitter_px: float = 0.0
    amp_range: tuple[float, float] = (1.0, 1.0)
    false_positive_rate: float = 0.0
    box_noise_px: float = 0.0
    depth_noise_mm: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        if min(self.peak_jitter_px, self.false_positive_rate, self.box_noise_px,
               self.depth_noise_mm, self.dropout) < 0:
            raise ValueError("noise rates and sigmas must be >= 0")
        if self.amp_range[1] < self.amp_range[0]:
            raise ValueError("amp_range must be (lo, hi) with hi >= lo")

    def to_dict(self) -> dict:
        return {"peak_jitter_px": self.peak_jitter_px, "amp_range": list(self.amp_range),
                "false_positive_rate": self.false_positive_rate, "box_noise_px": self.box_noise_px,
                "depth_noise_mm": self.depth_noise_mm, "dropout": self.dropout}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseConfig":
        d = dict(d)
        d["amp_range"] = tuple(d.get("amp_range", (1.0, 1.0)))
        return cls(**d)


def corrupt_agr(sample: AgrSample, noise: NoiseConfig, rng: np.random.Generator) -> AgrSample:
    """Perturbed copy of a sample; ground-truth poses and root pixels stay exact.

    Heatmaps are re-rendered from jittered joint projections (so a zero
    NoiseConfig reproduces the sample bit-for-bit), the box map from jittered
    edges, and the per-person depth targets get additive Gaussian noise.
    """
    cam = sample.camera
    n_joints = sample.gt_poses.shape[1]
    width, height = cam.width, cam.height

    # fixed draw order: per person, per joint -> (dropout, du, dv, amp)
    peaks: list[list[tuple[float, float, float]]] = [[] for _ in range(n_joints)]
    for pose in sample.gt_poses:
        u, v, z = project_points(cam, pose)
        for k in range(n_joints):
            drop = rng.random() < noise.dropout
            du = rng.normal(0.0, noise.peak_jitter_px) if noise.peak_jitter_px > 0 else 0.0
            dv = rng.normal(0.0, noise.peak_jitter_px) if noise.peak_jitter_px > 0 else 0.0
            amp = rng.uniform(noise.amp_range[0], noise.amp_range[1])
            if drop:
                continue
            uu, vv = u[k] + du, v[k] + dv
            if in_image(uu, vv, z[k], width, height):
                peaks[k].append((float(uu), float(vv), float(amp)))

    n_fp = int(rng.poisson(noise.false_positive_rate)) if noise.false_positive_rate > 0 else 0
    for _ in range(n_fp):
        k = int(rng.integers(0, n_joints))
        uu = rng.uniform(0.0, width - 1.0)
        vv = rng.uniform(0.0, height - 1.0)
        amp = rng.uniform(noise.amp_range[0], noise.amp_range[1])
        peaks[k].append((float(uu), float(vv), float(amp)))

    heatmaps = flush_subnormals(
        render_gaussian_channels(peaks, width, height, sample.sigma_px).astype(sample.heatmaps.dtype))

    boxes, root_px, _ = person_boxes(list(sample.gt_poses), cam, sample.pad_px)
    if noise.box_noise_px > 0:
        boxes = boxes + rng.normal(0.0, noise.box_noise_px, size=boxes.shape)
    else:
        boxes = boxes + 0.0
    box_map = render_box_map(boxes, root_px, width, height).astype(sample.box_map.dtype)

    depths = sample.depth_targets + (
        rng.normal(0.0, noise.depth_noise_mm, size=sample.depth_targets.shape)
        if noise.depth_noise_mm > 0 else 0.0
    )

    return AgrSample(
        heatmaps=heatmaps,
        box_map=box_map,
        depth_targets=depths,
        root_pixels=sample.root_pixels.copy(),
        gt_poses=sample.gt_poses.copy(),
        camera=cam,
        sigma_px=sample.sigma_px,
        pad_px=sample.pad_px,
    )
