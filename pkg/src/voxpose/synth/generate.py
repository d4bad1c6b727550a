"""Scene and dataset generation from a run configuration."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..config import RunConfig, config_hash, to_dict
from ..geometry import CameraModel, project_points
from ..numutil import flush_subnormals
from .corrupt import corrupt_agr
from .data import AgrSample, write_dataset
from .render import person_boxes, render_box_map, render_gaussian_channels, joint_peaks
from .sampling import PlacementError, place_people, sample_camera
from .skeleton import default_skeleton, sample_pose


def _roots_visible(poses: list[np.ndarray], cam: CameraModel, margin: float = 1.0) -> bool:
    for pose in poses:
        u, v, z = project_points(cam, pose[0:1])
        if not (z[0] > 0 and margin <= u[0] <= cam.width - 1 - margin
                and margin <= v[0] <= cam.height - 1 - margin):
            return False
    return True


def generate_scene(cfg: RunConfig, rng: np.random.Generator) -> AgrSample:
    """One clean scene: sampled people and camera, rendered targets.

    Placement is rejection-sampled until every root projects inside the
    image; all randomness comes from `rng`.
    """
    s = cfg.synth
    skel = default_skeleton(cfg.skeleton.stature)
    n_people = int(rng.integers(s.people[0], s.people[1] + 1))
    cam = sample_camera(s.camera, rng, s.heatmap_w, s.heatmap_h)
    poses = [sample_pose(skel, rng, s.angle_jitter, s.root_yaw) for _ in range(n_people)]

    placed = None
    for _ in range(s.placement_retries):
        candidate = place_people(poses, s.bounds, s.min_sep, rng, retries=s.placement_retries)
        if _roots_visible(candidate, cam):
            placed = candidate
            break
    if placed is None:
        raise PlacementError("no placement with all roots in-image; check camera/bounds config")

    heatmaps = flush_subnormals(render_gaussian_channels(
        joint_peaks(placed, cam, skel.joint_count), s.heatmap_w, s.heatmap_h, s.sigma_px
    ).astype(np.float32))
    boxes, root_px, depths = person_boxes(placed, cam, s.pad_px, skel.root_index)
    box_map = render_box_map(boxes, root_px, s.heatmap_w, s.heatmap_h).astype(np.float32)
    return AgrSample(
        heatmaps=heatmaps, box_map=box_map, depth_targets=depths, root_pixels=root_px,
        gt_poses=np.stack(placed) if placed else np.zeros((0, skel.joint_count, 3)),
        camera=cam, sigma_px=s.sigma_px, pad_px=s.pad_px,
    )


def generate_sample(cfg: RunConfig, master_seed: int, scene_index: int) -> AgrSample:
    """Clean scene + corruption, from the (master_seed, scene_index) stream."""
    rng = np.random.default_rng([master_seed, scene_index])
    clean = generate_scene(cfg, rng)
    return corrupt_agr(clean, cfg.synth.noise, rng)


def generate_dataset(cfg: RunConfig, count: int, master_seed: int, out_dir: str | Path,
                     threads: int = 1, extra_meta: dict | None = None) -> Path:
    """Write `count` scenes; per-scene seed streams make thread order irrelevant."""
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(lambda i: generate_sample(cfg, master_seed, i), range(count)))
    else:
        samples = [generate_sample(cfg, master_seed, i) for i in range(count)]
    skel = default_skeleton(cfg.skeleton.stature)
    meta = {
        "skeleton": skel.to_dict(),
        "seed": master_seed,
        "config_hash": config_hash(cfg),
        "noise": cfg.synth.noise.to_dict(),
        "coarse_grid": to_dict(cfg.coarse_grid),
        "fine_grid": to_dict(cfg.fine_grid),
    }
    meta.update(extra_meta or {})
    out_dir = Path(out_dir)
    write_dataset(samples, out_dir, meta)
    return out_dir
