"""Joint training of the depth estimator and both 3D stages on a dataset.

The three losses are decoupled through teacher forcing: the depth net is
supervised at ground-truth root pixels, the root stage consumes volumes
gated with (noised) ground-truth depths, and the pose stage sees fine grids
jittered around ground-truth roots. All per-epoch randomness derives from
(seed, epoch, scene) streams, so a resumed run replays an uninterrupted one
exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .geometry import grid_depth_range
from .nn import adam_step, backward, forward
from .pen import (
    decode_grad_to_heatmap, expected_voxel_indices, fine_grid_at, in_grid_mask,
    loss_pen, loss_pen_grad, pen_input_volume, pose_to_voxel, volume_to_net_input,
)
from .pipeline import Nets, coarse_grid_from, init_nets, save_checkpoint, teacher_detections
from .ren import build_naive_volume, build_root_volume, loss_depth, loss_depth_grad
from .synth.data import AgrSample
from .synth.render import gt_root_heatmap3d
from .synth.skeleton import SkeletonSpec


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class EpochLosses:
    epoch: int
    total: float
    depth: float
    ren: float
    pen: float


def _ren_targets(samples: list[AgrSample], cfg: RunConfig, root_index: int) -> list[np.ndarray]:
    grid = coarse_grid_from(cfg)
    targets = []
    for s in samples:
        vol, _ = gt_root_heatmap3d(s.gt_poses[:, root_index, :], grid, cfg.train.sigma_vox)
        targets.append(vol.astype(np.float32))
    return targets


def train_model(cfg: RunConfig, samples: list[AgrSample], skeleton: SkeletonSpec,
                out_dir: str | Path | None = None, nets: Nets | None = None,
                start_epoch: int = 0, mode: str = "gated",
                log_rows: list[EpochLosses] | None = None) -> tuple[Nets, list[EpochLosses]]:
    """Train for cfg.train.epochs epochs; returns the nets and per-epoch losses.

    mode selects the projection operator for the root stage ("gated" or
    "naive"); everything else is identical between the two.
    """
    t = cfg.train
    grid = coarse_grid_from(cfg)
    root_idx = skeleton.root_index
    if nets is None:
        nets = init_nets(cfg, skeleton, seed=cfg.seeds.init)
    ren_targets = _ren_targets(samples, cfg, root_idx)
    depth_ranges = [grid_depth_range(s.camera, grid) for s in samples]

    rows: list[EpochLosses] = list(log_rows or [])
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        (out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    if t.epochs == 0 and out_dir is not None:
        save_checkpoint(nets, cfg, out_dir / "checkpoints" / "epoch_000", epoch=0)

    for epoch in range(start_epoch, t.epochs):
        order = np.random.default_rng([cfg.seeds.train, epoch]).permutation(len(samples))
        sums = np.zeros(3)
        since_step = 0
        for step_i, scene_idx in enumerate(order):
            sample = samples[int(scene_idx)]
            rng = np.random.default_rng([cfg.seeds.train, epoch, int(scene_idx)])
            losses = _scene_step(nets, sample, ren_targets[int(scene_idx)],
                                 depth_ranges[int(scene_idx)], cfg, rng, mode)
            total = t.w_depth * losses[0] + t.w_ren * losses[1] + t.w_pen * losses[2]
            if not np.isfinite(total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step_i} (scene {int(scene_idx)})"
                )
            sums += losses
            since_step += 1
            if since_step >= t.batch:
                for _, _, params in nets.named():
                    adam_step(params, t.lr)
                    params.zero_grads()
                since_step = 0
        if since_step:
            for _, _, params in nets.named():
                adam_step(params, t.lr)
                params.zero_grads()
        mean = sums / len(samples)
        total = t.w_depth * mean[0] + t.w_ren * mean[1] + t.w_pen * mean[2]
        rows.append(EpochLosses(epoch + 1, float(total), float(mean[0]), float(mean[1]), float(mean[2])))
        if out_dir is not None and ((epoch + 1) % t.checkpoint_every == 0 or epoch + 1 == t.epochs):
            save_checkpoint(nets, cfg, out_dir / "checkpoints" / f"epoch_{epoch + 1:03d}", epoch=epoch + 1)
            write_loss_log(rows, out_dir / "losses.csv")
    if out_dir is not None:
        write_loss_log(rows, out_dir / "losses.csv")
    return nets, rows


def _scene_step(nets: Nets, sample: AgrSample, ren_target: np.ndarray,
                depth_range: tuple[float, float], cfg: RunConfig,
                rng: np.random.Generator, mode: str) -> np.ndarray:
    """Forward/backward for one scene; gradients accumulate into the nets."""
    t = cfg.train
    grid = coarse_grid_from(cfg)
    root_idx = nets.skeleton.root_index
    heat32 = sample.heatmaps.astype(np.float32, copy=False)

    # depth estimator
    lo, hi = depth_range
    cache: list = []
    y = forward(nets.de_spec, nets.de, heat32, cache=cache)
    depth_map = lo + y[0].astype(np.float64) * (hi - lo)
    l_depth = loss_depth(depth_map, sample.root_pixels, sample.depth_targets)
    g_map = loss_depth_grad(depth_map, sample.root_pixels, sample.depth_targets)
    g_out = (t.w_depth * (hi - lo)) * g_map[None, ...]
    backward(nets.de_spec, nets.de, heat32, g_out.astype(np.float32), cache=cache)

    # root stage; gates come from noised ground truth (teacher forcing) or
    # from the current depth estimate, per config
    if mode == "gated":
        if t.gate_mode == "estimated":
            gate_depths = np.array([depth_map[v, u] for (u, v) in sample.root_pixels])
        else:
            gate_depths = sample.depth_targets + (
                rng.normal(0.0, t.gate_noise_mm, size=sample.person_count)
                if t.gate_noise_mm > 0 else 0.0
            )
        dets = teacher_detections(sample, depth_override=gate_depths)
        vol = build_root_volume(heat32, dets, grid, sample.camera, sigma_mm=t.sigma_gate_mm)
    else:
        vol = build_naive_volume(heat32, grid, sample.camera)
    x_ren = volume_to_net_input(vol)
    cache = []
    h = forward(nets.ren_spec, nets.ren, x_ren, cache=cache)
    diff = h[0].astype(np.float64) - ren_target
    l_ren = float((diff * diff).sum())
    g_ren = (2.0 * t.w_ren) * diff
    backward(nets.ren_spec, nets.ren, x_ren, g_ren[None, ...].astype(np.float32), cache=cache)

    # pose stage around jittered ground-truth roots
    l_pen = 0.0
    n_people = sample.person_count
    picks = rng.permutation(n_people)[: max(1, min(t.pen_persons_per_scene, n_people))]
    for p in picks:
        center = sample.gt_poses[p, root_idx, :] + rng.uniform(
            -t.pen_center_jitter_mm, t.pen_center_jitter_mm, size=3)
        pvol = pen_input_volume(heat32, sample.camera, center, cfg.fine_grid.extent_mm,
                                cfg.fine_grid.dims, t.pen_prior_sigma_mm)
        fine = pvol.grid
        x_pen = volume_to_net_input(pvol)
        cache = []
        hp = forward(nets.pen_spec, nets.pen, x_pen, cache=cache)
        hp64 = hp.astype(np.float64)
        decoded = expected_voxel_indices(hp64)
        gt_vox = pose_to_voxel(fine, sample.gt_poses[p])
        mask = in_grid_mask(fine, sample.gt_poses[p]).astype(np.float64)
        l_pen += loss_pen(decoded, gt_vox, mask) / len(picks)
        g_idx = loss_pen_grad(decoded, gt_vox, mask) * (t.w_pen / len(picks))
        g_h = decode_grad_to_heatmap(hp64, g_idx)
        backward(nets.pen_spec, nets.pen, x_pen, g_h.astype(np.float32), cache=cache)

    return np.array([l_depth, l_ren, l_pen])


def write_loss_log(rows: list[EpochLosses], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "total", "depth", "ren", "pen"])
        for r in rows:
            writer.writerow([r.epoch, f"{r.total:.6f}", f"{r.depth:.6f}", f"{r.ren:.6f}", f"{r.pen:.6f}"])


def read_loss_log(path: str | Path) -> list[EpochLosses]:
    rows = []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            rows.append(EpochLosses(int(rec["epoch"]), float(rec["total"]), float(rec["depth"]),
                                    float(rec["ren"]), float(rec["pen"])))
    return rows
