"""Network construction, checkpoints and the full inference path."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash
from .geometry import GridSpec, backproject, camera_frame, grid_depth_range
from .metrics import MatchResult, MetricsReport, match_people
from .nn import (
    Conv2d, Conv3d, NetSpec, ParamSet, Relu, Sigmoid, SpatialSoftmax, Upsample2d,
    forward, init_params, load_named_tensors, save_named_tensors,
)
from .pen import estimate_person, volume_to_net_input
from .ren import PersonDetection, VoxelVolume, build_naive_volume, build_root_volume, \
    detect_persons_2d, estimate_depth_map, nms_3d
from .synth.data import AgrSample, DataError
from .synth.skeleton import SkeletonSpec


def make_de_spec(n_joints: int, cfg: RunConfig) -> NetSpec:
    """Depth estimator: strided encoder + upsampling decoder.

    The depth cue is the person's projected extent, so the receptive field
    must span a whole person; each stride-2 stage doubles it at a quarter of
    the cost of widening kernels at full resolution.
    """
    t = cfg.train
    h = t.de_hidden
    k, pad = t.de_kernel, t.de_kernel // 2
    layers: list = [Conv2d(n_joints, h, k, 2, pad), Relu()]
    for _ in range(max(t.de_layers - 2, 0)):
        layers += [Conv2d(h, h, k, 2, pad), Relu()]
    layers += [Conv2d(h, h, 3, 1, 1), Relu()]
    for _ in range(max(t.de_layers - 2, 0)):
        layers += [Upsample2d(2), Conv2d(h, h, 3, 1, 1), Relu()]
    layers += [Upsample2d(2), Conv2d(h, 1, 3, 1, 1), Sigmoid()]
    return NetSpec(tuple(layers))


def make_ren_spec(n_joints: int, cfg: RunConfig) -> NetSpec:
    h = cfg.train.ren_hidden
    return NetSpec((
        Conv3d(n_joints, h, 3, 1, 1), Relu(),
        Conv3d(h, h, 3, 1, 1), Relu(),
        Conv3d(h, 1, 3, 1, 1), Sigmoid(),
    ))


def make_pen_spec(n_joints: int, cfg: RunConfig) -> NetSpec:
    h = cfg.train.pen_hidden
    return NetSpec((
        Conv3d(n_joints, h, 3, 1, 1), Relu(),
        Conv3d(h, h, 3, 1, 1), Relu(),
        Conv3d(h, n_joints, 3, 1, 1), SpatialSoftmax(cfg.train.pen_softmax_beta),
    ))


@dataclass
class Nets:
    skeleton: SkeletonSpec
    de_spec: NetSpec
    ren_spec: NetSpec
    pen_spec: NetSpec
    de: ParamSet
    ren: ParamSet
    pen: ParamSet

    def named(self) -> list[tuple[str, NetSpec, ParamSet]]:
        return [("de", self.de_spec, self.de), ("ren", self.ren_spec, self.ren),
                ("pen", self.pen_spec, self.pen)]

    def astype(self, dtype) -> "Nets":
        return Nets(self.skeleton, self.de_spec, self.ren_spec, self.pen_spec,
                    self.de.astype(dtype), self.ren.astype(dtype), self.pen.astype(dtype))


def init_nets(cfg: RunConfig, skeleton: SkeletonSpec, seed: int, dtype=np.float32) -> Nets:
    n = skeleton.joint_count
    rng = np.random.default_rng([seed, 0])
    de_spec, ren_spec, pen_spec = make_de_spec(n, cfg), make_ren_spec(n, cfg), make_pen_spec(n, cfg)
    return Nets(
        skeleton=skeleton, de_spec=de_spec, ren_spec=ren_spec, pen_spec=pen_spec,
        de=init_params(de_spec, rng, dtype),
        ren=init_params(ren_spec, rng, dtype),
        pen=init_params(pen_spec, rng, dtype),
    )


def save_checkpoint(nets: Nets, cfg: RunConfig, directory: str | Path, epoch: int) -> None:
    tensors: dict[str, np.ndarray] = {}
    steps = {}
    for name, _, params in nets.named():
        steps[name] = params.step
        for pname, arr in params.params.items():
            tensors[f"{name}.{pname}"] = arr
            tensors[f"{name}.{pname}.adam_m"] = params.m[pname]
            tensors[f"{name}.{pname}.adam_v"] = params.v[pname]
    meta = {
        "epoch": epoch,
        "steps": steps,
        "config_hash": config_hash(cfg),
        "skeleton": nets.skeleton.to_dict(),
    }
    save_named_tensors(directory, tensors, meta=meta)


def load_checkpoint(directory: str | Path, cfg: RunConfig) -> tuple[Nets, dict]:
    tensors, meta = load_named_tensors(directory)
    if "skeleton" not in meta:
        raise DataError(f"{directory}: checkpoint has no skeleton metadata")
    skeleton = SkeletonSpec.from_dict(meta["skeleton"])
    nets = init_nets(cfg, skeleton, seed=0)
    for name, _, params in nets.named():
        params.step = meta.get("steps", {}).get(name, 0)
        for pname in params.params:
            key = f"{name}.{pname}"
            if key not in tensors:
                raise DataError(f"{directory}: checkpoint is missing tensor '{key}'")
            if tensors[key].shape != params.params[pname].shape:
                raise DataError(
                    f"{directory}: tensor '{key}' has shape {tensors[key].shape}, "
                    f"net expects {params.params[pname].shape}"
                )
            params.params[pname] = tensors[key].astype(np.float32)
            params.m[pname] = tensors[f"{key}.adam_m"].astype(np.float32)
            params.v[pname] = tensors[f"{key}.adam_v"].astype(np.float32)
            params.grads[pname] = np.zeros_like(params.params[pname])
    return nets, meta


def coarse_grid_from(cfg: RunConfig) -> GridSpec:
    g = cfg.coarse_grid
    return GridSpec(origin=np.array(g.origin), voxel_size=np.array(g.voxel_size), dims=g.dims)


def teacher_detections(sample: AgrSample, depth_override: np.ndarray | None = None) -> list[PersonDetection]:
    """Detections decoded at the ground-truth root pixels (teacher forcing)."""
    dets = []
    depths = sample.depth_targets if depth_override is None else depth_override
    for p in range(sample.person_count):
        u, v = int(sample.root_pixels[p, 0]), int(sample.root_pixels[p, 1])
        l_d, t_d, r_d, b_d = (max(float(x), 0.5) for x in sample.box_map[:, v, u])
        dets.append(PersonDetection(
            root_uv=(float(u), float(v)),
            box=(u - l_d, v - t_d, u + r_d, v + b_d),
            depth=max(float(depths[p]), 1.0),
            confidence=1.0,
        ))
    return dets


def infer_scene(nets: Nets, sample: AgrSample, cfg: RunConfig, mode: str = "gated") -> list[dict]:
    """Full pipeline on one scene: detect, project, locate roots, decode poses.

    mode: "gated" (depth-gated volume), "naive" (ungated volume) or
    "constant_depth" (no learned stage; roots backprojected at the midrange
    depth). Returns one dict per person with confidence, REN root, refined
    root and full pose.
    """
    grid = coarse_grid_from(cfg)
    depth_range = grid_depth_range(sample.camera, grid)
    ev = cfg.eval

    depth_map = estimate_depth_map(nets.de_spec, nets.de, sample.heatmaps, depth_range)
    detections = detect_persons_2d(
        sample.heatmaps, sample.box_map, depth_map,
        peak_threshold=ev.peak_threshold, nms_radius_px=ev.nms2d_radius_px,
        max_people=ev.max_people, root_channel=nets.skeleton.root_index,
    )

    if mode == "constant_depth":
        # analytic reference predictor: perfect detection, midrange depth.
        # One prediction per ground-truth person so its error statistics are
        # the plain mean over all people, not a matching-censored subset.
        mid = 0.5 * (depth_range[0] + depth_range[1])
        out = []
        for p in range(sample.person_count):
            u, v = sample.root_pixels[p]
            root = backproject(sample.camera, float(u), float(v), mid)
            out.append({
                "confidence": 1.0,
                "root_ren": root.copy(),
                "root": root.copy(),
                "joints": np.tile(root, (nets.skeleton.joint_count, 1)),
            })
        return out

    if mode == "gated":
        vol = build_root_volume(sample.heatmaps, detections, grid, sample.camera,
                                sigma_mm=cfg.train.sigma_gate_mm)
    elif mode == "naive":
        vol = build_naive_volume(sample.heatmaps, grid, sample.camera)
    else:
        raise ValueError(f"unknown inference mode '{mode}'")

    x = volume_to_net_input(vol)
    h = forward(nets.ren_spec, nets.ren, x)
    h_vol = VoxelVolume(grid=grid, data=np.moveaxis(h.astype(np.float64), 0, -1))
    candidates = nms_3d(h_vol, radius_vox=ev.nms3d_radius_vox,
                        threshold=ev.nms3d_threshold, max_people=ev.max_people)

    out = []
    for cand in candidates:
        pose, refined = estimate_person(
            nets.pen_spec, nets.pen, sample.heatmaps, sample.camera, cand.position,
            extent_mm=cfg.fine_grid.extent_mm, dims=cfg.fine_grid.dims,
            root_index=nets.skeleton.root_index,
            prior_sigma_mm=cfg.train.pen_prior_sigma_mm,
        )
        out.append({
            "confidence": cand.confidence,
            "root_ren": cand.position.copy(),
            "root": refined,
            "joints": pose,
        })
    return out


def evaluate_dataset(nets: Nets, samples: list[AgrSample], cfg: RunConfig,
                     mode: str = "gated", oracle: bool = False) -> tuple[MetricsReport, list[dict]]:
    """Aggregate metrics over a dataset; also returns per-scene predictions."""
    ev = cfg.eval
    root_idx = nets.skeleton.root_index
    errs, errs_z, errs_ren, errs_z_ren = [], [], [], []
    mpjpe_abs_all, mpjpe_rel_all = [], []
    joint_ok = joint_total = root_ok = 0
    gt_count = pred_count = matched = 0
    scene_predictions = []

    for sample in samples:
        if oracle:
            preds = [{"confidence": 1.0, "root_ren": pose[root_idx].copy(),
                      "root": pose[root_idx].copy(), "joints": pose.copy()}
                     for pose in sample.gt_poses]
        else:
            preds = infer_scene(nets, sample, cfg, mode=mode)
        scene_predictions.append([
            {"confidence": float(p["confidence"]),
             "root_xyz_mm": [float(x) for x in p["root"]],
             "joints_mm": [[float(x) for x in row] for row in p["joints"]]}
            for p in preds
        ])
        gt_roots = sample.gt_poses[:, root_idx, :]
        pred_roots = np.array([p["root"] for p in preds]).reshape(-1, 3)
        ren_roots = np.array([p["root_ren"] for p in preds]).reshape(-1, 3)
        gt_count += sample.person_count
        pred_count += len(preds)

        if oracle or mode == "constant_depth":
            # reference predictors emit one prediction per ground-truth person;
            # identity pairing keeps their error statistics uncensored
            m = MatchResult(pairs=[(i, i) for i in range(sample.person_count)],
                            unmatched_gt=[], unmatched_pred=[])
        else:
            m = match_people(gt_roots, pred_roots, ev.match_max_dist_mm)
        matched += len(m.pairs)
        for g, p in m.pairs:
            errs.append(np.linalg.norm(gt_roots[g] - pred_roots[p]))
            errs_z.append(abs(camera_frame(sample.camera, pred_roots[p])[2]
                              - camera_frame(sample.camera, gt_roots[g])[2]))
        for g, p in m.pairs:
            gt_pose = sample.gt_poses[g]
            pr_pose = np.asarray(preds[p]["joints"], dtype=np.float64)
            d = np.linalg.norm(gt_pose - pr_pose, axis=1)
            mpjpe_abs_all.append(float(d.mean()))
            gt_c = gt_pose - gt_pose[root_idx]
            pr_c = pr_pose - pr_pose[root_idx]
            mpjpe_rel_all.append(float(np.linalg.norm(gt_c - pr_c, axis=1).mean()))
            joint_total += d.shape[0]
            joint_ok += int((d <= ev.pck_abs_mm).sum())
            if np.linalg.norm(gt_pose[root_idx] - pr_pose[root_idx]) <= ev.pck_root_mm:
                root_ok += 1
        if ev.population == "all":
            for g in m.unmatched_gt:
                joint_total += sample.gt_poses[g].shape[0]

        # root-stage errors over the same matched pairs, so the refined-vs-raw
        # comparison is not skewed by different matched populations
        for g, p in m.pairs:
            errs_ren.append(np.linalg.norm(gt_roots[g] - ren_roots[p]))
            errs_z_ren.append(abs(camera_frame(sample.camera, ren_roots[p])[2]
                                  - camera_frame(sample.camera, gt_roots[g])[2]))

    def _mean(xs):
        return float(np.mean(xs)) if xs else None

    report = MetricsReport(
        mrpe=_mean(errs), mrpe_z=_mean(errs_z),
        mpjpe_abs=_mean(mpjpe_abs_all), mpjpe_rel=_mean(mpjpe_rel_all),
        pck_abs=(100.0 * joint_ok / joint_total if joint_total else None),
        pck_root=(100.0 * root_ok / matched if matched else None),
        gt_count=gt_count, pred_count=pred_count, matched_count=matched,
        extras={"mrpe_ren": _mean(errs_ren), "mrpe_z_ren": _mean(errs_z_ren)},
    )
    return report, scene_predictions
