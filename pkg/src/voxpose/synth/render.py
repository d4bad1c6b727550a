"""Rendering of ground-truth target maps: joint heatmaps, box maps, 3D root blobs."""

from __future__ import annotations

import numpy as np

from ..geometry import CameraModel, GridSpec, project_points, voxel_coords


def in_image(u: float, v: float, z: float, width: int, height: int) -> bool:
    return z > 0 and 0.0 <= u <= width - 1 and 0.0 <= v <= height - 1


def render_gaussian_channels(peaks_per_channel: list[list[tuple[float, float, float]]],
                             width: int, height: int, sigma_px: float) -> np.ndarray:
    """Max-combined 2D Gaussians per channel, clamped to [0, 1].

    Each peak is (u, v, amplitude). Peaks are combined in list order; the
    corruption model reuses this exact routine so a zero-noise pass is
    bit-identical to the clean render.
    """
    if sigma_px <= 0:
        raise ValueError("sigma_px must be positive")
    n = len(peaks_per_channel)
    out = np.zeros((n, height, width), dtype=np.float64)
    us = np.arange(width, dtype=np.float64)
    vs = np.arange(height, dtype=np.float64)
    denom = 2.0 * sigma_px * sigma_px
    for k, peaks in enumerate(peaks_per_channel):
        for (u, v, amp) in peaks:
            du2 = (us - u) ** 2
            dv2 = (vs - v) ** 2
            g = amp * np.exp(-(dv2[:, None] + du2[None, :]) / denom)
            np.maximum(out[k], g, out=out[k])
    np.clip(out, 0.0, 1.0, out=out)
    return out


def joint_peaks(poses: list[np.ndarray], cam: CameraModel, n_joints: int) -> list[list[tuple[float, float, float]]]:
    """Per-channel peak lists (unit amplitude) for visible joints of each person."""
    peaks: list[list[tuple[float, float, float]]] = [[] for _ in range(n_joints)]
    for pose in poses:
        u, v, z = project_points(cam, pose)
        for k in range(n_joints):
            if in_image(u[k], v[k], z[k], cam.width, cam.height):
                peaks[k].append((float(u[k]), float(v[k]), 1.0))
    return peaks


def render_heatmaps(poses: list[np.ndarray], cam: CameraModel, width: int, height: int,
                    sigma_px: float) -> np.ndarray:
    """(N, H, W) ground-truth joint heatmaps; off-image joints contribute nothing."""
    n_joints = poses[0].shape[0] if poses else 0
    return render_gaussian_channels(joint_peaks(poses, cam, n_joints), width, height, sigma_px)


def person_boxes(poses: list[np.ndarray], cam: CameraModel, pad_px: float,
                 root_index: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-person padded boxes (ltrb), root pixels and root depths.

    Boxes cover the projected in-front joints; roots must project in-image
    (generation rejects scenes where they do not).
    """
    boxes = np.zeros((len(poses), 4))
    root_px = np.zeros((len(poses), 2), dtype=np.int64)
    depths = np.zeros(len(poses))
    for p, pose in enumerate(poses):
        u, v, z = project_points(cam, pose)
        front = z > 0
        if not front[root_index]:
            raise ValueError(f"person {p}: root joint behind the camera")
        uf, vf = u[front], v[front]
        boxes[p] = (uf.min() - pad_px, vf.min() - pad_px, uf.max() + pad_px, vf.max() + pad_px)
        root_px[p] = (int(round(u[root_index])), int(round(v[root_index])))
        depths[p] = z[root_index]
    return boxes, root_px, depths


def render_box_map(boxes: np.ndarray, root_px: np.ndarray, width: int, height: int) -> np.ndarray:
    """(4, H, W) map of (left, top, right, bottom) edge distances.

    Pixels inside a person's box hold the distances from that pixel to the
    box edges, so decoding at any pixel near the root reconstructs the same
    absolute box. Overlaps resolve to the person with the nearest root pixel.
    """
    box_map = np.zeros((4, height, width), dtype=np.float64)
    owner_d2 = np.full((height, width), np.inf)
    for p in range(boxes.shape[0]):
        l, t, r, b = boxes[p]
        u0, u1 = max(0, int(np.ceil(l))), min(width - 1, int(np.floor(r)))
        v0, v1 = max(0, int(np.ceil(t))), min(height - 1, int(np.floor(b)))
        if u0 > u1 or v0 > v1:
            continue
        us = np.arange(u0, u1 + 1, dtype=np.float64)
        vs = np.arange(v0, v1 + 1, dtype=np.float64)
        d2 = (vs[:, None] - root_px[p, 1]) ** 2 + (us[None, :] - root_px[p, 0]) ** 2
        take = d2 < owner_d2[v0 : v1 + 1, u0 : u1 + 1]
        owner_d2[v0 : v1 + 1, u0 : u1 + 1] = np.where(take, d2, owner_d2[v0 : v1 + 1, u0 : u1 + 1])
        for c, val in enumerate((us[None, :] - l, vs[:, None] - t, r - us[None, :], b - vs[:, None])):
            region = box_map[c, v0 : v1 + 1, u0 : u1 + 1]
            region[take] = np.broadcast_to(val, take.shape)[take]
    return box_map


def render_box_and_depth(poses: list[np.ndarray], cam: CameraModel, width: int, height: int,
                         pad_px: float, root_index: int = 0):
    """Box map, ground-truth root pixels and root depths for a scene."""
    boxes, root_px, depths = person_boxes(poses, cam, pad_px, root_index)
    box_map = render_box_map(boxes, root_px, width, height)
    return box_map, root_px, depths


def gt_root_heatmap3d(root_positions: np.ndarray, grid: GridSpec, sigma_vox: float) -> tuple[np.ndarray, int]:
    """Max-combined isotropic Gaussians (voxel-index space) truncated at 3 sigma.

    Returns the (X, Y, Z) volume and the count of roots skipped for lying
    outside the grid.
    """
    if sigma_vox <= 0:
        raise ValueError("sigma_vox must be positive")
    X, Y, Z = grid.dims
    vol = np.zeros((X, Y, Z), dtype=np.float64)
    skipped = 0
    reach = 3.0 * sigma_vox
    for root in np.atleast_2d(np.asarray(root_positions, dtype=np.float64).reshape(-1, 3)):
        c = voxel_coords(grid, root)
        if not ((-0.5 <= c[0] < X - 0.5) and (-0.5 <= c[1] < Y - 0.5) and (-0.5 <= c[2] < Z - 0.5)):
            skipped += 1
            continue
        lo = np.maximum(np.ceil(c - reach), 0).astype(int)
        hi = np.minimum(np.floor(c + reach), np.array([X, Y, Z]) - 1).astype(int)
        ix = np.arange(lo[0], hi[0] + 1, dtype=np.float64)
        iy = np.arange(lo[1], hi[1] + 1, dtype=np.float64)
        iz = np.arange(lo[2], hi[2] + 1, dtype=np.float64)
        r2 = ((ix - c[0]) ** 2)[:, None, None] + ((iy - c[1]) ** 2)[None, :, None] \
            + ((iz - c[2]) ** 2)[None, None, :]
        g = np.where(r2 <= reach * reach, np.exp(-r2 / (2.0 * sigma_vox * sigma_vox)), 0.0)
        region = vol[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1]
        np.maximum(region, g, out=region)
    return vol, skipped


def loss_2d(heat: np.ndarray, heat_gt: np.ndarray, box: np.ndarray, box_gt: np.ndarray,
            root_px: np.ndarray, lambda_bbox: float) -> float:
    """Sum-of-squares heatmap loss plus L1 box loss at ground-truth root pixels."""
    if heat.shape != heat_gt.shape or box.shape != box_gt.shape:
        raise ValueError("prediction/target shapes disagree")
    _check_roots(root_px, box.shape[2], box.shape[1])
    total = float(((heat - heat_gt) ** 2).sum())
    for (u, v) in np.atleast_2d(root_px):
        total += lambda_bbox * float(np.abs(box[:, v, u] - box_gt[:, v, u]).sum())
    return total


def loss_2d_grad(heat: np.ndarray, heat_gt: np.ndarray, box: np.ndarray, box_gt: np.ndarray,
                 root_px: np.ndarray, lambda_bbox: float) -> tuple[np.ndarray, np.ndarray]:
    _check_roots(root_px, box.shape[2], box.shape[1])
    g_heat = 2.0 * (heat - heat_gt)
    g_box = np.zeros_like(box)
    for (u, v) in np.atleast_2d(root_px):
        g_box[:, v, u] += lambda_bbox * np.sign(box[:, v, u] - box_gt[:, v, u])
    return g_heat, g_box


def _check_roots(root_px: np.ndarray, width: int, height: int) -> None:
    for (u, v) in np.atleast_2d(root_px):
        if not (0 <= u < width and 0 <= v < height):
            raise ValueError(f"root pixel ({u}, {v}) outside {width}x{height} map")
