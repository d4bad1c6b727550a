"""Per-person pose stage: fine volumes, integral decoding, pose loss."""

from __future__ import annotations

import numpy as np

from .geometry import CameraModel, GridSpec
from .nn import NetSpec, ParamSet, forward
from .numutil import flush_subnormals
from .ren import VoxelVolume, build_naive_volume


def fine_grid_at(center, extent_mm: float = 2000.0, dims: int = 64) -> GridSpec:
    """Cube grid of `extent_mm` per side centred at a root candidate."""
    center = np.asarray(center, dtype=np.float64)
    size = extent_mm / dims
    return GridSpec(origin=center - extent_mm / 2.0, voxel_size=(size, size, size),
                    dims=(dims, dims, dims))


def build_person_volume(heatmaps: np.ndarray, cam: CameraModel, root_world,
                        extent_mm: float = 2000.0, dims: int = 64) -> VoxelVolume:
    """Ungated heatmap projection over the person-centred fine grid."""
    return build_naive_volume(heatmaps, fine_grid_at(root_world, extent_mm, dims), cam)


def locality_prior_weights(grid: GridSpec, sigma_mm: float) -> np.ndarray:
    """Isotropic Gaussian weight around the grid centre (the root candidate).

    Applied to the pose net's input volume. Without it the expectation
    decode is biased two ways: depth ambiguity leaks into the horizontal
    axes through ray tilt (every voxel along a ray holds the same heatmap
    value), and neighbouring people inside the cube pull the expectation
    sideways. A soft locality prior suppresses both while leaving room to
    refine the centre.
    """
    from .geometry import grid_axis_centers

    cx, cy, cz = grid_axis_centers(grid)
    centre = grid.origin + np.asarray(grid.dims) * grid.voxel_size / 2.0
    d2 = ((cx - centre[0]) ** 2)[:, None, None] \
        + ((cy - centre[1]) ** 2)[None, :, None] \
        + ((cz - centre[2]) ** 2)[None, None, :]
    return np.exp(-d2 / (2.0 * sigma_mm * sigma_mm))


def pen_input_volume(heatmaps: np.ndarray, cam: CameraModel, root_world,
                     extent_mm: float, dims: int, prior_sigma_mm: float) -> VoxelVolume:
    """Fine volume as the pose net consumes it (locality prior applied if set)."""
    vol = build_person_volume(heatmaps, cam, root_world, extent_mm, dims)
    if prior_sigma_mm > 0:
        w = locality_prior_weights(vol.grid, prior_sigma_mm).astype(vol.data.dtype)
        vol = VoxelVolume(grid=vol.grid, data=vol.data * w[..., None])
    return vol


def expected_voxel_indices(h: np.ndarray) -> np.ndarray:
    """Per-channel expectation of voxel indices for (N, X, Y, Z) heatmaps.

    Channels are renormalized defensively; an all-zero (or negative-mass)
    channel cannot be normalized and is an error.
    """
    n, X, Y, Z = h.shape
    flat = h.reshape(n, -1)
    mass = flat.sum(axis=1)
    if np.any(mass <= 0):
        bad = int(np.argmax(mass <= 0))
        raise ValueError(f"channel {bad} has non-positive total mass; cannot decode")
    hx = h.sum(axis=(2, 3))  # (N, X)
    hy = h.sum(axis=(1, 3))
    hz = h.sum(axis=(1, 2))
    jx = hx @ np.arange(X, dtype=np.float64)
    jy = hy @ np.arange(Y, dtype=np.float64)
    jz = hz @ np.arange(Z, dtype=np.float64)
    return np.stack([jx, jy, jz], axis=1) / mass[:, None]


def integral_decode(h: np.ndarray, grid: GridSpec) -> np.ndarray:
    """World-frame joint positions from (N, X, Y, Z) heatmaps over `grid`."""
    j = expected_voxel_indices(h)
    return grid.origin[None, :] + (j + 0.5) * grid.voxel_size[None, :]


def pose_to_voxel(grid: GridSpec, pose: np.ndarray) -> np.ndarray:
    """Continuous voxel-index coordinates of an (N, 3) pose."""
    return (pose - grid.origin[None, :]) / grid.voxel_size[None, :] - 0.5


def in_grid_mask(grid: GridSpec, pose: np.ndarray) -> np.ndarray:
    j = pose_to_voxel(grid, pose)
    dims = np.asarray(grid.dims, dtype=np.float64)
    return np.all((j >= -0.5) & (j <= dims - 0.5), axis=1)


def loss_pen(decoded_vox: np.ndarray, gt_vox: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean per-joint L1 error in voxel-index units; masked joints contribute 0."""
    if decoded_vox.shape != gt_vox.shape:
        raise ValueError("pose shapes disagree (skeleton mismatch)")
    n = decoded_vox.shape[0]
    diff = np.abs(decoded_vox - gt_vox).sum(axis=1)
    if mask is not None:
        diff = diff * mask
    return float(diff.sum()) / n


def loss_pen_grad(decoded_vox: np.ndarray, gt_vox: np.ndarray,
                  mask: np.ndarray | None = None) -> np.ndarray:
    n = decoded_vox.shape[0]
    g = np.sign(decoded_vox - gt_vox) / n
    if mask is not None:
        g = g * mask[:, None]
    return g


def decode_grad_to_heatmap(h: np.ndarray, g_indices: np.ndarray) -> np.ndarray:
    """Backpropagate d(loss)/d(expected index) through expected_voxel_indices.

    With p = h / mass and J = sum(idx * p): dJ_a/dh(xyz) = (idx_a - J_a) / mass.
    """
    n, X, Y, Z = h.shape
    mass = h.reshape(n, -1).sum(axis=1)
    j = expected_voxel_indices(h)
    ix = np.arange(X, dtype=np.float64)[None, :, None, None]
    iy = np.arange(Y, dtype=np.float64)[None, None, :, None]
    iz = np.arange(Z, dtype=np.float64)[None, None, None, :]
    gx = g_indices[:, 0][:, None, None, None]
    gy = g_indices[:, 1][:, None, None, None]
    gz = g_indices[:, 2][:, None, None, None]
    out = gx * (ix - j[:, 0][:, None, None, None])
    out = out + gy * (iy - j[:, 1][:, None, None, None])
    out = out + gz * (iz - j[:, 2][:, None, None, None])
    return out / mass[:, None, None, None]


def volume_to_net_input(vol: VoxelVolume, dtype=np.float32) -> np.ndarray:
    """(X, Y, Z, C) volume -> contiguous (C, X, Y, Z) net input."""
    x = np.ascontiguousarray(np.moveaxis(vol.data, -1, 0).astype(dtype, copy=False))
    return flush_subnormals(x)


def estimate_person(pen_net: NetSpec, params: ParamSet, heatmaps: np.ndarray, cam: CameraModel,
                    root_world, extent_mm: float = 2000.0, dims: int = 64,
                    root_index: int = 0, prior_sigma_mm: float = 0.0):
    """Decode a full pose around one root candidate.

    The same ParamSet serves every person. Returns (pose_world, refined_root)
    where the refined root is the decoded root joint.
    """
    vol = pen_input_volume(heatmaps, cam, root_world, extent_mm, dims, prior_sigma_mm)
    x = volume_to_net_input(vol, dtype=next(iter(params.params.values())).dtype)
    h = forward(pen_net, params, x).astype(np.float64)
    pose = integral_decode(h, vol.grid)
    return pose, pose[root_index].copy()
