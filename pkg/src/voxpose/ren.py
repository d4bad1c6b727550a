"""Root estimation stage: 2D detection, depth maps, feature volumes, 3D NMS.

Volume construction is written with explicit elementwise arithmetic in a
fixed evaluation order so that a scalar triple-loop reference produces
bit-identical float64 values (verification relies on exact equality).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraModel, GridSpec, grid_axis_centers, project_points, voxel_center
from .nn import NetSpec, ParamSet, forward


@dataclass
class PersonDetection:
    root_uv: tuple[float, float]
    box: tuple[float, float, float, float]  # absolute (left, top, right, bottom) px
    depth: float  # mm
    confidence: float

    def __post_init__(self):
        l, t, r, b = self.box
        if not (r > l and b > t):
            raise ValueError(f"box {self.box} must have positive width/height")
        if self.depth <= 0:
            raise ValueError("detection depth must be positive")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")


@dataclass
class VoxelVolume:
    grid: GridSpec
    data: np.ndarray  # (X, Y, Z, C)

    def __post_init__(self):
        if self.data.shape[:3] != self.grid.dims:
            raise ValueError(f"volume data {self.data.shape} does not match grid dims {self.grid.dims}")

    @property
    def channels(self) -> int:
        return self.data.shape[3]


@dataclass
class RootCandidate:
    index: tuple[int, int, int]
    position: np.ndarray  # world mm
    confidence: float


def estimate_depth_map(net: NetSpec, params: ParamSet, heatmaps: np.ndarray,
                       depth_range: tuple[float, float]) -> np.ndarray:
    """Dense (H, W) root-depth map in mm.

    The net emits values in [0, 1] (sigmoid head) which are mapped affinely
    onto [depth_min, depth_max].
    """
    lo, hi = depth_range
    y = forward(net, params, heatmaps.astype(params_dtype(params), copy=False))
    return (lo + y[0].astype(np.float64) * (hi - lo))


def params_dtype(params: ParamSet):
    for p in params.params.values():
        return p.dtype
    return np.float32


def _local_maxima(data: np.ndarray, threshold: float) -> list[tuple]:
    """Indices of local maxima >= threshold (Chebyshev-1 neighbourhood).

    Peaks must be interior cells (every neighbour exists): boundary cells
    carry conv zero-padding artifacts and their maximum test would be
    vacuous, so padding with +inf disqualifies them. Ties break towards the
    raster-first cell (strictly greater than every earlier neighbour, at
    least as great as every later one), so a constant plateau: which low-
    precision sigmoids really produce: still yields exactly one peak.
    """
    padded = np.pad(data, 1, constant_values=np.inf)
    core = padded[tuple(slice(1, -1) for _ in range(data.ndim))]
    is_max = data >= threshold
    centre = (1,) * data.ndim
    for shift in np.ndindex(*(3,) * data.ndim):
        if shift == centre:
            continue
        sl = tuple(slice(s, s + n) for s, n in zip(shift, data.shape))
        if shift < centre:  # neighbour earlier in raster order
            is_max &= core > padded[sl]
        else:
            is_max &= core >= padded[sl]
    return [tuple(int(i) for i in idx) for idx in np.argwhere(is_max)]


def _greedy_suppress(candidates: list[tuple], values: np.ndarray, radius: int,
                     max_keep: int) -> list[tuple]:
    """Greedy acceptance in descending confidence with Chebyshev suppression.

    Ties break on ascending index order. A candidate within `radius`
    (inclusive) of an accepted one is dropped.
    """
    order = sorted(candidates, key=lambda idx: (-values[idx], idx))
    kept: list[tuple] = []
    for idx in order:
        if len(kept) >= max_keep:
            break
        if all(max(abs(a - b) for a, b in zip(idx, k)) > radius for k in kept):
            kept.append(idx)
    return kept


def detect_persons_2d(heatmaps: np.ndarray, box_map: np.ndarray, depth_map: np.ndarray,
                      peak_threshold: float, nms_radius_px: int, max_people: int,
                      root_channel: int = 0) -> list[PersonDetection]:
    """Peak detection on the root channel with box/depth decoded at each peak."""
    root = heatmaps[root_channel]
    peaks = _local_maxima(root, peak_threshold)
    kept = _greedy_suppress(peaks, root, nms_radius_px, max_people)
    detections = []
    for (v, u) in kept:
        l_d, t_d, r_d, b_d = (max(float(x), 0.5) for x in box_map[:, v, u])
        detections.append(PersonDetection(
            root_uv=(float(u), float(v)),
            box=(u - l_d, v - t_d, u + r_d, v + b_d),
            depth=max(float(depth_map[v, u]), 1.0),
            confidence=min(float(root[v, u]), 1.0),
        ))
    return detections


def _project_grid(grid: GridSpec, cam: CameraModel):
    cx, cy, cz = grid_axis_centers(grid)
    X, Y, Z = grid.dims
    centers = np.empty((X, Y, Z, 3), dtype=np.float64)
    centers[..., 0] = cx[:, None, None]
    centers[..., 1] = cy[None, :, None]
    centers[..., 2] = cz[None, None, :]
    flat = centers.reshape(-1, 3)
    u, v, z = project_points(cam, flat)
    valid = (z > 0) & (u >= 0.0) & (u <= cam.width - 1) & (v >= 0.0) & (v <= cam.height - 1)
    return u, v, z, valid


def _bilinear_stack(heatmaps: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample every channel at continuous (u, v); inputs must be in-image.

    Arithmetic runs in the heatmap dtype: float64 inputs keep the exact
    reference semantics, float32 training volumes halve the memory traffic.
    """
    dt = heatmaps.dtype
    height, width = heatmaps.shape[1], heatmaps.shape[2]
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    u1 = np.minimum(u0 + 1, width - 1)
    v1 = np.minimum(v0 + 1, height - 1)
    one = dt.type(1.0)
    fu = (u - u0).astype(dt, copy=False)
    fv = (v - v0).astype(dt, copy=False)
    w00 = (one - fv) * (one - fu)
    w01 = (one - fv) * fu
    w10 = fv * (one - fu)
    w11 = fv * fu
    h00 = heatmaps[:, v0, u0]
    h01 = heatmaps[:, v0, u1]
    h10 = heatmaps[:, v1, u0]
    h11 = heatmaps[:, v1, u1]
    return ((h00 * w00 + h01 * w01) + h10 * w10) + h11 * w11


def build_root_volume(heatmaps: np.ndarray, detections: list[PersonDetection], grid: GridSpec,
                      cam: CameraModel, sigma_mm: float = 200.0) -> VoxelVolume:
    """Depth-gated projection of heatmaps into the coarse grid.

    A voxel projecting inside at least one detection box receives the
    bilinear heatmap value times the largest Gaussian depth gate among the
    containing boxes; all other voxels are zero.
    """
    if sigma_mm <= 0:
        raise ValueError("sigma_mm must be positive")
    n = heatmaps.shape[0]
    dt = heatmaps.dtype
    u, v, z, valid = _project_grid(grid, cam)
    nv = u.shape[0]
    data = np.zeros((nv, n), dtype=dt)
    if valid.any() and detections:
        uu, vv, zz = u[valid], v[valid], z[valid]
        denom = 2.0 * sigma_mm * sigma_mm
        gate = np.zeros(uu.shape[0], dtype=np.float64)
        for det in detections:
            l, t, r, b = det.box
            inside = (uu >= l) & (uu <= r) & (vv >= t) & (vv <= b)
            dz = zz - det.depth
            g = np.exp(-(dz * dz) / denom)
            gate = np.where(inside, np.maximum(gate, g), gate)
        samples = _bilinear_stack(heatmaps, uu, vv)
        data[valid] = (samples * gate.astype(dt, copy=False)).T
    return VoxelVolume(grid=grid, data=data.reshape(grid.dims + (n,)))


def build_naive_volume(heatmaps: np.ndarray, grid: GridSpec, cam: CameraModel) -> VoxelVolume:
    """Ungated projection: every voxel on a pixel's ray receives its heatmap value."""
    n = heatmaps.shape[0]
    u, v, z, valid = _project_grid(grid, cam)
    data = np.zeros((u.shape[0], n), dtype=heatmaps.dtype)
    if valid.any():
        samples = _bilinear_stack(heatmaps, u[valid], v[valid])
        data[valid] = samples.T
    return VoxelVolume(grid=grid, data=data.reshape(grid.dims + (n,)))


def nms_3d(volume: VoxelVolume, radius_vox: int, threshold: float,
           max_people: int) -> list[RootCandidate]:
    """Peak extraction on a single-channel volume."""
    if radius_vox < 1:
        raise ValueError("radius_vox must be >= 1")
    if volume.channels != 1:
        raise ValueError("nms_3d expects a 1-channel volume")
    data = volume.data[..., 0]
    peaks = _local_maxima(data, threshold)
    kept = _greedy_suppress(peaks, data, radius_vox, max_people)
    return [
        RootCandidate(index=idx, position=voxel_center(volume.grid, idx),
                      confidence=float(data[idx]))
        for idx in kept
    ]


def save_volume(vol: VoxelVolume, path) -> None:
    """Volume tensor in the shared format plus a .grid.json sidecar."""
    import json
    from pathlib import Path

    from .nn.tensorio import save_tensor

    path = Path(path)
    save_tensor(path, vol.data)
    sidecar = path.with_suffix(path.suffix + ".grid.json")
    sidecar.write_text(json.dumps(vol.grid.to_dict(), indent=2, sort_keys=True))


def load_volume(path) -> VoxelVolume:
    import json
    from pathlib import Path

    from .nn.tensorio import load_tensor

    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".grid.json")
    grid = GridSpec.from_dict(json.loads(sidecar.read_text()))
    return VoxelVolume(grid=grid, data=load_tensor(path))


def loss_depth(depth_map: np.ndarray, root_pixels: np.ndarray, depth_targets: np.ndarray) -> float:
    """Sum of absolute depth errors read at ground-truth root pixels."""
    height, width = depth_map.shape
    total = 0.0
    for (u, v), target in zip(np.atleast_2d(root_pixels), np.atleast_1d(depth_targets)):
        if not (0 <= u < width and 0 <= v < height):
            raise ValueError(f"root pixel ({u}, {v}) outside {width}x{height} depth map")
        total += abs(float(depth_map[v, u]) - float(target))
    return total


def loss_depth_grad(depth_map: np.ndarray, root_pixels: np.ndarray,
                    depth_targets: np.ndarray) -> np.ndarray:
    g = np.zeros_like(depth_map)
    for (u, v), target in zip(np.atleast_2d(root_pixels), np.atleast_1d(depth_targets)):
        g[v, u] += np.sign(float(depth_map[v, u]) - float(target))
    return g


def loss_ren(pred: VoxelVolume, target: VoxelVolume) -> float:
    """Sum-of-squares error between predicted and target root-confidence volumes."""
    _check_same_grid(pred, target)
    return float(((pred.data - target.data) ** 2).sum())


def loss_ren_grad(pred: VoxelVolume, target: VoxelVolume) -> np.ndarray:
    _check_same_grid(pred, target)
    return 2.0 * (pred.data - target.data)


def _check_same_grid(a: VoxelVolume, b: VoxelVolume) -> None:
    same = (a.grid.dims == b.grid.dims
            and np.array_equal(a.grid.origin, b.grid.origin)
            and np.array_equal(a.grid.voxel_size, b.grid.voxel_size))
    if not same or a.data.shape != b.data.shape:
        raise ValueError("volumes live on different grids")
