"""Run configuration: one dataclass tree with defaults, strict JSON round-trip.

The defaults are the desk-scale profile; ``paper_profile`` swaps in the
full-scale grids and heatmap resolution. Unknown keys are rejected with the
offending JSON path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .synth.corrupt import NoiseConfig
from .synth.sampling import CameraRanges


class ConfigError(ValueError):
    pass


@dataclass
class SkeletonCfg:
    stature: float = 1700.0
    joints: int = 15  # informational; the default skeleton defines the layout


@dataclass
class GridCfg:
    origin: tuple[float, float, float] = (-3000.0, -3000.0, 0.0)
    voxel_size: tuple[float, float, float] = (150.0, 150.0, 150.0)
    dims: tuple[int, int, int] = (40, 40, 12)


@dataclass
class FineGridCfg:
    extent_mm: float = 2000.0
    dims: int = 32


@dataclass
class SynthCfg:
    train_scenes: int = 200
    test_scenes: int = 50
    people: tuple[int, int] = (1, 3)
    bounds: tuple[float, float, float, float] = (-1900.0, 1900.0, -1900.0, 1900.0)
    min_sep: float = 600.0
    heatmap_w: int = 120
    heatmap_h: int = 64
    sigma_px: float = 2.2
    pad_px: float = 2.0
    angle_jitter: float = 0.25
    root_yaw: float = math.pi
    placement_retries: int = 1000
    camera: CameraRanges = field(default_factory=CameraRanges)
    noise: NoiseConfig = field(default_factory=lambda: NoiseConfig(
        peak_jitter_px=0.6, amp_range=(0.85, 1.0), false_positive_rate=0.3,
        box_noise_px=1.0, depth_noise_mm=40.0, dropout=0.02))


@dataclass
class TrainCfg:
    lr: float = 1e-4
    batch: int = 1
    epochs: int = 20
    w_depth: float = 1.0
    w_ren: float = 1.0
    w_pen: float = 1.0
    de_hidden: int = 12
    de_kernel: int = 5
    de_layers: int = 4
    ren_hidden: int = 6
    pen_hidden: int = 6
    pen_softmax_beta: float = 1.0
    sigma_gate_mm: float = 200.0
    sigma_vox: float = 1.8
    gate_mode: str = "gt"  # "gt" (teacher forcing) or "estimated"
    gate_noise_mm: float = 250.0
    pen_center_jitter_mm: float = 150.0
    pen_prior_sigma_mm: float = 400.0
    pen_persons_per_scene: int = 1
    checkpoint_every: int = 1


@dataclass
class EvalCfg:
    peak_threshold: float = 0.35
    nms2d_radius_px: int = 3
    nms3d_radius_vox: int = 1
    nms3d_threshold: float = 0.3
    max_people: int = 6
    match_max_dist_mm: float = 500.0
    pck_abs_mm: float = 150.0
    pck_root_mm: float = 250.0
    population: str = "matched"  # or "all"


@dataclass
class SeedsCfg:
    synth: int = 11
    train: int = 23
    init: int = 37


@dataclass
class RunConfig:
    skeleton: SkeletonCfg = field(default_factory=SkeletonCfg)
    coarse_grid: GridCfg = field(default_factory=GridCfg)
    fine_grid: FineGridCfg = field(default_factory=FineGridCfg)
    synth: SynthCfg = field(default_factory=SynthCfg)
    train: TrainCfg = field(default_factory=TrainCfg)
    eval: EvalCfg = field(default_factory=EvalCfg)
    seeds: SeedsCfg = field(default_factory=SeedsCfg)


def desk_profile() -> RunConfig:
    return RunConfig()


def paper_profile() -> RunConfig:
    """Full-scale grids and heatmap resolution; expensive on a laptop CPU."""
    cfg = RunConfig()
    cfg.synth.heatmap_w = 240
    cfg.synth.heatmap_h = 128
    cfg.coarse_grid = GridCfg(origin=(-4000.0, -4000.0, 0.0),
                              voxel_size=(100.0, 100.0, 100.0), dims=(80, 80, 24))
    cfg.fine_grid = FineGridCfg(extent_mm=2000.0, dims=64)
    cfg.synth.camera = CameraRanges(f=(170.0, 220.0), pitch=(0.15, 0.42),
                                    height=(1400.0, 2600.0), yaw=(0.0, 2 * math.pi),
                                    distance=(4200.0, 6400.0))
    cfg.synth.bounds = (-2600.0, 2600.0, -2600.0, 2600.0)
    return cfg


def ablation_profile() -> RunConfig:
    """Reduced desk profile sized so multi-cell protocol runs stay fast.

    Protocol evaluation widens the matching radius: comparing error
    magnitudes across cells is the whole point, and a tight radius would
    censor exactly the differences under study.
    """
    cfg = RunConfig()
    cfg.synth.train_scenes = 90
    cfg.synth.test_scenes = 30
    cfg.synth.people = (1, 2)
    cfg.train.epochs = 10
    cfg.train.pen_persons_per_scene = 1
    cfg.eval.match_max_dist_mm = 10000.0
    # un-gated cells barely clear confidence thresholds; keep their
    # best-effort peaks in play so cells compare on error magnitude
    cfg.eval.nms3d_threshold = 0.05
    return cfg


_PROFILES = {"desk": desk_profile, "paper": paper_profile, "ablation": ablation_profile}


def profile(name: str) -> RunConfig:
    if name not in _PROFILES:
        raise ConfigError(f"unknown profile '{name}' (choose from {sorted(_PROFILES)})")
    return _PROFILES[name]()


# --- strict dict <-> dataclass conversion -----------------------------------

def to_dict(obj) -> dict:
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [to_dict(v) for v in obj]
    return obj


def _coerce(value, template, path: str):
    if dataclasses.is_dataclass(template):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _from_dict(type(template), value, template, path)
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(template, int) and not isinstance(template, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(template, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(template, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(template, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        n = len(template)
        if len(value) != n:
            raise ConfigError(f"{path}: expected {n} entries, got {len(value)}")
        return tuple(_coerce(v, t, f"{path}[{i}]") for i, (v, t) in enumerate(zip(value, template)))
    raise ConfigError(f"{path}: unsupported config value {value!r}")  # pragma: no cover


def _from_dict(cls, data: dict, template, path: str):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{where}'")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            sub_path = f"{path}.{f.name}" if path else f.name
            kwargs[f.name] = _coerce(data[f.name], getattr(template, f.name), sub_path)
        else:
            kwargs[f.name] = getattr(template, f.name)
    try:
        return cls(**kwargs)
    except ValueError as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def from_dict(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from (possibly partial) JSON data over `base` defaults."""
    base = base if base is not None else RunConfig()
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return _from_dict(RunConfig, data, base, "")


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return from_dict(data, base)


def apply_overrides(cfg: RunConfig, overrides: dict[str, object]) -> RunConfig:
    """Apply dotted-path overrides (e.g. {'train.lr': 1e-3}) on top of a config."""
    data = to_dict(cfg)
    for dotted, value in overrides.items():
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key '{dotted}'")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown config key '{dotted}'")
        node[parts[-1]] = value
    return from_dict(data)


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(cfg), indent=2, sort_keys=True))
