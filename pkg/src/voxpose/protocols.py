"""Generalization-study protocols: train/eval cells emitted as CSV rows.

Every cell is a plain (synth, train, eval) pipeline run with its own derived
seeds; rows follow the schema
``protocol,cell_id,train_tag,test_tag,metric,value,count``.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

from .config import ConfigError, RunConfig, from_dict, to_dict
from .metrics import MetricsReport
from .pipeline import evaluate_dataset
from .synth.generate import generate_sample
from .synth.sampling import CameraRanges
from .synth.skeleton import default_skeleton
from .train import train_model

PROTOCOLS = ("projection", "cross_view", "random_view", "cross_pose")

_METRICS = ("mrpe", "mrpe_z", "mpjpe_abs", "mpjpe_rel", "pck_abs", "pck_root",
            "mrpe_ren", "mrpe_z_ren")

# three fixed desk-scale viewpoints, all inside the default random ranges
FIXED_CAMERAS = {
    "cam_a": CameraRanges(f=(88.0, 88.0), pitch=(0.16, 0.16), height=(1500.0, 1500.0),
                          yaw=(0.0, 0.0), distance=(4600.0, 4600.0)),
    "cam_b": CameraRanges(f=(98.0, 98.0), pitch=(0.28, 0.28), height=(2000.0, 2000.0),
                          yaw=(2.1, 2.1), distance=(4200.0, 4200.0)),
    "cam_c": CameraRanges(f=(108.0, 108.0), pitch=(0.40, 0.40), height=(2500.0, 2500.0),
                          yaw=(4.2, 4.2), distance=(3800.0, 3800.0)),
}


def _clone(cfg: RunConfig) -> RunConfig:
    return from_dict(to_dict(cfg))


def _with_camera(cfg: RunConfig, ranges: CameraRanges) -> RunConfig:
    out = _clone(cfg)
    out.synth.camera = dataclasses.replace(ranges)
    return out


def _generate(cfg: RunConfig, count: int, seed: int) -> list:
    return [generate_sample(cfg, seed, i) for i in range(count)]


def _rows_from_report(protocol: str, cell_id: str, train_tag: str, test_tag: str,
                      report: MetricsReport) -> list[dict]:
    d = report.to_dict()
    rows = []
    for metric in _METRICS:
        value = d.get(metric)
        if value is None:
            continue
        rows.append({
            "protocol": protocol, "cell_id": cell_id, "train_tag": train_tag,
            "test_tag": test_tag, "metric": metric,
            "value": f"{value:.3f}", "count": report.matched_count,
        })
    return rows


def _train_cell(cfg: RunConfig, seed_offset: int, mode: str = "gated"):
    skel = default_skeleton(cfg.skeleton.stature)
    train_samples = _generate(cfg, cfg.synth.train_scenes, cfg.seeds.synth + seed_offset)
    nets, _ = train_model(cfg, train_samples, skel, mode=mode)
    return nets


def run_protocol(protocol: str, cfg: RunConfig, out_dir: str | Path) -> Path:
    """Execute one protocol and write `{out_dir}/{protocol}.csv`."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol '{protocol}' (choose from {PROTOCOLS})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _PROTOCOL_FNS[protocol](cfg)
    path = out_dir / f"{protocol}.csv"
    write_rows(rows, path)
    return path


def write_rows(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=["protocol", "cell_id", "train_tag", "test_tag", "metric", "value", "count"])
        writer.writeheader()
        writer.writerows(rows)


def _projection(cfg: RunConfig) -> list[dict]:
    test_samples = _generate(cfg, cfg.synth.test_scenes, cfg.seeds.synth + 500)
    rows = []
    for mode in ("gated", "naive"):
        nets = _train_cell(cfg, seed_offset=0, mode=mode)
        report, _ = evaluate_dataset(nets, test_samples, cfg, mode=mode)
        rows += _rows_from_report("projection", mode, mode, "test", report)
    return rows


def _cross_view(cfg: RunConfig) -> list[dict]:
    tests = {
        name: _generate(_with_camera(cfg, ranges), cfg.synth.test_scenes, cfg.seeds.synth + 500 + k)
        for k, (name, ranges) in enumerate(FIXED_CAMERAS.items())
    }
    rows = []
    for k, (name, ranges) in enumerate(FIXED_CAMERAS.items()):
        cell_cfg = _with_camera(cfg, ranges)
        nets = _train_cell(cell_cfg, seed_offset=k + 1)
        for test_name, samples in tests.items():
            report, _ = evaluate_dataset(nets, samples, cfg)
            rows += _rows_from_report("cross_view", f"{name}->{test_name}", name, test_name, report)
    return rows


def _random_view(cfg: RunConfig) -> list[dict]:
    tests = {
        name: _generate(_with_camera(cfg, ranges), cfg.synth.test_scenes, cfg.seeds.synth + 500 + k)
        for k, (name, ranges) in enumerate(FIXED_CAMERAS.items())
    }
    nets = _train_cell(cfg, seed_offset=0)  # cfg's own camera ranges = random views
    rows = []
    for test_name, samples in tests.items():
        report, _ = evaluate_dataset(nets, samples, cfg)
        rows += _rows_from_report("random_view", f"random->{test_name}", "random", test_name, report)
    return rows


def _cross_pose(cfg: RunConfig) -> list[dict]:
    narrow = _clone(cfg)
    narrow.synth.angle_jitter = 0.02
    narrow.synth.root_yaw = 0.3
    broad = _clone(cfg)
    families = {"narrow_poses": narrow, "broad_poses": broad}
    tests = {
        name: _generate(fam_cfg, cfg.synth.test_scenes, cfg.seeds.synth + 700 + k)
        for k, (name, fam_cfg) in enumerate(families.items())
    }
    rows = []
    for k, (name, fam_cfg) in enumerate(families.items()):
        nets = _train_cell(fam_cfg, seed_offset=10 + k)
        for test_name, samples in tests.items():
            report, _ = evaluate_dataset(nets, samples, cfg)
            rows += _rows_from_report("cross_pose", f"{name}->{test_name}", name, test_name, report)
    return rows


_PROTOCOL_FNS = {
    "projection": _projection,
    "cross_view": _cross_view,
    "random_view": _random_view,
    "cross_pose": _cross_pose,
}


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def rows_value(rows: list[dict], cell_id: str, metric: str) -> float:
    for row in rows:
        if row["cell_id"] == cell_id and row["metric"] == metric:
            return float(row["value"])
    raise KeyError(f"no row for cell '{cell_id}' metric '{metric}'")
