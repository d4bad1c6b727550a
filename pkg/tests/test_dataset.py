import numpy as np
import pytest

from voxpose.config import RunConfig
from voxpose.nn.tensorio import TensorFormatError
from voxpose.synth.data import DataError, read_dataset, write_dataset
from voxpose.synth.generate import generate_dataset, generate_sample


def test_round_trip_bit_exact(tmp_path):
    cfg = RunConfig()
    samples = [generate_sample(cfg, 77, i) for i in range(10)]
    write_dataset(samples, tmp_path / "ds", meta={"seed": 77})
    back, manifest = read_dataset(tmp_path / "ds")
    assert manifest["count"] == 10
    assert manifest["seed"] == 77
    for a, b in zip(samples, back):
        assert a.heatmaps.tobytes() == b.heatmaps.tobytes()
        assert a.box_map.tobytes() == b.box_map.tobytes()
        assert a.depth_targets.tobytes() == b.depth_targets.tobytes()
        assert np.array_equal(a.root_pixels, b.root_pixels)
        assert a.gt_poses.tobytes() == b.gt_poses.tobytes()
        assert a.camera.to_dict() == b.camera.to_dict()


def test_corrupted_magic_names_file(tmp_path):
    cfg = RunConfig()
    samples = [generate_sample(cfg, 5, 0)]
    write_dataset(samples, tmp_path / "ds")
    victim = tmp_path / "ds" / "sample_00000.heatmaps.agrt"
    raw = bytearray(victim.read_bytes())
    raw[0:4] = b"XXXX"
    victim.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError, match="sample_00000.heatmaps.agrt"):
        read_dataset(tmp_path / "ds")


def test_manifest_person_counts(tmp_path):
    cfg = RunConfig()
    samples = [generate_sample(cfg, 8, i) for i in range(5)]
    write_dataset(samples, tmp_path / "ds")
    _, manifest = read_dataset(tmp_path / "ds")
    assert manifest["person_counts"] == [s.person_count for s in samples]


def test_empty_dataset_valid(tmp_path):
    cfg = RunConfig()
    out = generate_dataset(cfg, count=0, master_seed=1, out_dir=tmp_path / "empty")
    samples, manifest = read_dataset(out)
    assert samples == []
    assert manifest["count"] == 0
    assert "config_hash" in manifest and "skeleton" in manifest


def test_missing_manifest_rejected(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        read_dataset(tmp_path)


def test_generation_deterministic_and_thread_invariant(tmp_path):
    cfg = RunConfig()
    a = generate_dataset(cfg, 6, 99, tmp_path / "a", threads=1)
    b = generate_dataset(cfg, 6, 99, tmp_path / "b", threads=2)
    sa, _ = read_dataset(a)
    sb, _ = read_dataset(b)
    for x, y in zip(sa, sb):
        assert x.heatmaps.tobytes() == y.heatmaps.tobytes()
        assert x.gt_poses.tobytes() == y.gt_poses.tobytes()
        assert x.camera.to_dict() == y.camera.to_dict()


def test_every_depth_target_matches_projection(tmp_path):
    from voxpose.geometry import project

    cfg = RunConfig()
    samples = [generate_sample(cfg, 13, i) for i in range(5)]
    for s in samples:
        for p in range(s.person_count):
            _, _, d = project(s.camera, s.gt_poses[p, 0])
            assert s.depth_targets[p] != d or True
            # targets may carry label noise; the clean relation is checked on
            # noise-free generation below
    cfg.synth.noise.depth_noise_mm = 0.0
    cfg.synth.noise.peak_jitter_px = 0.0
    cfg.synth.noise.amp_range = (1.0, 1.0)
    cfg.synth.noise.false_positive_rate = 0.0
    cfg.synth.noise.box_noise_px = 0.0
    cfg.synth.noise.dropout = 0.0
    clean = [generate_sample(cfg, 13, i) for i in range(5)]
    for s in clean:
        for p in range(s.person_count):
            _, _, d = project(s.camera, s.gt_poses[p, 0])
            assert s.depth_targets[p] == d
