import numpy as np
import pytest

from voxpose.config import RunConfig
from voxpose.synth.corrupt import NoiseConfig, corrupt_agr
from voxpose.synth.generate import generate_scene


def clean_sample(seed=0, people=(1, 2)):
    cfg = RunConfig()
    cfg.synth.people = people
    return generate_scene(cfg, np.random.default_rng(seed))


def test_zero_noise_is_bit_identical():
    sample = clean_sample()
    out = corrupt_agr(sample, NoiseConfig(), np.random.default_rng(7))
    assert out.heatmaps.tobytes() == sample.heatmaps.tobytes()
    assert out.box_map.tobytes() == sample.box_map.tobytes()
    assert np.array_equal(out.depth_targets, sample.depth_targets)
    assert np.array_equal(out.root_pixels, sample.root_pixels)
    assert np.array_equal(out.gt_poses, sample.gt_poses)


def test_dropout_one_empties_heatmaps():
    sample = clean_sample(seed=1)
    out = corrupt_agr(sample, NoiseConfig(dropout=1.0), np.random.default_rng(0))
    assert out.heatmaps.max() == 0.0
    assert np.array_equal(out.gt_poses, sample.gt_poses)


def test_depth_noise_half_normal_mean():
    # tiny image + short focal keeps 5000 re-renders cheap
    from voxpose.synth.sampling import CameraRanges

    cfg = RunConfig()
    cfg.synth.heatmap_w = 16
    cfg.synth.heatmap_h = 12
    cfg.synth.people = (2, 2)
    cfg.synth.camera = CameraRanges(f=(12.0, 14.0))
    sample = generate_scene(cfg, np.random.default_rng(3))
    sigma = 100.0
    noise = NoiseConfig(depth_noise_mm=sigma)
    rng = np.random.default_rng(42)
    deltas = []
    for _ in range(5000):
        out = corrupt_agr(sample, noise, rng)
        deltas.extend(np.abs(out.depth_targets - sample.depth_targets))
    mean = np.mean(deltas)
    expected = sigma * np.sqrt(2 / np.pi)
    assert abs(mean - expected) / expected < 0.05


def test_jitter_moves_peaks_but_not_ground_truth():
    sample = clean_sample(seed=2)
    noise = NoiseConfig(peak_jitter_px=2.0, amp_range=(0.8, 0.95))
    out = corrupt_agr(sample, noise, np.random.default_rng(1))
    assert not np.array_equal(out.heatmaps, sample.heatmaps)
    assert np.array_equal(out.gt_poses, sample.gt_poses)
    assert np.array_equal(out.root_pixels, sample.root_pixels)
    assert out.heatmaps.max() <= 0.95 + 1e-6


def test_false_positives_add_blobs():
    sample = clean_sample(seed=4)
    noise = NoiseConfig(false_positive_rate=30.0)
    out = corrupt_agr(sample, noise, np.random.default_rng(2))
    assert (out.heatmaps > 0.5).sum() > (sample.heatmaps > 0.5).sum()


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        NoiseConfig(dropout=-0.1)
    with pytest.raises(ValueError):
        NoiseConfig(amp_range=(1.0, 0.5))
