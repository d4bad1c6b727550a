import numpy as np
import pytest

from voxpose.geometry import BodyHeights
from voxpose.synth.skeleton import SkeletonSpec, default_skeleton, pose_heights, sample_pose


def test_default_skeleton_shape():
    skel = default_skeleton()
    assert skel.joint_count == 15
    assert skel.root_index == 0
    assert skel.parents[0] == -1
    assert skel.stature() == pytest.approx(1700.0)


def test_stature_scaling():
    tall = default_skeleton(stature=1900)
    assert tall.stature() == pytest.approx(1900.0)
    ratio = tall.bone_lengths[1:] / default_skeleton().bone_lengths[1:]
    assert np.allclose(ratio, 1900 / 1700)


def test_zero_jitter_reproduces_rest_template():
    skel = default_skeleton()
    pose = sample_pose(skel, np.random.default_rng(0), angle_jitter=0.0)
    assert np.array_equal(pose, skel.rest_pose())


def test_bone_lengths_preserved_under_jitter():
    skel = default_skeleton()
    rng = np.random.default_rng(1)
    for _ in range(20):
        pose = sample_pose(skel, rng, angle_jitter=0.6, root_yaw_range=np.pi)
        for j, p in enumerate(skel.parents):
            if j == skel.root_index:
                continue
            length = np.linalg.norm(pose[j] - pose[p])
            assert abs(length - skel.bone_lengths[j]) < 1e-6


def test_same_seed_same_pose():
    skel = default_skeleton()
    a = sample_pose(skel, np.random.default_rng(123), 0.4, np.pi)
    b = sample_pose(skel, np.random.default_rng(123), 0.4, np.pi)
    assert np.array_equal(a, b)


def test_root_stays_at_origin():
    skel = default_skeleton()
    pose = sample_pose(skel, np.random.default_rng(5), 0.5, np.pi)
    assert np.array_equal(pose[skel.root_index], np.zeros(3))


def test_invalid_parent_rejected():
    with pytest.raises(ValueError, match="parent"):
        SkeletonSpec(names=("a", "b"), parents=(-1, 5), rest_offsets=np.ones((2, 3)))


def test_pose_heights_gamma_in_range():
    skel = default_skeleton()
    rng = np.random.default_rng(2)
    for _ in range(30):
        pose = sample_pose(skel, rng, angle_jitter=0.3, root_yaw_range=np.pi)
        h = pose_heights(skel, pose)
        assert isinstance(h, BodyHeights)
        assert 0 < h.gamma_pose <= 1.2


def test_skeleton_dict_round_trip():
    skel = default_skeleton(1650)
    back = SkeletonSpec.from_dict(skel.to_dict())
    assert back.names == skel.names
    assert back.parents == skel.parents
    assert np.allclose(back.rest_offsets, skel.rest_offsets)
