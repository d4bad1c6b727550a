import math

import numpy as np
import pytest

from voxpose.geometry import (
    BehindCameraError, BodyHeights, CameraModel, GridSpec, backproject, grid_depth_range,
    oriented_camera, pitch_camera, project, tbs_depth, voxel_center, voxel_coords, world_to_voxel,
)


def simple_camera():
    return CameraModel(fx=1000, fy=1000, cx=100, cy=100, R=np.eye(3), t=np.zeros(3),
                       width=200, height=200)


def random_camera(rng):
    return oriented_camera(
        f=rng.uniform(80, 400), theta=rng.uniform(-0.5, 0.9), yaw=rng.uniform(0, 2 * math.pi),
        height=rng.uniform(500, 3000), distance=rng.uniform(2000, 8000),
        image_w=160, image_h=120,
    )


def test_on_axis_projection():
    cam = simple_camera()
    assert project(cam, (0, 0, 2000)) == (100.0, 100.0, 2000.0)


def test_lateral_offset_projection():
    cam = simple_camera()
    u, v, d = project(cam, (200, 0, 2000))
    assert (u, v, d) == (200.0, 100.0, 2000.0)


def test_behind_camera_rejected():
    with pytest.raises(BehindCameraError):
        project(simple_camera(), (0, 0, -10))


def test_backproject_example_and_rejection():
    cam = simple_camera()
    assert np.allclose(backproject(cam, 100, 100, 2000), [0, 0, 2000])
    with pytest.raises(ValueError):
        backproject(cam, 10, 10, 0.0)


def test_backproject_depth_linearity():
    cam = simple_camera()
    a = backproject(cam, 130, 80, 1500)
    b = backproject(cam, 130, 80, 3000)
    assert np.allclose(2 * a, b)


def test_round_trips_random_cameras():
    rng = np.random.default_rng(42)
    for _ in range(100):
        cam = random_camera(rng)
        p = rng.uniform([-1500, -1500, 0], [1500, 1500, 1900])
        try:
            u, v, d = project(cam, p)
        except BehindCameraError:
            continue
        back = backproject(cam, u, v, d)
        assert np.linalg.norm(back - p) < 1e-6
        u2, v2, d2 = project(cam, back)
        assert abs(u2 - u) < 1e-9 and abs(v2 - v) < 1e-9 and abs(d2 - d) / d < 1e-9


def test_rotation_validation():
    bad = np.eye(3)
    bad[0, 0] = 1.001
    with pytest.raises(ValueError, match="orthonormal"):
        CameraModel(fx=1, fy=1, cx=0, cy=0, R=bad, t=np.zeros(3), width=10, height=10)
    with pytest.raises(ValueError, match="focal"):
        CameraModel(fx=-1, fy=1, cx=0, cy=0, R=np.eye(3), t=np.zeros(3), width=10, height=10)


def test_pitch_camera_zero_is_axis_relabel():
    cam = pitch_camera(f=500, theta=0.0, cam_height=1700, image_w=100, image_h=80)
    expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    assert np.allclose(cam.R, expected)
    u, v, d = project(cam, (0, 3000, 1700))  # straight ahead at camera height
    assert (u, v) == (50.0, 40.0)
    assert d == 3000.0


def test_pitch_camera_optical_axis_hits_center():
    theta = math.radians(30)
    cam = pitch_camera(f=500, theta=theta, cam_height=2000, image_w=100, image_h=80)
    d = 4000.0
    target = np.array([0.0, d * math.cos(theta), 2000 - d * math.sin(theta)])
    u, v, depth = project(cam, target)
    assert abs(u - 50) < 1e-9 and abs(v - 40) < 1e-9
    assert depth == pytest.approx(d)


def test_nearly_straight_down_sees_ground_point_near_center():
    eps = 1e-3
    cam = pitch_camera(f=500, theta=math.pi / 2 - eps, cam_height=2000, image_w=100, image_h=80)
    u, v, _ = project(cam, (0.0, 0.0, 0.0))
    assert abs(u - 50) < 1e-6
    assert abs(v - 40) < 500 * 2 * eps


def test_camera_json_round_trip():
    rng = np.random.default_rng(7)
    cam = random_camera(rng)
    back = CameraModel.from_dict(cam.to_dict())
    assert np.allclose(back.R, cam.R) and np.allclose(back.t, cam.t)
    assert (back.fx, back.fy, back.cx, back.cy) == (cam.fx, cam.fy, cam.cx, cam.cy)


def test_tbs_depth_examples():
    h = BodyHeights(h_real=1700, h_pose=1700)
    assert tbs_depth(1400, h, 0.0, h_img=476) == pytest.approx(5000, rel=1e-12)
    h2 = BodyHeights(h_real=2000, h_pose=2000)
    assert tbs_depth(1000, h2, math.radians(60), h_img=500) == pytest.approx(2000, rel=1e-12)
    with pytest.raises(ValueError):
        tbs_depth(1000, h, 0.0, h_img=0.0)


def test_tbs_depth_homogeneity():
    h = BodyHeights(h_real=1650, h_pose=1400)
    d = tbs_depth(900, h, 0.2, 300)
    assert tbs_depth(1800, h, 0.2, 300) == 2 * d
    assert tbs_depth(900, h, 0.2, 600) == d / 2


def test_tbs_depth_zero_pitch_identity():
    h = BodyHeights(h_real=1700, h_pose=1550)
    for h_img in (123.0, 300.0, 77.5):
        assert tbs_depth(800, h, 0.0, h_img) * h_img == 800 * h.gamma_pose * h.h_real


def test_tbs_depth_recovers_rendered_person_depth():
    # render a standing person, measure its projected height, feed it back
    from voxpose.geometry import project_points
    from voxpose.synth.skeleton import default_skeleton, pose_heights, sample_pose

    skel = default_skeleton()
    pose = sample_pose(skel, np.random.default_rng(0), angle_jitter=0.0)
    f = 800.0
    cam = pitch_camera(f=f, theta=0.0, cam_height=1000.0, image_w=2000, image_h=2000)
    for depth in (3000.0, 4500.0, 6000.0):
        world = pose + np.array([0.0, depth, 900.0])
        u, v, z = project_points(cam, world)
        h_img = float(v.max() - v.min())
        heights = pose_heights(skel, world)
        recovered = tbs_depth(f, heights, 0.0, h_img)
        assert abs(recovered - depth) / depth < 0.05


def test_body_heights_sanity_bounds():
    with pytest.raises(ValueError):
        BodyHeights(h_real=1700, h_pose=2200)
    with pytest.raises(ValueError):
        BodyHeights(h_real=-1, h_pose=1.0)


def test_voxel_center_examples():
    grid = GridSpec(origin=(0, 0, 0), voxel_size=(100, 100, 100), dims=(80, 80, 24))
    assert np.array_equal(voxel_center(grid, (0, 0, 0)), [50, 50, 50])
    assert np.array_equal(voxel_center(grid, (79, 79, 23)), [7950, 7950, 2350])
    with pytest.raises(IndexError):
        voxel_center(grid, (80, 0, 0))


def test_world_to_voxel_inverts_center():
    grid = GridSpec(origin=(-3000, -3000, 0), voxel_size=(150, 150, 150), dims=(40, 40, 12))
    rng = np.random.default_rng(3)
    for _ in range(50):
        idx = tuple(int(i) for i in rng.integers(0, (40, 40, 12)))
        assert world_to_voxel(grid, voxel_center(grid, idx)) == idx
    assert np.allclose(voxel_coords(grid, voxel_center(grid, (3, 4, 5))), [3, 4, 5])


def test_grid_depth_range_contains_interior_depths():
    grid = GridSpec(origin=(-3000, -3000, 0), voxel_size=(150, 150, 150), dims=(40, 40, 12))
    rng = np.random.default_rng(11)
    cam = oriented_camera(f=100, theta=0.3, yaw=1.2, height=2000, distance=4500,
                          image_w=120, image_h=64)
    lo, hi = grid_depth_range(cam, grid)
    assert lo < hi
    for _ in range(200):
        idx = tuple(int(i) for i in rng.integers(0, (40, 40, 12)))
        _, _, d = project(cam, voxel_center(grid, idx))
        assert lo - 1e-6 <= d <= hi + 1e-6
