import numpy as np
import pytest

from voxpose.geometry import pitch_camera
from voxpose.metrics import match_people, mpjpe, mrpe, pck
from oracles import best_assignment_oracle, greedy_match_oracle


def cam():
    return pitch_camera(f=100.0, theta=0.2, cam_height=1800.0, image_w=120, image_h=64)


def test_identical_sets_match_perfectly():
    roots = np.array([[0, 0, 900], [800, 0, 900], [0, 900, 950]], dtype=float)
    m = match_people(roots, roots, max_dist=500)
    assert m.pairs == [(0, 0), (1, 1), (2, 2)]
    assert m.unmatched_gt == [] and m.unmatched_pred == []


def test_missing_prediction_leaves_one_unmatched():
    gt = np.array([[0, 0, 900], [800, 0, 900]], dtype=float)
    pred = gt[:1] + 10.0
    m = match_people(gt, pred, max_dist=500)
    assert len(m.pairs) == 1
    assert m.unmatched_gt == [1]


def test_greedy_matches_hand_case_and_assignment_oracle():
    gt = np.array([[0, 0, 0], [1000, 0, 0], [2000, 0, 0]], dtype=float)
    pred = np.array([[120, 0, 0], [1050, 0, 0], [2400, 0, 0]], dtype=float)
    m = match_people(gt, pred, max_dist=500)
    assert m.pairs == greedy_match_oracle(gt, pred, 500)
    best, _ = best_assignment_oracle(gt, pred, 500)
    assert sorted(m.pairs) == best  # a case where greedy agrees with optimal


def test_too_far_rejected():
    gt = np.array([[0, 0, 0]], dtype=float)
    pred = np.array([[900, 0, 0]], dtype=float)
    m = match_people(gt, pred, max_dist=500)
    assert m.pairs == [] and m.unmatched_gt == [0] and m.unmatched_pred == [0]


def test_mrpe_examples():
    c = cam()
    gt = np.array([[0.0, 4000.0, 900.0]])
    m = match_people(gt, gt, 500)
    assert mrpe(m, gt, gt, c) == (0.0, 0.0)
    # single person offset 300mm along the camera depth axis
    fwd = c.R[2]  # camera forward in world coordinates
    pred = gt + 300.0 * fwd
    m = match_people(gt, pred, 500)
    e, ez = mrpe(m, gt, pred, c)
    assert e == pytest.approx(300.0)
    assert ez == pytest.approx(300.0)


def test_mrpe_z_mean_of_abs():
    c = cam()
    fwd = c.R[2]
    gt = np.array([[0.0, 4000.0, 900.0], [500.0, 4500.0, 900.0]])
    pred = gt.copy()
    pred[0] += 100.0 * fwd
    pred[1] -= 300.0 * fwd
    m = match_people(gt, pred, 500)
    _, ez = mrpe(m, gt, pred, c)
    assert ez == pytest.approx(200.0)


def test_mrpe_absent_with_no_matches():
    c = cam()
    gt = np.array([[0.0, 4000.0, 900.0]])
    pred = np.zeros((0, 3))
    m = match_people(gt, pred, 500)
    assert mrpe(m, gt, pred, c) is None


def test_mpjpe_alignment_removes_constant_offset():
    rng = np.random.default_rng(0)
    gt = rng.normal(size=(2, 15, 3)) * 200
    pred = gt + np.array([100.0, 0.0, 0.0])
    m = match_people(gt[:, 0, :], pred[:, 0, :], 500)
    assert mpjpe(m, gt, pred, align_root=False) == pytest.approx(100.0)
    assert mpjpe(m, gt, pred, align_root=True) == pytest.approx(0.0, abs=1e-9)


def test_mpjpe_two_joint_hand_case():
    gt = np.array([[[0.0, 0, 0], [100.0, 0, 0]]])
    pred = np.array([[[30.0, 0, 0], [100.0, 40.0, 0]]])
    m = match_people(gt[:, 0], pred[:, 0], 500)
    assert mpjpe(m, gt, pred) == pytest.approx((30 + 40) / 2)


def test_pck_exact_and_thresholds():
    rng = np.random.default_rng(1)
    gt = rng.normal(size=(2, 15, 3)) * 300
    m = match_people(gt[:, 0], gt[:, 0], 500)
    pa, pr = pck(m, gt, gt, 150.0, 250.0, "matched")
    assert pa == 100.0 and pr == 100.0


def test_pck_population_all_counts_unmatched_joints():
    gt = np.stack([np.zeros((15, 3)), np.full((15, 3), 5000.0)])
    pred = np.zeros((1, 15, 3))
    m = match_people(gt[:, 0], pred[:, 0], 500)
    pa_matched, _ = pck(m, gt, pred, 150.0, 250.0, "matched")
    pa_all, _ = pck(m, gt, pred, 150.0, 250.0, "all")
    assert pa_matched == 100.0
    assert pa_all == pytest.approx(50.0)


def test_pck_rigid_shift_beyond_threshold_scores_zero():
    gt = np.zeros((1, 15, 3))
    pred = gt + np.array([160.0, 0.0, 0.0])
    m = match_people(gt[:, 0], pred[:, 0], 500)
    pa, pr = pck(m, gt, pred, 150.0, 250.0, "matched")
    assert pa == 0.0
    assert pr == 100.0  # root within 250


def test_pck_monotone_in_threshold():
    rng = np.random.default_rng(2)
    gt = rng.normal(size=(3, 15, 3)) * 400
    pred = gt + rng.normal(size=gt.shape) * 120
    m = match_people(gt[:, 0], pred[:, 0], 5000)
    values = [pck(m, gt, pred, th, 250.0, "matched")[0] for th in (50, 100, 200, 400, 800)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_metrics_permutation_invariance():
    c = cam()
    rng = np.random.default_rng(3)
    gt = rng.normal(size=(3, 15, 3)) * 300 + np.array([0, 4000, 900])
    pred = gt + rng.normal(size=gt.shape) * 50
    perm = [2, 0, 1]
    m1 = match_people(gt[:, 0], pred[:, 0], 500)
    m2 = match_people(gt[:, 0], pred[perm][:, 0], 500)
    assert mrpe(m1, gt[:, 0], pred[:, 0], c)[0] == pytest.approx(
        mrpe(m2, gt[:, 0], pred[perm][:, 0], c)[0])
    assert mpjpe(m1, gt, pred) == pytest.approx(mpjpe(m2, gt, pred[perm]))


def test_triangle_inequality_rel_vs_abs():
    rng = np.random.default_rng(4)
    for _ in range(20):
        gt = rng.normal(size=(1, 15, 3)) * 300
        pred = gt + rng.normal(size=gt.shape) * 100
        m = match_people(gt[:, 0], pred[:, 0], 5000)
        rel = mpjpe(m, gt, pred, align_root=True)
        ab = mpjpe(m, gt, pred, align_root=False)
        root_err = float(np.linalg.norm(gt[0, 0] - pred[0, 0]))
        assert rel <= ab + root_err + 1e-9


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        match_people(np.zeros((1, 3)), np.zeros((1, 3)), max_dist=0)
    m = match_people(np.zeros((1, 3)), np.zeros((1, 3)), 100)
    with pytest.raises(ValueError):
        pck(m, np.zeros((1, 2, 3)), np.zeros((1, 2, 3)), -1.0, 250.0)
    with pytest.raises(ValueError, match="population"):
        pck(m, np.zeros((1, 2, 3)), np.zeros((1, 2, 3)), 150.0, 250.0, "bogus")
