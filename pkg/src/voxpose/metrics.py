"""Prediction/ground-truth matching and pose accuracy metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraModel, camera_frame


@dataclass
class MatchResult:
    pairs: list[tuple[int, int]]  # (gt index, pred index)
    unmatched_gt: list[int]
    unmatched_pred: list[int]


@dataclass
class MetricsReport:
    mrpe: float | None = None
    mrpe_z: float | None = None
    mpjpe_abs: float | None = None
    mpjpe_rel: float | None = None
    pck_abs: float | None = None
    pck_root: float | None = None
    gt_count: int = 0
    pred_count: int = 0
    matched_count: int = 0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "mrpe": self.mrpe, "mrpe_z": self.mrpe_z,
            "mpjpe_abs": self.mpjpe_abs, "mpjpe_rel": self.mpjpe_rel,
            "pck_abs": self.pck_abs, "pck_root": self.pck_root,
            "gt_count": self.gt_count, "pred_count": self.pred_count,
            "matched_count": self.matched_count,
        }
        d.update(self.extras)
        return d


def match_people(gt_roots: np.ndarray, pred_roots: np.ndarray, max_dist: float) -> MatchResult:
    """Greedy one-to-one matching on ascending 3D root distance.

    Pairs further apart than max_dist stay unmatched. Ties break on (gt,
    pred) index order, so the result is deterministic.
    """
    if max_dist <= 0:
        raise ValueError("max_dist must be positive")
    gt_roots = np.atleast_2d(np.asarray(gt_roots, dtype=np.float64))
    pred_roots = np.atleast_2d(np.asarray(pred_roots, dtype=np.float64))
    n_gt = gt_roots.shape[0] if gt_roots.size else 0
    n_pred = pred_roots.shape[0] if pred_roots.size else 0
    entries = []
    for g in range(n_gt):
        for p in range(n_pred):
            d = float(np.linalg.norm(gt_roots[g] - pred_roots[p]))
            if d <= max_dist:
                entries.append((d, g, p))
    entries.sort()
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    pairs = []
    for d, g, p in entries:
        if g in used_gt or p in used_pred:
            continue
        pairs.append((g, p))
        used_gt.add(g)
        used_pred.add(p)
    return MatchResult(
        pairs=pairs,
        unmatched_gt=[g for g in range(n_gt) if g not in used_gt],
        unmatched_pred=[p for p in range(n_pred) if p not in used_pred],
    )


def mrpe(matches: MatchResult, gt_roots: np.ndarray, pred_roots: np.ndarray,
         cam: CameraModel) -> tuple[float, float] | None:
    """(mean Euclidean root error, mean |depth error| in the camera frame)."""
    if not matches.pairs:
        return None
    gt_roots = np.atleast_2d(gt_roots)
    pred_roots = np.atleast_2d(pred_roots)
    errs = []
    errs_z = []
    for g, p in matches.pairs:
        errs.append(float(np.linalg.norm(gt_roots[g] - pred_roots[p])))
        zg = camera_frame(cam, gt_roots[g])[2]
        zp = camera_frame(cam, pred_roots[p])[2]
        errs_z.append(abs(float(zp - zg)))
    return float(np.mean(errs)), float(np.mean(errs_z))


def mpjpe(matches: MatchResult, gt_poses: np.ndarray, pred_poses: np.ndarray,
          align_root: bool = False, root_index: int = 0) -> float | None:
    """Mean per-joint Euclidean error over matched people (root-centred if align_root)."""
    if not matches.pairs:
        return None
    per_person = []
    for g, p in matches.pairs:
        gt = np.asarray(gt_poses[g], dtype=np.float64)
        pr = np.asarray(pred_poses[p], dtype=np.float64)
        if gt.shape != pr.shape:
            raise ValueError("pose shapes disagree (skeleton mismatch)")
        if align_root:
            gt = gt - gt[root_index]
            pr = pr - pr[root_index]
        per_person.append(float(np.linalg.norm(gt - pr, axis=1).mean()))
    return float(np.mean(per_person))


def pck(matches: MatchResult, gt_poses: np.ndarray, pred_poses: np.ndarray,
        thresh_abs: float, thresh_root: float, population: str = "matched",
        root_index: int = 0) -> tuple[float | None, float | None]:
    """(pck_abs %, pck_root %) at absolute-coordinate thresholds.

    population="all" counts every joint of unmatched ground-truth people as
    incorrect; "matched" restricts the joint population to matched people.
    pck_root is always over matched roots.
    """
    if thresh_abs <= 0 or thresh_root <= 0:
        raise ValueError("thresholds must be positive")
    if population not in ("matched", "all"):
        raise ValueError(f"unknown population '{population}'")
    joint_total = 0
    joint_ok = 0
    root_ok = 0
    for g, p in matches.pairs:
        gt = np.asarray(gt_poses[g], dtype=np.float64)
        pr = np.asarray(pred_poses[p], dtype=np.float64)
        d = np.linalg.norm(gt - pr, axis=1)
        joint_total += d.shape[0]
        joint_ok += int((d <= thresh_abs).sum())
        if np.linalg.norm(gt[root_index] - pr[root_index]) <= thresh_root:
            root_ok += 1
    if population == "all":
        for g in matches.unmatched_gt:
            joint_total += np.asarray(gt_poses[g]).shape[0]
    pck_abs = 100.0 * joint_ok / joint_total if joint_total else None
    pck_root = 100.0 * root_ok / len(matches.pairs) if matches.pairs else None
    return pck_abs, pck_root
