from .skeleton import SkeletonSpec, default_skeleton, pose_heights, sample_pose
from .sampling import CameraRanges, PlacementError, place_people, sample_camera
from .render import (
    gt_root_heatmap3d,
    joint_peaks,
    loss_2d,
    loss_2d_grad,
    person_boxes,
    render_box_and_depth,
    render_box_map,
    render_gaussian_channels,
    render_heatmaps,
)
from .corrupt import NoiseConfig, corrupt_agr
from .data import AgrSample, DataError, read_dataset, read_manifest, write_dataset

# scene/dataset generation lives in .generate; import it directly: pulling it
# in here would close an import cycle through the config module

__all__ = [
    "SkeletonSpec", "default_skeleton", "pose_heights", "sample_pose",
    "CameraRanges", "PlacementError", "place_people", "sample_camera",
    "gt_root_heatmap3d", "joint_peaks", "loss_2d", "loss_2d_grad", "person_boxes",
    "render_box_and_depth", "render_box_map", "render_gaussian_channels", "render_heatmaps",
    "NoiseConfig", "corrupt_agr",
    "AgrSample", "DataError", "read_dataset", "read_manifest", "write_dataset",
]
