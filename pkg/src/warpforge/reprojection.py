"""Double reprojection: source -> target -> source warps that produce
training pairs aligned with the input video.

Each frame is rendered into the target view, the rendered image and its
z-buffer are lifted back into a cloud, and that cloud is rendered through
the inverse pose.  Content invisible after the round trip becomes the
inpaint mask, so the untouched input video can serve as ground truth.  The
intermediate cloud uses the first render's z-buffer as its depth; pixels
lost in the intermediate view contribute no points and stay masked.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .camera import CameraModel, Pose, invert_pose, rotation_angle_deg
from .errors import LengthMismatch
from .geometry import DepthFrame, Frame, render_scene
from .maskgen import MaskVideo

__all__ = ["TrajectoryRef", "TrainingPair", "double_reproject"]


@dataclass(frozen=True)
class TrajectoryRef:
    """Name and maximum view angle of the trajectory that produced a pair."""

    name: str
    max_angle_deg: float


@dataclass(frozen=True)
class TrainingPair:
    """Corrupted video, its inpaint mask, and the clean source video, all in
    the source camera frame."""

    corrupted: tuple[Frame, ...]
    inpaint_mask: MaskVideo
    clean: tuple[Frame, ...]
    trajectory_ref: TrajectoryRef

    def __post_init__(self):
        object.__setattr__(self, "corrupted", tuple(self.corrupted))
        object.__setattr__(self, "clean", tuple(self.clean))
        n = len(self.corrupted)
        if n == 0:
            raise ValueError("training pair needs at least one frame")
        if len(self.clean) != n or self.inpaint_mask.frame_count != n:
            raise LengthMismatch(
                f"corrupted/clean/mask lengths differ: {n}, {len(self.clean)}, "
                f"{self.inpaint_mask.frame_count}"
            )
        w, h = self.corrupted[0].width, self.corrupted[0].height
        for f in self.corrupted + self.clean:
            if (f.width, f.height) != (w, h):
                raise LengthMismatch("all frames must share dimensions")
        if (self.inpaint_mask.width, self.inpaint_mask.height) != (w, h):
            raise LengthMismatch("mask dimensions must match the frames")

    @property
    def frame_count(self) -> int:
        return len(self.corrupted)

    @property
    def width(self) -> int:
        return self.corrupted[0].width

    @property
    def height(self) -> int:
        return self.corrupted[0].height


def _reproject_frame(
    frame: Frame,
    depth: DepthFrame,
    cam: CameraModel,
    pose: Pose,
    splat_radius: int,
) -> tuple[Frame, np.ndarray]:
    outward = render_scene(frame, depth, cam, pose, splat_radius)
    back = render_scene(outward.image, outward.depth, cam, invert_pose(pose), splat_radius)
    return back.image, ~back.visibility


def double_reproject(
    video: Sequence[Frame],
    depths: Sequence[DepthFrame],
    cam: CameraModel,
    poses: Sequence[Pose],
    splat_radius: int = 1,
    mask_dilation: int = 0,
    trajectory_ref: TrajectoryRef | None = None,
    workers: int = 1,
) -> TrainingPair:
    """Build a source-aligned training pair from a video and a pose per frame.

    ``mask_dilation`` optionally grows the inpaint mask by a square
    structuring element of that radius (off by default).  When no
    ``trajectory_ref`` is given, the maximum rotation angle is measured from
    the poses themselves and the name is left empty.
    """
    if not (len(video) == len(depths) == len(poses)):
        raise LengthMismatch(
            f"got {len(video)} frames, {len(depths)} depths, {len(poses)} poses"
        )
    if len(video) == 0:
        raise LengthMismatch("need at least one frame")

    def build(i: int) -> tuple[Frame, np.ndarray]:
        return _reproject_frame(video[i], depths[i], cam, poses[i], splat_radius)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, range(len(video))))
    else:
        results = [build(i) for i in range(len(video))]

    corrupted = tuple(image for image, _ in results)
    masks = np.stack([mask for _, mask in results])
    if mask_dilation > 0:
        size = 2 * mask_dilation + 1
        masks = np.stack([ndimage.maximum_filter(m, size=size) for m in masks])

    if trajectory_ref is None:
        max_angle = max(rotation_angle_deg(p.rotation) for p in poses)
        trajectory_ref = TrajectoryRef(name="", max_angle_deg=max_angle)

    return TrainingPair(
        corrupted=corrupted,
        inpaint_mask=MaskVideo(frames=masks, kind="pointcloud"),
        clean=tuple(video),
        trajectory_ref=trajectory_ref,
    )
