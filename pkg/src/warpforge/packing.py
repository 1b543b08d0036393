"""Temporal packing: pick the most-inpainted frames of a finished trajectory
and prepend them to the next trajectory's hole video as consistency context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidK, LengthMismatch
from .geometry import Frame
from .maskgen import MaskVideo
from .reprojection import TrainingPair

__all__ = [
    "PackManifest",
    "PackedSequence",
    "frame_inpaint_area",
    "select_top_k",
    "overlap_mask",
    "build_packed_sequence",
]


def frame_inpaint_area(mask_video: MaskVideo) -> list[int]:
    """Number of to-fill pixels in each frame."""
    return [int(c) for c in mask_video.frames.sum(axis=(1, 2))]


def select_top_k(scores: Sequence[int], k: int) -> list[int]:
    """Indices of the k largest scores, ties won by the smaller frame index,
    returned sorted ascending."""
    n = len(scores)
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    arr = np.asarray(scores)
    picked = np.lexsort((np.arange(n), -arr))[:k]
    return sorted(int(i) for i in picked)


def overlap_mask(m_a: MaskVideo, m_b: MaskVideo) -> MaskVideo:
    """Per-frame intersection of two source-aligned hole masks."""
    if m_a.frames.shape != m_b.frames.shape:
        raise DimensionMismatch(
            f"mask shapes differ: {m_a.frames.shape} vs {m_b.frames.shape}"
        )
    return MaskVideo(frames=m_a.frames & m_b.frames, kind="union")


@dataclass(frozen=True)
class PackManifest:
    """Selection record: which frames were packed and where they came from."""

    k: int
    selected: tuple[int, ...]
    source: str

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(int(i) for i in self.selected))
        if len(self.selected) != self.k:
            raise ValueError("manifest must list exactly k selected indices")
        if any(b <= a for a, b in zip(self.selected, self.selected[1:])):
            raise ValueError("selected indices must be strictly ascending")


@dataclass(frozen=True)
class PackedSequence:
    """Context frames from a generated video followed by the new
    trajectory's hole video and mask."""

    context_frames: tuple[Frame, ...]
    hole_video: tuple[Frame, ...]
    hole_mask: MaskVideo
    manifest: PackManifest

    def __post_init__(self):
        object.__setattr__(self, "context_frames", tuple(self.context_frames))
        object.__setattr__(self, "hole_video", tuple(self.hole_video))
        if len(self.context_frames) != self.manifest.k:
            raise ValueError("context frame count must equal k")
        if len(self.hole_video) != self.hole_mask.frame_count:
            raise LengthMismatch("hole video and mask lengths differ")

    @property
    def total_frames(self) -> int:
        return len(self.context_frames) + len(self.hole_video)


def build_packed_sequence(
    generated_a: Sequence[Frame],
    mask_a: MaskVideo,
    hole_b: TrainingPair,
    k: int,
    source_name: str = "",
) -> PackedSequence:
    """Select the k most-inpainted frames of ``generated_a`` (scored by
    ``mask_a``) as context for trajectory b's hole video."""
    if len(generated_a) != mask_a.frame_count:
        raise LengthMismatch(
            f"generated video has {len(generated_a)} frames but mask has "
            f"{mask_a.frame_count}"
        )
    selected = select_top_k(frame_inpaint_area(mask_a), k)
    return PackedSequence(
        context_frames=tuple(generated_a[i] for i in selected),
        hole_video=hole_b.corrupted,
        hole_mask=hole_b.inpaint_mask,
        manifest=PackManifest(k=k, selected=tuple(selected), source=source_name),
    )
