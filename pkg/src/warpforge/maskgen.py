"""Editing masks, union masks, and the three-way composite mask sampler.

Mask convention everywhere: True/1 marks a pixel to fill (inpaint), the
complement of a renderer visibility flag.  Editing masks leave frame 0
untouched so the first frame can anchor generation, and are sampled as one
static axis-aligned rectangle per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionMismatch

if TYPE_CHECKING:  # pragma: no cover
    from .reprojection import TrainingPair

__all__ = [
    "MASK_KINDS",
    "MaskVideo",
    "EditMaskConfig",
    "CompositeSample",
    "make_edit_mask",
    "union_mask",
    "sample_composite",
    "make_composite",
]

MASK_KINDS = ("pointcloud", "edit", "union")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MaskVideo:
    """Binary mask per frame, shape (N, H, W); ``kind`` tags provenance."""

    frames: np.ndarray
    kind: str

    def __post_init__(self):
        frames = np.ascontiguousarray(np.asarray(self.frames, dtype=bool))
        if frames.ndim != 3:
            raise ValueError(f"mask frames must have shape (N, H, W), got {frames.shape}")
        if self.kind not in MASK_KINDS:
            raise ValueError(f"kind must be one of {MASK_KINDS}, got {self.kind!r}")
        if self.kind == "edit" and frames.shape[0] > 0 and frames[0].any():
            raise ValueError("edit masks must leave frame 0 all-zero")
        object.__setattr__(self, "frames", _readonly(frames))

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class EditMaskConfig:
    """Bounds for the sampled edit rectangle: area as a fraction of the
    frame, aspect as width/height."""

    area_range: tuple[float, float] = (0.05, 0.40)
    aspect_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        lo, hi = self.area_range
        if not (0 < lo <= hi <= 1):
            raise ValueError(f"bad area range {self.area_range}")
        alo, ahi = self.aspect_range
        if not (0 < alo <= ahi):
            raise ValueError(f"bad aspect range {self.aspect_range}")


def _sample_rect(
    rng: np.random.Generator, width: int, height: int, cfg: EditMaskConfig
) -> tuple[int, int, int, int]:
    """Pick (x0, y0, w, h) whose realized pixel area stays inside the
    configured fraction bounds despite integer rounding."""
    frac = rng.uniform(*cfg.area_range)
    aspect = rng.uniform(*cfg.aspect_range)
    target = frac * width * height
    rw = int(round(np.sqrt(target * aspect)))
    rh = int(round(np.sqrt(target / aspect)))
    rw = min(max(rw, 1), width)
    rh = min(max(rh, 1), height)

    lo = int(np.ceil(cfg.area_range[0] * width * height))
    hi = int(np.floor(cfg.area_range[1] * width * height))
    # nudge the dimensions until the integer area is inside [lo, hi]
    while rw * rh < lo:
        if rw <= rh and rw < width:
            rw += 1
        elif rh < height:
            rh += 1
        else:
            break
    while rw * rh > hi:
        if rw >= rh and rw > 1:
            rw -= 1
        elif rh > 1:
            rh -= 1
        else:
            break

    x0 = int(rng.integers(0, width - rw + 1))
    y0 = int(rng.integers(0, height - rh + 1))
    return x0, y0, rw, rh


def make_edit_mask(
    width: int,
    height: int,
    frame_count: int,
    rng_seed: int,
    cfg: EditMaskConfig = EditMaskConfig(),
) -> MaskVideo:
    """Sample one static rectangle covering frames 1..N-1; frame 0 stays
    clear.  Identical seeds give bitwise-identical masks."""
    if width <= 0 or height <= 0:
        raise ValueError("mask dimensions must be positive")
    if frame_count < 1:
        raise ValueError("frame_count must be at least 1")
    frames = np.zeros((frame_count, height, width), dtype=bool)
    if frame_count > 1:
        rng = np.random.default_rng(rng_seed)
        x0, y0, rw, rh = _sample_rect(rng, width, height, cfg)
        frames[1:, y0 : y0 + rh, x0 : x0 + rw] = True
    return MaskVideo(frames=frames, kind="edit")


def union_mask(a: MaskVideo, b: MaskVideo) -> MaskVideo:
    """Elementwise OR of two mask videos."""
    if a.frames.shape != b.frames.shape:
        raise DimensionMismatch(
            f"mask shapes differ: {a.frames.shape} vs {b.frames.shape}"
        )
    return MaskVideo(frames=a.frames | b.frames, kind="union")


@dataclass(frozen=True)
class CompositeSample:
    """One training instance: a pair plus the mask actually supervising it."""

    pair: "TrainingPair"
    mask: MaskVideo
    kind: str
    seed: int

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise ValueError(f"kind must be one of {MASK_KINDS}, got {self.kind!r}")


def sample_composite(
    pair: "TrainingPair",
    edit_cfg: EditMaskConfig = EditMaskConfig(),
    rng_seed: int = 0,
) -> CompositeSample:
    """Draw one of {pointcloud, edit, union} uniformly and attach that mask.

    A pure function of (pair, edit_cfg, rng_seed): the kind draw and any
    edit rectangle both derive from the seed, which is recorded in the
    sample for exact replay.
    """
    rng = np.random.default_rng(rng_seed)
    kind = MASK_KINDS[int(rng.integers(0, 3))]
    pc_mask = pair.inpaint_mask
    if kind == "pointcloud":
        mask = pc_mask
    else:
        edit_seed = int(rng.integers(0, 2**63))
        edit = make_edit_mask(
            pc_mask.width, pc_mask.height, pc_mask.frame_count, edit_seed, edit_cfg
        )
        mask = edit if kind == "edit" else union_mask(pc_mask, edit)
    return CompositeSample(pair=pair, mask=mask, kind=kind, seed=int(rng_seed))


def make_composite(
    pair: "TrainingPair",
    kind: str,
    edit_cfg: EditMaskConfig = EditMaskConfig(),
    rng_seed: int = 0,
) -> CompositeSample:
    """Build a sample of an explicitly chosen kind; the seed feeds the edit
    rectangle directly (unlike ``sample_composite``, nothing is drawn from
    it beyond that)."""
    if kind not in MASK_KINDS:
        raise ValueError(f"kind must be one of {MASK_KINDS}, got {kind!r}")
    pc_mask = pair.inpaint_mask
    if kind == "pointcloud":
        mask = pc_mask
    else:
        edit = make_edit_mask(
            pc_mask.width, pc_mask.height, pc_mask.frame_count, rng_seed, edit_cfg
        )
        mask = edit if kind == "edit" else union_mask(pc_mask, edit)
    return CompositeSample(pair=pair, mask=mask, kind=kind, seed=int(rng_seed))
