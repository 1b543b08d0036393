"""Depth unprojection and forward point-splat rendering with z-buffering.

``unproject`` lifts every valid-depth pixel into a colored camera-space
point; ``project_render`` warps a cloud into a target camera, splatting each
point over a ``(2r+1)**2`` square and keeping the nearest point per pixel.

Determinism contract: z-fights within ``Z_TIE_TOL`` are won by the lowest
source pixel (row-major order), then by the lowest point index.  The
rendered depth at a pixel is the minimum transformed z among all points
covering it, even when the color winner sits within the tie tolerance
slightly behind that minimum.  ``brute_force_render`` re-implements the
identical contract as a naive per-point loop and exists purely as an
equivalence oracle; both paths evaluate the same scalar expressions so their
outputs match bitwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .camera import CameraModel, Pose
from .errors import DimensionMismatch, LengthMismatch

__all__ = [
    "Frame",
    "DepthFrame",
    "PointCloud",
    "RenderResult",
    "unproject",
    "project_render",
    "render_scene",
    "brute_force_render",
    "render_trajectory",
    "Z_NEAR",
    "Z_TIE_TOL",
]

Z_NEAR = 1e-4  # points at or behind this camera depth are culled
Z_TIE_TOL = 1e-6  # z-fight window resolved by source pixel order

_INT64_MAX = np.iinfo(np.int64).max
_SRC_KEY_STRIDE = np.int64(2) ** 31


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Frame:
    """One 8-bit RGB video frame, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"frame pixels must have shape (H, W, 3), got {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {px.dtype}")
        if px.shape[0] <= 0 or px.shape[1] <= 0:
            raise ValueError("frame dimensions must be positive")
        object.__setattr__(self, "pixels", _readonly(np.ascontiguousarray(px).copy()))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DepthFrame:
    """Per-pixel camera-Z depths; invalid entries (<= 0 or non-finite) are
    stored as 0 and excluded from the validity mask."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise ValueError(f"depth values must be 2-D, got shape {v.shape}")
        valid = np.isfinite(v) & (v > 0)
        v = np.where(valid, v, np.float32(0.0))
        object.__setattr__(self, "values", _readonly(np.ascontiguousarray(v)))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def validity(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True)
class PointCloud:
    """Colored camera-space points with per-point source pixel provenance."""

    points: np.ndarray  # (N, 3) float64, z > 0
    colors: np.ndarray  # (N, 3) uint8
    source_pixels: np.ndarray  # (N, 2) int32 (u, v), non-negative

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        cols = np.ascontiguousarray(np.asarray(self.colors))
        src = np.ascontiguousarray(np.asarray(self.source_pixels, dtype=np.int32))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        if cols.shape != pts.shape:
            raise ValueError("colors must parallel points with shape (N, 3)")
        if cols.dtype != np.uint8:
            raise ValueError(f"colors must be uint8, got {cols.dtype}")
        if src.shape != (pts.shape[0], 2):
            raise ValueError("source_pixels must parallel points with shape (N, 2)")
        if pts.size:
            if not np.isfinite(pts).all():
                raise ValueError("point coordinates must be finite")
            if (pts[:, 2] <= 0).any():
                raise ValueError("point depths must be positive")
            if (src < 0).any():
                raise ValueError("source pixel indices must be non-negative")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "colors", _readonly(cols))
        object.__setattr__(self, "source_pixels", _readonly(src))

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(
            np.empty((0, 3), dtype=np.float64),
            np.empty((0, 3), dtype=np.uint8),
            np.empty((0, 2), dtype=np.int32),
        )

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class RenderResult:
    """Rendered image, z-buffer depth, and per-pixel visibility."""

    image: Frame
    depth: DepthFrame
    visibility: np.ndarray  # (H, W) bool

    def __post_init__(self):
        vis = np.ascontiguousarray(np.asarray(self.visibility, dtype=bool))
        if vis.shape != (self.image.height, self.image.width):
            raise ValueError("visibility shape must match the image")
        if (self.depth.width, self.depth.height) != (self.image.width, self.image.height):
            raise ValueError("depth dimensions must match the image")
        if ((self.depth.values > 0) != vis).any():
            raise ValueError("visibility must match rendered depth validity")
        if self.image.pixels[~vis].any():
            raise ValueError("invisible pixels must be black")
        object.__setattr__(self, "visibility", _readonly(vis))


def unproject(frame: Frame, depth: DepthFrame, cam: CameraModel) -> PointCloud:
    """Lift every valid-depth pixel to a 3-D point:
    ``x = (u - cx) / fx * d, y = (v - cy) / fy * d, z = d``."""
    if (frame.width, frame.height) != (depth.width, depth.height):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs depth {depth.width}x{depth.height}"
        )
    if (frame.width, frame.height) != (cam.width, cam.height):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs camera {cam.width}x{cam.height}"
        )
    valid = depth.validity
    if not valid.any():
        return PointCloud.empty()
    vv, uu = np.nonzero(valid)
    d = depth.values[vv, uu].astype(np.float64)
    x = (uu.astype(np.float64) - cam.cx) / cam.fx * d
    y = (vv.astype(np.float64) - cam.cy) / cam.fy * d
    return PointCloud(
        points=np.stack([x, y, d], axis=1),
        colors=frame.pixels[vv, uu],
        source_pixels=np.stack([uu, vv], axis=1).astype(np.int32),
    )


@numba.njit(cache=True, nogil=True)
def _splat_kernel(points, colors, src_keys, rot, trans, fx, fy, cx, cy,
                  width, height, radius, z_near, z_tol):  # pragma: no cover - exercised via project_render
    n = points.shape[0]
    npix = height * width
    us = np.empty(n, dtype=np.int64)
    vs = np.empty(n, dtype=np.int64)
    zs = np.empty(n, dtype=np.float64)
    ok = np.zeros(n, dtype=np.bool_)

    r00 = rot[0, 0]; r01 = rot[0, 1]; r02 = rot[0, 2]
    r10 = rot[1, 0]; r11 = rot[1, 1]; r12 = rot[1, 2]
    r20 = rot[2, 0]; r21 = rot[2, 1]; r22 = rot[2, 2]
    t0 = trans[0]; t1 = trans[1]; t2 = trans[2]

    for i in range(n):
        x = points[i, 0]; y = points[i, 1]; z = points[i, 2]
        zc = r20 * x + r21 * y + r22 * z + t2
        if zc <= z_near:
            continue
        xc = r00 * x + r01 * y + r02 * z + t0
        yc = r10 * x + r11 * y + r12 * z + t1
        uf = np.floor(fx * xc / zc + cx + 0.5)
        vf = np.floor(fy * yc / zc + cy + 0.5)
        if uf < -radius or uf > width - 1 + radius:
            continue
        if vf < -radius or vf > height - 1 + radius:
            continue
        us[i] = np.int64(uf)
        vs[i] = np.int64(vf)
        zs[i] = zc
        ok[i] = True

    zmin = np.full(npix, np.inf)
    for i in range(n):
        if not ok[i]:
            continue
        for dv in range(-radius, radius + 1):
            pv = vs[i] + dv
            if pv < 0 or pv >= height:
                continue
            base = pv * width
            for du in range(-radius, radius + 1):
                pu = us[i] + du
                if pu < 0 or pu >= width:
                    continue
                p = base + pu
                if zs[i] < zmin[p]:
                    zmin[p] = zs[i]

    win_key = np.full(npix, _INT64_MAX, dtype=np.int64)
    win_idx = np.full(npix, -1, dtype=np.int64)
    for i in range(n):
        if not ok[i]:
            continue
        for dv in range(-radius, radius + 1):
            pv = vs[i] + dv
            if pv < 0 or pv >= height:
                continue
            base = pv * width
            for du in range(-radius, radius + 1):
                pu = us[i] + du
                if pu < 0 or pu >= width:
                    continue
                p = base + pu
                if zs[i] <= zmin[p] + z_tol:
                    k = src_keys[i]
                    if k < win_key[p] or (k == win_key[p] and i < win_idx[p]):
                        win_key[p] = k
                        win_idx[p] = i

    image = np.zeros((npix, 3), dtype=np.uint8)
    depth = np.zeros(npix, dtype=np.float32)
    visible = np.zeros(npix, dtype=np.bool_)
    for p in range(npix):
        i = win_idx[p]
        if i >= 0:
            visible[p] = True
            depth[p] = np.float32(zmin[p])
            image[p, 0] = colors[i, 0]
            image[p, 1] = colors[i, 1]
            image[p, 2] = colors[i, 2]
    return image, depth, visible


@numba.njit(inline="always")
def _project_pixel(depthvals, sv, su, rot, trans, fx, fy, cx, cy,
                   width, height, radius, z_near):  # pragma: no cover
    """Unproject pixel (su, sv) and project it through the pose; returns
    (keep, u, v, z).  Expressions match unproject() and _splat_kernel()."""
    d32 = depthvals[sv, su]
    if d32 <= 0.0:
        return False, np.int64(0), np.int64(0), 0.0
    d = np.float64(d32)
    x = (np.float64(su) - cx) / fx * d
    y = (np.float64(sv) - cy) / fy * d
    z = d
    zc = rot[2, 0] * x + rot[2, 1] * y + rot[2, 2] * z + trans[2]
    if zc <= z_near:
        return False, np.int64(0), np.int64(0), 0.0
    xc = rot[0, 0] * x + rot[0, 1] * y + rot[0, 2] * z + trans[0]
    yc = rot[1, 0] * x + rot[1, 1] * y + rot[1, 2] * z + trans[1]
    uf = np.floor(fx * xc / zc + cx + 0.5)
    vf = np.floor(fy * yc / zc + cy + 0.5)
    if uf < -radius or uf > width - 1 + radius:
        return False, np.int64(0), np.int64(0), 0.0
    if vf < -radius or vf > height - 1 + radius:
        return False, np.int64(0), np.int64(0), 0.0
    return True, np.int64(uf), np.int64(vf), zc


@numba.njit(cache=True, nogil=True)
def _scene_splat_kernel(pixels, depthvals, rot, trans, fx, fy, cx, cy,
                        width, height, radius, z_near, z_tol):  # pragma: no cover - exercised via render_scene
    # fused unproject + splat: evaluates exactly the expressions of
    # unproject() and _splat_kernel(), in the same order, on the same
    # values, so its output is bitwise-identical to the composition.
    # Projections are recomputed per pass; that is cheaper than staging
    # per-point arrays for scenes of this size.
    src_h = depthvals.shape[0]
    src_w = depthvals.shape[1]
    npix = height * width

    zmin = np.full(npix, np.inf)
    for sv in range(src_h):
        for su in range(src_w):
            keep, u, v, zc = _project_pixel(
                depthvals, sv, su, rot, trans, fx, fy, cx, cy, width, height, radius, z_near
            )
            if not keep:
                continue
            for dv in range(-radius, radius + 1):
                pv = v + dv
                if pv < 0 or pv >= height:
                    continue
                base = pv * width
                for du in range(-radius, radius + 1):
                    pu = u + du
                    if pu < 0 or pu >= width:
                        continue
                    p = base + pu
                    if zc < zmin[p]:
                        zmin[p] = zc

    # every valid pixel owns a distinct source key, so the point-index tie
    # fallback of _splat_kernel is unreachable here
    win_key = np.full(npix, _INT64_MAX, dtype=np.int64)
    for sv in range(src_h):
        for su in range(src_w):
            keep, u, v, zc = _project_pixel(
                depthvals, sv, su, rot, trans, fx, fy, cx, cy, width, height, radius, z_near
            )
            if not keep:
                continue
            k = np.int64(sv) * _SRC_KEY_STRIDE + np.int64(su)
            for dv in range(-radius, radius + 1):
                pv = v + dv
                if pv < 0 or pv >= height:
                    continue
                base = pv * width
                for du in range(-radius, radius + 1):
                    pu = u + du
                    if pu < 0 or pu >= width:
                        continue
                    p = base + pu
                    if zc <= zmin[p] + z_tol and k < win_key[p]:
                        win_key[p] = k
    image = np.zeros((npix, 3), dtype=np.uint8)
    depth = np.zeros(npix, dtype=np.float32)
    visible = np.zeros(npix, dtype=np.bool_)
    for p in range(npix):
        k = win_key[p]
        if k != _INT64_MAX:
            sv = k // _SRC_KEY_STRIDE
            su = k - sv * _SRC_KEY_STRIDE
            visible[p] = True
            depth[p] = np.float32(zmin[p])
            image[p, 0] = pixels[sv, su, 0]
            image[p, 1] = pixels[sv, su, 1]
            image[p, 2] = pixels[sv, su, 2]
    return image, depth, visible


def render_scene(
    frame: Frame, depth: DepthFrame, cam: CameraModel, pose: Pose, splat_radius: int = 1
) -> RenderResult:
    """Render one frame's cloud under a pose in a single fused pass.

    Output is bitwise-identical to
    ``project_render(unproject(frame, depth, cam), cam, pose, splat_radius)``
    while skipping the intermediate point arrays; the per-frame pipelines use
    it as their hot path.
    """
    if splat_radius not in (0, 1, 2):
        raise ValueError(f"splat_radius must be 0, 1, or 2, got {splat_radius}")
    if (frame.width, frame.height) != (depth.width, depth.height):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs depth {depth.width}x{depth.height}"
        )
    if (frame.width, frame.height) != (cam.width, cam.height):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs camera {cam.width}x{cam.height}"
        )
    image, depth_out, visible = _scene_splat_kernel(
        frame.pixels,
        depth.values,
        pose.rotation,
        pose.translation,
        float(cam.fx),
        float(cam.fy),
        float(cam.cx),
        float(cam.cy),
        np.int64(cam.width),
        np.int64(cam.height),
        np.int64(splat_radius),
        Z_NEAR,
        Z_TIE_TOL,
    )
    shape = (cam.height, cam.width)
    return RenderResult(
        image=Frame(image.reshape(shape + (3,))),
        depth=DepthFrame(depth_out.reshape(shape)),
        visibility=visible.reshape(shape),
    )


def _source_keys(pc: PointCloud) -> np.ndarray:
    src = pc.source_pixels.astype(np.int64)
    return src[:, 1] * _SRC_KEY_STRIDE + src[:, 0]


def _empty_result(cam: CameraModel) -> RenderResult:
    shape = (cam.height, cam.width)
    return RenderResult(
        image=Frame(np.zeros(shape + (3,), dtype=np.uint8)),
        depth=DepthFrame(np.zeros(shape, dtype=np.float32)),
        visibility=np.zeros(shape, dtype=bool),
    )


def project_render(
    pc: PointCloud, cam: CameraModel, pose: Pose, splat_radius: int = 1
) -> RenderResult:
    """Transform a cloud by ``pose``, project through ``cam``, and splat.

    Each surviving point covers a ``(2*splat_radius+1)**2`` pixel square
    centered on its rounded projection; the z-buffer and tie rules are
    described in the module docstring.  Points at or behind ``Z_NEAR`` are
    culled.  An empty cloud renders all-invisible.
    """
    if splat_radius not in (0, 1, 2):
        raise ValueError(f"splat_radius must be 0, 1, or 2, got {splat_radius}")
    if len(pc) == 0:
        return _empty_result(cam)
    image, depth, visible = _splat_kernel(
        pc.points,
        pc.colors,
        _source_keys(pc),
        pose.rotation,
        pose.translation,
        float(cam.fx),
        float(cam.fy),
        float(cam.cx),
        float(cam.cy),
        np.int64(cam.width),
        np.int64(cam.height),
        np.int64(splat_radius),
        Z_NEAR,
        Z_TIE_TOL,
    )
    shape = (cam.height, cam.width)
    return RenderResult(
        image=Frame(image.reshape(shape + (3,))),
        depth=DepthFrame(depth.reshape(shape)),
        visibility=visible.reshape(shape),
    )


def brute_force_render(pc: PointCloud, cam: CameraModel, pose: Pose) -> RenderResult:
    """Reference renderer: naive per-point loops, radius 0, full z pass.

    Kept deliberately simple and independent of the production kernel; used
    by the tests as a bitwise equivalence oracle.
    """
    width, height = cam.width, cam.height
    fx, fy, cx, cy = float(cam.fx), float(cam.fy), float(cam.cx), float(cam.cy)
    r = pose.rotation
    t = pose.translation
    r00, r01, r02 = float(r[0, 0]), float(r[0, 1]), float(r[0, 2])
    r10, r11, r12 = float(r[1, 0]), float(r[1, 1]), float(r[1, 2])
    r20, r21, r22 = float(r[2, 0]), float(r[2, 1]), float(r[2, 2])
    t0, t1, t2 = float(t[0]), float(t[1]), float(t[2])
    keys = _source_keys(pc)

    hits: list[tuple[int, float, int, int]] = []  # (pixel, z, src_key, point_idx)
    for i in range(len(pc)):
        x = float(pc.points[i, 0])
        y = float(pc.points[i, 1])
        z = float(pc.points[i, 2])
        zc = r20 * x + r21 * y + r22 * z + t2
        if zc <= Z_NEAR:
            continue
        xc = r00 * x + r01 * y + r02 * z + t0
        yc = r10 * x + r11 * y + r12 * z + t1
        uf = np.floor(fx * xc / zc + cx + 0.5)
        vf = np.floor(fy * yc / zc + cy + 0.5)
        if uf < 0 or uf > width - 1 or vf < 0 or vf > height - 1:
            continue
        hits.append((int(vf) * width + int(uf), zc, int(keys[i]), i))

    zmin: dict[int, float] = {}
    for p, zc, _, _ in hits:
        if p not in zmin or zc < zmin[p]:
            zmin[p] = zc

    winners: dict[int, tuple[int, int]] = {}
    for p, zc, key, i in hits:
        if zc <= zmin[p] + Z_TIE_TOL:
            cur = winners.get(p)
            if cur is None or key < cur[0] or (key == cur[0] and i < cur[1]):
                winners[p] = (key, i)

    image = np.zeros((height, width, 3), dtype=np.uint8)
    depth = np.zeros((height, width), dtype=np.float32)
    visibility = np.zeros((height, width), dtype=bool)
    for p, (_, i) in winners.items():
        v, u = divmod(p, width)
        image[v, u] = pc.colors[i]
        depth[v, u] = np.float32(zmin[p])
        visibility[v, u] = True
    return RenderResult(image=Frame(image), depth=DepthFrame(depth), visibility=visibility)


def render_trajectory(
    video: Sequence[Frame],
    depths: Sequence[DepthFrame],
    cam: CameraModel,
    poses: Sequence[Pose],
    splat_radius: int = 1,
    workers: int = 1,
) -> list[RenderResult]:
    """Render each frame's cloud under its own pose, independently per frame.

    ``workers > 1`` distributes frames over a thread pool; the splat kernel
    releases the GIL, so frame-parallel rendering scales near-linearly while
    producing bitwise-identical output to the sequential path.
    """
    if not (len(video) == len(depths) == len(poses)):
        raise LengthMismatch(
            f"got {len(video)} frames, {len(depths)} depths, {len(poses)} poses"
        )
    if len(video) == 0:
        raise LengthMismatch("need at least one frame")

    def render_one(i: int) -> RenderResult:
        return render_scene(video[i], depths[i], cam, poses[i], splat_radius)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(render_one, range(len(video))))
    return [render_one(i) for i in range(len(video))]
