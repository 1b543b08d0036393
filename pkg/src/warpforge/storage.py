"""On-disk artifact formats: video bundles, training pairs, composite
samples, packed sequences, and mask videos.

Frames are 8-bit RGB PNG sequences with zero-padded names.  Depths default
to the raw "DPT1" format (magic ``DPT1``, u32-le width and height, row-major
f32-le values), with a 16-bit PNG fallback described by scale/offset in the
manifest (stored value 0 is reserved for invalid pixels).  Masks are 8-bit
single-channel PNGs where 255 marks the region to fill, the complement of
the renderer's visibility flag.  Manifests are JSON with sorted keys so a
manifest written twice from identical inputs is byte-identical.  Loaders
never repair: every inconsistency raises a typed error.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .camera import CameraModel
from .errors import (
    BadMagic,
    IoError,
    ManifestMismatch,
    MissingFile,
    UnsupportedVersion,
)
from .geometry import DepthFrame, Frame
from .maskgen import CompositeSample, MaskVideo
from .packing import PackManifest, PackedSequence
from .reprojection import TrainingPair, TrajectoryRef

__all__ = [
    "BUNDLE_FORMAT",
    "PAIR_FORMAT",
    "SAMPLE_FORMAT",
    "PACK_FORMAT",
    "LoadedBundle",
    "load_bundle",
    "write_bundle",
    "read_depth_file",
    "write_depth_file",
    "load_mask_video",
    "write_mask_video",
    "store_training_pair",
    "load_training_pair",
    "store_composite_sample",
    "load_composite_sample",
    "store_packed_sequence",
    "load_packed_sequence",
    "read_manifest",
    "write_manifest",
]

BUNDLE_FORMAT = "fyc-bundle/1"
PAIR_FORMAT = "fyc-pair/1"
SAMPLE_FORMAT = "fyc-sample/1"
PACK_FORMAT = "fyc-pack/1"

_DPT1_MAGIC = b"DPT1"
_PNG16_MAX = 65535


# --- low-level helpers ------------------------------------------------------


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create directory {path}: {exc}") from exc
    return path


def write_manifest(manifest: dict, path: Path) -> None:
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(f"manifest not found: {path}") from None
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestMismatch(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ManifestMismatch(f"manifest {path} must be a JSON object")
    return manifest


def _check_format(manifest: dict, expected: str, path: Path) -> None:
    tag = manifest.get("format")
    if tag is None:
        raise ManifestMismatch(f"manifest {path} lacks a 'format' tag")
    if tag != expected:
        raise UnsupportedVersion(f"{path}: expected format {expected!r}, got {tag!r}")


def _write_png(arr: np.ndarray, path: Path) -> None:
    try:
        Image.fromarray(arr).save(path, format="PNG")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img)
    except FileNotFoundError:
        raise MissingFile(f"image not found: {path}") from None
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _read_frame(path: Path, width: int, height: int) -> Frame:
    arr = _read_png(path)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ManifestMismatch(f"{path}: expected 8-bit RGB image")
    if arr.shape != (height, width, 3):
        raise ManifestMismatch(
            f"{path}: expected {width}x{height}, got {arr.shape[1]}x{arr.shape[0]}"
        )
    return Frame(arr)


def _read_mask_png(path: Path, width: int | None = None, height: int | None = None) -> np.ndarray:
    arr = _read_png(path)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ManifestMismatch(f"{path}: expected 8-bit single-channel mask")
    if width is not None and arr.shape != (height, width):
        raise ManifestMismatch(
            f"{path}: expected {width}x{height}, got {arr.shape[1]}x{arr.shape[0]}"
        )
    return arr > 127


def write_depth_file(depth: DepthFrame, path: Path) -> None:
    """Raw DPT1: magic, u32-le width/height, then row-major f32-le values."""
    header = _DPT1_MAGIC + struct.pack("<II", depth.width, depth.height)
    try:
        path.write_bytes(header + depth.values.astype("<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_depth_file(path: Path) -> DepthFrame:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise MissingFile(f"depth file not found: {path}") from None
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 12 or raw[:4] != _DPT1_MAGIC:
        raise BadMagic(f"{path}: not a DPT1 depth file")
    width, height = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * width * height
    if len(raw) != expected:
        raise ManifestMismatch(
            f"{path}: payload is {len(raw)} bytes, expected {expected}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=12).reshape(height, width)
    return DepthFrame(values)


def _png16_params(depths: Sequence[DepthFrame]) -> tuple[float, float]:
    valid = np.concatenate([d.values[d.validity] for d in depths]) if depths else np.array([])
    if valid.size == 0:
        return 1.0, 0.0
    dmin = float(valid.min())
    dmax = float(valid.max())
    scale = (dmax - dmin) / (_PNG16_MAX - 1) if dmax > dmin else 1.0
    return scale, dmin - scale


def _write_depth_png16(depth: DepthFrame, path: Path, scale: float, offset: float) -> None:
    encoded = np.zeros(depth.values.shape, dtype=np.uint16)
    valid = depth.validity
    values = np.clip(np.round((depth.values[valid] - offset) / scale), 1, _PNG16_MAX)
    encoded[valid] = values.astype(np.uint16)
    _write_png(encoded, path)


def _read_depth_png16(path: Path, scale: float, offset: float) -> DepthFrame:
    arr = _read_png(path)
    if arr.ndim != 2:
        raise ManifestMismatch(f"{path}: expected single-channel 16-bit depth PNG")
    values = np.where(arr > 0, arr.astype(np.float64) * scale + offset, 0.0)
    return DepthFrame(values.astype(np.float32))


def _frame_name(i: int) -> str:
    return f"f_{i:05d}.png"


def _depth_name(i: int, encoding: str) -> str:
    return f"d_{i:05d}.dpt" if encoding == "dpt1" else f"d_{i:05d}.png"


def _mask_name(i: int) -> str:
    return f"m_{i:05d}.png"


def _write_frames(frames: Sequence[Frame], directory: Path) -> None:
    _ensure_dir(directory)
    for i, frame in enumerate(frames):
        _write_png(frame.pixels, directory / _frame_name(i))


def _write_masks(mask: MaskVideo, directory: Path) -> None:
    _ensure_dir(directory)
    for i in range(mask.frame_count):
        _write_png(mask.frames[i].astype(np.uint8) * 255, directory / _mask_name(i))


def _check_file_count(directory: Path, expected: int, what: str) -> None:
    if not directory.is_dir():
        raise MissingFile(f"{what} directory missing: {directory}")
    present = len([p for p in directory.iterdir() if p.is_file()])
    if present != expected:
        raise ManifestMismatch(
            f"{directory}: manifest promises {expected} {what} files, found {present}"
        )


def _read_frames(directory: Path, count: int, width: int, height: int) -> tuple[Frame, ...]:
    _check_file_count(directory, count, "frame")
    return tuple(_read_frame(directory / _frame_name(i), width, height) for i in range(count))


def _read_masks(directory: Path, count: int, width: int, height: int, kind: str) -> MaskVideo:
    _check_file_count(directory, count, "mask")
    frames = np.stack(
        [_read_mask_png(directory / _mask_name(i), width, height) for i in range(count)]
    )
    return MaskVideo(frames=frames, kind=kind)


# --- video bundles ----------------------------------------------------------


@dataclass(frozen=True)
class LoadedBundle:
    """In-memory view of a video bundle."""

    frames: tuple[Frame, ...]
    depths: tuple[DepthFrame, ...]
    masks: MaskVideo | None
    camera: CameraModel

    @property
    def frame_count(self) -> int:
        return len(self.frames)


def write_bundle(
    path: Path | str,
    frames: Sequence[Frame],
    depths: Sequence[DepthFrame],
    camera: CameraModel,
    masks: MaskVideo | None = None,
    depth_encoding: str = "dpt1",
) -> Path:
    """Write a bundle directory; returns the manifest path."""
    if depth_encoding not in ("dpt1", "png16"):
        raise ValueError(f"unknown depth encoding {depth_encoding!r}")
    if len(frames) != len(depths) or not frames:
        raise ManifestMismatch("bundle needs equal, non-zero frame and depth counts")
    width, height = frames[0].width, frames[0].height
    path = Path(path)
    _ensure_dir(path)

    _write_frames(frames, path / "frames")
    depth_dir = _ensure_dir(path / "depths")
    manifest = {
        "format": BUNDLE_FORMAT,
        "width": width,
        "height": height,
        "frame_count": len(frames),
        "camera": {
            "fx": camera.fx,
            "fy": camera.fy,
            "cx": camera.cx,
            "cy": camera.cy,
            "width": camera.width,
            "height": camera.height,
        },
        "depth_encoding": depth_encoding,
        "has_masks": masks is not None,
    }
    if depth_encoding == "dpt1":
        for i, depth in enumerate(depths):
            write_depth_file(depth, depth_dir / _depth_name(i, depth_encoding))
    else:
        scale, offset = _png16_params(depths)
        manifest["depth_scale"] = scale
        manifest["depth_offset"] = offset
        for i, depth in enumerate(depths):
            _write_depth_png16(depth, depth_dir / _depth_name(i, depth_encoding), scale, offset)
    if masks is not None:
        manifest["mask_semantics"] = "inpaint"
        _write_masks(masks, path / "masks")

    manifest_path = path / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def load_bundle(path: Path | str) -> LoadedBundle:
    """Load and fully validate a bundle directory."""
    path = Path(path)
    manifest = read_manifest(path / "manifest.json")
    _check_format(manifest, BUNDLE_FORMAT, path)
    try:
        width = int(manifest["width"])
        height = int(manifest["height"])
        count = int(manifest["frame_count"])
        cam_block = manifest["camera"]
        camera = CameraModel(
            fx=float(cam_block["fx"]),
            fy=float(cam_block["fy"]),
            cx=float(cam_block["cx"]),
            cy=float(cam_block["cy"]),
            width=int(cam_block["width"]),
            height=int(cam_block["height"]),
        )
        encoding = manifest["depth_encoding"]
        has_masks = bool(manifest.get("has_masks", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed bundle manifest ({exc})") from exc
    if (camera.width, camera.height) != (width, height):
        raise ManifestMismatch(f"{path}: camera dimensions disagree with bundle")
    if encoding not in ("dpt1", "png16"):
        raise UnsupportedVersion(f"{path}: unknown depth encoding {encoding!r}")

    frames = _read_frames(path / "frames", count, width, height)

    depth_dir = path / "depths"
    _check_file_count(depth_dir, count, "depth")
    depths = []
    for i in range(count):
        if encoding == "dpt1":
            depth = read_depth_file(depth_dir / _depth_name(i, encoding))
        else:
            try:
                scale = float(manifest["depth_scale"])
                offset = float(manifest["depth_offset"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ManifestMismatch(f"{path}: png16 bundle lacks scale/offset") from exc
            depth = _read_depth_png16(depth_dir / _depth_name(i, encoding), scale, offset)
        if (depth.width, depth.height) != (width, height):
            raise ManifestMismatch(
                f"{path}: depth {i} is {depth.width}x{depth.height}, expected {width}x{height}"
            )
        depths.append(depth)

    masks = _read_masks(path / "masks", count, width, height, "pointcloud") if has_masks else None
    return LoadedBundle(frames=frames, depths=tuple(depths), masks=masks, camera=camera)


# --- standalone mask videos ---------------------------------------------------


def write_mask_video(mask: MaskVideo, path: Path | str) -> Path:
    """Write masks as a bare directory of PNGs."""
    path = Path(path)
    _write_masks(mask, path)
    return path


def load_mask_video(path: Path | str, kind: str = "pointcloud") -> MaskVideo:
    """Load masks from either a bundle (its masks/ directory) or a bare
    directory of 8-bit PNGs sorted by name."""
    path = Path(path)
    if (path / "manifest.json").exists():
        bundle = load_bundle(path)
        if bundle.masks is None:
            raise ManifestMismatch(f"{path}: bundle declares no masks")
        return bundle.masks
    if not path.is_dir():
        raise MissingFile(f"mask directory missing: {path}")
    files = sorted(p for p in path.iterdir() if p.suffix == ".png")
    if not files:
        raise MissingFile(f"no mask PNGs in {path}")
    frames = [_read_mask_png(p) for p in files]
    if any(f.shape != frames[0].shape for f in frames):
        raise ManifestMismatch(f"{path}: mask frames disagree in size")
    return MaskVideo(frames=np.stack(frames), kind=kind)


# --- training pairs -----------------------------------------------------------


def store_training_pair(pair: TrainingPair, path: Path | str) -> Path:
    """Write a training pair directory; returns the manifest path."""
    path = Path(path)
    _ensure_dir(path)
    _write_frames(pair.corrupted, path / "corrupted")
    _write_masks(pair.inpaint_mask, path / "masks")
    _write_frames(pair.clean, path / "clean")
    manifest = {
        "format": PAIR_FORMAT,
        "frame_count": pair.frame_count,
        "width": pair.width,
        "height": pair.height,
        "trajectory": {
            "name": pair.trajectory_ref.name,
            "max_angle_deg": pair.trajectory_ref.max_angle_deg,
        },
    }
    manifest_path = path / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def load_training_pair(path: Path | str) -> TrainingPair:
    path = Path(path)
    manifest = read_manifest(path / "manifest.json")
    _check_format(manifest, PAIR_FORMAT, path)
    try:
        count = int(manifest["frame_count"])
        width = int(manifest["width"])
        height = int(manifest["height"])
        traj = manifest["trajectory"]
        ref = TrajectoryRef(name=str(traj["name"]), max_angle_deg=float(traj["max_angle_deg"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed pair manifest ({exc})") from exc
    return TrainingPair(
        corrupted=_read_frames(path / "corrupted", count, width, height),
        inpaint_mask=_read_masks(path / "masks", count, width, height, "pointcloud"),
        clean=_read_frames(path / "clean", count, width, height),
        trajectory_ref=ref,
    )


# --- composite samples ---------------------------------------------------------


def store_composite_sample(sample: CompositeSample, path: Path | str) -> Path:
    path = Path(path)
    _ensure_dir(path)
    store_training_pair(sample.pair, path / "pair")
    _write_masks(sample.mask, path / "sample_mask")
    manifest = {
        "format": SAMPLE_FORMAT,
        "kind": sample.kind,
        "seed": sample.seed,
        "pair_dir": "pair",
    }
    manifest_path = path / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def load_composite_sample(path: Path | str) -> CompositeSample:
    path = Path(path)
    manifest = read_manifest(path / "manifest.json")
    _check_format(manifest, SAMPLE_FORMAT, path)
    try:
        kind = str(manifest["kind"])
        seed = int(manifest["seed"])
        pair_dir = str(manifest["pair_dir"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed sample manifest ({exc})") from exc
    pair = load_training_pair(path / pair_dir)
    mask = _read_masks(
        path / "sample_mask", pair.frame_count, pair.width, pair.height,
        kind if kind in ("edit", "union") else "pointcloud",
    )
    return CompositeSample(pair=pair, mask=mask, kind=kind, seed=seed)


# --- packed sequences -----------------------------------------------------------


def store_packed_sequence(seq: PackedSequence, path: Path | str) -> Path:
    path = Path(path)
    _ensure_dir(path)
    _write_frames(seq.context_frames, path / "context")
    _write_frames(seq.hole_video, path / "hole")
    _write_masks(seq.hole_mask, path / "hole_mask")
    manifest = {
        "format": PACK_FORMAT,
        "k": seq.manifest.k,
        "selected": list(seq.manifest.selected),
        "source": seq.manifest.source,
        "context_frames": [f"context/{_frame_name(i)}" for i in range(len(seq.context_frames))],
        "hole_frames": [f"hole/{_frame_name(i)}" for i in range(len(seq.hole_video))],
        "hole_masks": [f"hole_mask/{_mask_name(i)}" for i in range(seq.hole_mask.frame_count)],
    }
    manifest_path = path / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def load_packed_sequence(path: Path | str) -> PackedSequence:
    path = Path(path)
    manifest = read_manifest(path / "manifest.json")
    _check_format(manifest, PACK_FORMAT, path)
    try:
        k = int(manifest["k"])
        selected = tuple(int(i) for i in manifest["selected"])
        source = str(manifest["source"])
        context_paths = [path / p for p in manifest["context_frames"]]
        hole_paths = [path / p for p in manifest["hole_frames"]]
        mask_paths = [path / p for p in manifest["hole_masks"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed pack manifest ({exc})") from exc

    def read_frame_list(paths: list[Path]) -> tuple[Frame, ...]:
        frames = []
        for p in paths:
            arr = _read_png(p)
            if arr.ndim != 3 or arr.dtype != np.uint8:
                raise ManifestMismatch(f"{p}: expected 8-bit RGB image")
            frames.append(Frame(arr))
        return tuple(frames)

    mask_frames = [_read_mask_png(p) for p in mask_paths]
    if not mask_frames:
        raise ManifestMismatch(f"{path}: packed sequence lists no hole masks")
    return PackedSequence(
        context_frames=read_frame_list(context_paths),
        hole_video=read_frame_list(hole_paths),
        hole_mask=MaskVideo(frames=np.stack(mask_frames), kind="pointcloud"),
        manifest=PackManifest(k=k, selected=selected, source=source),
    )
