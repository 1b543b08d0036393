"""Shared scene builders for the test suite.

Everything is seeded through numpy's default generator so failures replay
exactly.
"""

import numpy as np
import pytest

from warpforge import CameraModel, DepthFrame, Frame, Pose
from warpforge.camera import _matrix_from_quat


def make_camera(width: int, height: int, focal: float | None = None) -> CameraModel:
    return CameraModel(
        fx=focal or float(width),
        fy=focal or float(width),
        cx=width / 2.0,
        cy=height / 2.0,
        width=width,
        height=height,
    )


def random_scene(seed: int, width: int, height: int, depth_range=(2.0, 6.0)):
    """Random colors and random (valid) depths."""
    rng = np.random.default_rng(seed)
    frame = Frame(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))
    depth = DepthFrame(rng.uniform(*depth_range, (height, width)).astype(np.float32))
    return frame, depth


def random_scene_with_holes(seed: int, width: int, height: int, hole_frac=0.2):
    """Like random_scene but a fraction of pixels carry invalid depth."""
    rng = np.random.default_rng(seed)
    frame = Frame(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))
    values = rng.uniform(2.0, 6.0, (height, width)).astype(np.float32)
    values[rng.random((height, width)) < hole_frac] = 0.0
    return frame, DepthFrame(values)


def block_scene(seed: int, size: int, block: int = 8):
    """Piecewise-constant colors and layered depth, the locally smooth
    structure of real video; sub-pixel warp quantization rarely flips a
    color here, unlike per-pixel noise."""
    rng = np.random.default_rng(seed)
    nb = size // block
    colors = rng.integers(0, 256, (nb, nb, 3), dtype=np.uint8)
    frame = Frame(np.kron(colors, np.ones((block, block, 1), dtype=np.uint8)))
    layers = rng.uniform(2.0, 6.0, (nb, nb)).astype(np.float32)
    depth = DepthFrame(np.kron(layers, np.ones((block, block), dtype=np.float32)))
    return frame, depth


def random_pose(rng: np.random.Generator, max_translation: float = 0.5) -> Pose:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    # bias toward mild rotations so part of the scene stays in view
    q = q * 0.2 + np.array([1.0, 0, 0, 0]) * 0.8
    q /= np.linalg.norm(q)
    return Pose(_matrix_from_quat(q), rng.uniform(-max_translation, max_translation, 3))


@pytest.fixture
def small_camera() -> CameraModel:
    return make_camera(16, 16, focal=8.0)
