"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Criteria are property-based checks over the geometric and data pipeline;
stated budgets and tolerances are asserted as written.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from warpforge import (
    DepthFrame,
    Frame,
    Keyframe,
    MaskVideo,
    Pose,
    StageState,
    StageOrderViolation,
    TRAINER_DEFAULTS,
    Trajectory,
    brute_force_render,
    double_reproject,
    frame_inpaint_area,
    invert_pose,
    load_composite_sample,
    make_edit_mask,
    max_view_angle,
    overlap_mask,
    plan_stages,
    project_render,
    render_trajectory,
    rotation_angle_deg,
    sample_composite,
    sample_poses,
    select_top_k,
    unproject,
    write_bundle,
)
from warpforge.dsl import parse_trajectory
from warpforge.packing import build_packed_sequence
from warpforge.schedule import (
    emit_stage_dataset,
    load_stage_state,
    save_stage_state,
)

from conftest import make_camera, random_pose, random_scene, random_scene_with_holes


@contextmanager
def criterion(name: str):
    try:
        yield
    except Exception:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


@pytest.fixture(scope="module", autouse=True)
def warm_kernel():
    # load the jitted splat kernel before any timed section
    cam = make_camera(4, 4)
    frame, depth = random_scene(0, 4, 4)
    pc = unproject(frame, depth, cam)
    for radius in (0, 1):
        project_render(pc, cam, Pose.identity(), splat_radius=radius)


def _yaw_sweep(angle: float, frames: int = 2) -> Trajectory:
    keyframes = (Keyframe(index=0),) if frames == 1 else (
        Keyframe(index=0),
        Keyframe(index=frames - 1, yaw=angle),
    )
    return Trajectory(name=f"yaw{angle:g}", frame_count=frames, keyframes=keyframes)


def test_identity_round_trip():
    with criterion("identity round trip: psi(phi(x)) == x, 100 scenes, < 1 s"):
        scenes = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            size = int(rng.integers(4, 65))
            frame, depth = (
                random_scene_with_holes(seed, size, size)
                if seed % 2
                else random_scene(seed, size, size)
            )
            scenes.append((frame, depth, make_camera(size, size)))
        t0 = time.perf_counter()
        for frame, depth, cam in scenes:
            result = project_render(
                unproject(frame, depth, cam), cam, Pose.identity(), splat_radius=0
            )
            valid = depth.validity
            assert np.array_equal(result.visibility, valid)
            assert np.array_equal(result.image.pixels[valid], frame.pixels[valid])
            assert not result.image.pixels[~valid].any()
            assert np.array_equal(result.depth.values, depth.values)
        elapsed = time.perf_counter() - t0
        print(f"  100 identity round trips in {elapsed:.2f} s")
        assert elapsed < 1.0


def test_oracle_equivalence():
    with criterion("oracle equivalence: kernel == brute force on 100 scenes, <= 5 s"):
        scenes = []
        for seed in range(100):
            rng = np.random.default_rng(10_000 + seed)
            frame, depth = random_scene_with_holes(seed, 32, 32, hole_frac=0.1)
            scenes.append((frame, depth, random_pose(rng)))
        cam = make_camera(32, 32)
        t0 = time.perf_counter()
        for frame, depth, pose in scenes:
            pc = unproject(frame, depth, cam)
            fast = project_render(pc, cam, pose, splat_radius=0)
            slow = brute_force_render(pc, cam, pose)
            assert np.array_equal(fast.image.pixels, slow.image.pixels)
            assert np.array_equal(fast.depth.values, slow.depth.values)
            assert np.array_equal(fast.visibility, slow.visibility)
        elapsed = time.perf_counter() - t0
        print(f"  100 oracle comparisons in {elapsed:.2f} s")
        assert elapsed <= 5.0


def test_analytic_disocclusion():
    with criterion("analytic disocclusion: 2 px shift, mask band 2 px (radius 0 exact)"):
        cam = make_camera(16, 16, focal=8.0)
        frame, _ = random_scene(3, 16, 16)
        depth = DepthFrame(np.full((16, 16), 4.0, dtype=np.float32))
        pose = Pose(np.eye(3), [-1.0, 0.0, 0.0])  # truck +x by 1

        rendered = project_render(unproject(frame, depth, cam), cam, pose, splat_radius=0)
        assert np.array_equal(rendered.image.pixels[:, :14], frame.pixels[:, 2:])
        assert not rendered.visibility[:, 14:].any()

        exact = double_reproject([frame], [depth], cam, [pose], splat_radius=0)
        mask = exact.inpaint_mask.frames[0]
        assert mask[:, :2].all() and not mask[:, 2:].any()

        splatted = double_reproject([frame], [depth], cam, [pose], splat_radius=1)
        widths = (~splatted.inpaint_mask.frames[0]).argmax(axis=1)
        assert (np.abs(widths - 2) <= 1).all()


def test_double_reprojection_identity():
    with criterion("double-reprojection identity: mask == 0 and V'' == V^s bit-exact"):
        cam = make_camera(24, 24)
        frames, depths = zip(*(random_scene(s, 24, 24) for s in range(3)))
        pair = double_reproject(frames, depths, cam, [Pose.identity()] * 3, splat_radius=0)
        assert not pair.inpaint_mask.frames.any()
        for corrupted, clean in zip(pair.corrupted, frames):
            assert np.array_equal(corrupted.pixels, clean.pixels)


def test_mask_monotonicity():
    with criterion("mask monotonicity: mean hole area non-decreasing over yaw sweeps"):
        angles = (5.0, 10.0, 20.0, 30.0, 40.0)
        cam = make_camera(48, 48)
        means = []
        for angle in angles:
            areas = []
            for seed in range(20):
                frame, depth = random_scene_with_holes(seed, 48, 48, hole_frac=0.1)
                poses = sample_poses(_yaw_sweep(angle), pivot_depth=4.0)
                pair = double_reproject(
                    [frame, frame], [depth, depth], cam, poses, splat_radius=0
                )
                areas.append(int(pair.inpaint_mask.frames[1].sum()))
            means.append(float(np.mean(areas)))
        print(f"  mean hole areas {dict(zip(angles, np.round(means, 1)))}")
        assert all(b >= a for a, b in zip(means, means[1:]))


def test_composite_sampler():
    with criterion("composite sampler: chi-square p > 0.01 over 3000 draws, frame 0 clear"):
        cam = make_camera(8, 8)
        frame, depth = random_scene(0, 8, 8)
        pair = double_reproject(
            [frame] * 2, [depth] * 2, cam, [Pose.identity()] * 2, splat_radius=0
        )
        counts = {"pointcloud": 0, "edit": 0, "union": 0}
        for seed in range(3000):
            sample = sample_composite(pair, rng_seed=seed)
            counts[sample.kind] += 1
            if sample.kind == "edit":
                assert not sample.mask.frames[0].any()
        result = stats.chisquare(list(counts.values()))
        print(f"  draw counts {counts}, chi-square p = {result.pvalue:.3f}")
        assert result.pvalue > 0.01
        for seed in range(50):
            assert not make_edit_mask(16, 16, 4, rng_seed=seed).frames[0].any()


def test_scheduler_gating(tmp_path):
    with criterion("scheduler: emitted angles gated, state round-trips, order enforced"):
        cam = make_camera(16, 16)
        frames, depths = zip(*(random_scene_with_holes(s, 16, 16) for s in range(3)))
        source = tmp_path / "src"
        write_bundle(source, frames, depths, cam)

        plan = plan_stages(25, 10, 45)
        out = tmp_path / "s0"
        manifest = emit_stage_dataset(plan, 0, source, 6, seeds=0, out_dir=out)
        for name in manifest.bundles:
            sample = load_composite_sample(out / name)
            traj = parse_trajectory((out / name / "trajectory.traj").read_text())
            assert max_view_angle(traj) <= plan.stages[0].max_angle_deg
            assert sample.pair.trajectory_ref.max_angle_deg <= plan.stages[0].max_angle_deg

        state = load_stage_state(out / "state.json")
        save_stage_state(state, tmp_path / "copy.json")
        assert load_stage_state(tmp_path / "copy.json") == state

        with pytest.raises(StageOrderViolation):
            StageState(stage=0).with_trained("w")
        with pytest.raises(StageOrderViolation):
            state.with_generated(["x"])  # DATASET_EMITTED, not yet TRAINED
        with pytest.raises(StageOrderViolation):
            emit_stage_dataset(plan, 1, source, 1, seeds=0, out_dir=tmp_path / "s1")


def test_packing():
    with criterion("packing: top-k oracle x1000, stream length k+N, overlap subset"):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            n = int(rng.integers(1, 120))
            scores = rng.integers(0, 40, n).tolist()
            k = int(rng.integers(1, n + 1))
            oracle = sorted(sorted(range(n), key=lambda i: (-scores[i], i))[:k])
            assert select_top_k(scores, k) == oracle

        cam = make_camera(8, 8)
        frame, depth = random_scene(1, 8, 8)
        hole = double_reproject(
            [frame] * 5, [depth] * 5, cam, [Pose.identity()] * 5, splat_radius=0
        )
        generated = tuple(
            Frame(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)) for _ in range(9)
        )
        mask = MaskVideo(frames=rng.random((9, 8, 8)) < 0.4, kind="pointcloud")
        seq = build_packed_sequence(generated, mask, hole, k=4)
        assert seq.total_frames == 4 + 5
        assert frame_inpaint_area(mask) == [int(m.sum()) for m in mask.frames]

        a = MaskVideo(frames=rng.random((4, 12, 12)) < 0.5, kind="pointcloud")
        b = MaskVideo(frames=rng.random((4, 12, 12)) < 0.5, kind="pointcloud")
        o = overlap_mask(a, b).frames
        assert not (o & ~a.frames).any() and not (o & ~b.frames).any()


def test_pose_algebra():
    with criterion("pose algebra: inverse residual <= 1e-9, slerp midpoint/max angle"):
        rng = np.random.default_rng(5)
        for _ in range(100):
            pose = random_pose(rng)
            resid = np.abs(pose.compose(invert_pose(pose)).matrix() - np.eye(4)).max()
            assert resid <= 1e-9

        sweep = _yaw_sweep(30.0, frames=81)
        poses = sample_poses(sweep, pivot_depth=4.0)
        midpoint = rotation_angle_deg(poses[40].rotation)
        assert abs(midpoint - 15.0) <= 1e-9
        assert abs(max_view_angle(sweep) - 30.0) <= 1e-9


def test_paper_default_manifest(tmp_path):
    with criterion("trainer manifest defaults match the published configuration"):
        cam = make_camera(8, 8)
        frames, depths = zip(*(random_scene(s, 8, 8) for s in range(2)))
        source = tmp_path / "src"
        write_bundle(source, frames, depths, cam)
        manifest = emit_stage_dataset(
            plan_stages(25, 10, 45), 0, source, 1, seeds=0, out_dir=tmp_path / "s0"
        )
        assert manifest.trainer == {
            "rank": 128,
            "lr": 1e-5,
            "steps": 2000,
            "weight_decay": 0.1,
            "resolution": 512,
            "length": 81,
            "lora_weight": 0.7,
            "sampler_steps": 30,
            "guidance": 6.5,
        }
        assert dict(TRAINER_DEFAULTS) == manifest.trainer


def test_throughput():
    with criterion("throughput: 81-frame 512x512 render <= 10 s on one core"):
        import hashlib

        rng = np.random.default_rng(0)
        frames = [
            Frame(rng.integers(0, 256, (512, 512, 3), dtype=np.uint8)) for _ in range(81)
        ]
        depths = [
            DepthFrame(rng.uniform(2.0, 6.0, (512, 512)).astype(np.float32))
            for _ in range(81)
        ]
        cam = make_camera(512, 512)
        poses = sample_poses(_yaw_sweep(30.0, frames=81), pivot_depth=4.0)
        total_points = sum(int(d.validity.sum()) for d in depths)

        def digest(results):
            h = hashlib.sha256()
            for r in results:
                h.update(r.image.pixels.tobytes())
                h.update(r.depth.values.tobytes())
            return h.hexdigest()

        def timed_render(workers: int) -> tuple[float, str]:
            import gc

            gc.collect()
            t0 = time.perf_counter()
            results = render_trajectory(
                frames, depths, cam, poses, splat_radius=1, workers=workers
            )
            elapsed = time.perf_counter() - t0
            assert len(results) == 81
            return elapsed, digest(results)

        # best of two per mode: wall-clock ratios on a shared box are noisy
        single, single_digest = min(timed_render(1), timed_render(1))
        print(f"  {total_points / 1e6:.1f}M points in {single:.2f} s single-core")
        assert single <= 10.0

        dual, dual_digest = min(timed_render(2), timed_render(2))
        speedup = single / dual
        print(f"  2-worker render {dual:.2f} s, speedup x{speedup:.2f}")
        # bitwise-identical output regardless of thread count
        assert dual_digest == single_digest
        assert speedup > 1.2
