"""Command-line entry point wiring bundles, trajectories, and pipelines.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import schedule, storage
from .camera import max_view_angle, sample_poses
from .dsl import parse_trajectory
from .errors import (
    IoError,
    MissingFile,
    StageOrderViolation,
    UnsupportedVersion,
    ValidationError,
    ValidationFailure,
    WarpforgeError,
)
from .geometry import render_trajectory
from .maskgen import MaskVideo, make_composite, sample_composite
from .packing import build_packed_sequence
from .reprojection import TrajectoryRef, double_reproject
from .schedule import emit_stage_dataset, ingest_generated, plan_stages

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_trajectory(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(f"trajectory file not found: {path}") from None
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_trajectory(text)


def _resolve_pivot(traj, bundle: storage.LoadedBundle) -> float:
    if traj.pivot is not None:
        return traj.pivot
    return schedule._median_pivot(bundle)


def _cmd_render(args) -> int:
    bundle = storage.load_bundle(args.bundle)
    traj = _load_trajectory(Path(args.traj))
    poses = sample_poses(traj, _resolve_pivot(traj, bundle))
    results = render_trajectory(
        bundle.frames, bundle.depths, bundle.camera, poses, splat_radius=args.splat
    )
    invisibility = MaskVideo(
        frames=np.stack([~r.visibility for r in results]), kind="pointcloud"
    )
    storage.write_bundle(
        args.out,
        [r.image for r in results],
        [r.depth for r in results],
        bundle.camera,
        masks=invisibility,
    )
    print(f"rendered {len(results)} frames -> {args.out}")
    return EXIT_OK


def _cmd_pair(args) -> int:
    bundle = storage.load_bundle(args.bundle)
    traj = _load_trajectory(Path(args.traj))
    poses = sample_poses(traj, _resolve_pivot(traj, bundle))
    pair = double_reproject(
        bundle.frames,
        bundle.depths,
        bundle.camera,
        poses,
        trajectory_ref=TrajectoryRef(name=traj.name, max_angle_deg=max_view_angle(traj)),
    )
    manifest = storage.store_training_pair(pair, args.out)
    print(f"training pair -> {manifest}")
    return EXIT_OK


def _cmd_masks(args) -> int:
    pair = storage.load_training_pair(args.pair)
    if args.mode == "sample":
        sample = sample_composite(pair, rng_seed=args.seed)
    else:
        sample = make_composite(pair, kind=args.mode, rng_seed=args.seed)
    manifest = storage.store_composite_sample(sample, args.out)
    print(f"composite sample ({sample.kind}) -> {manifest}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    plan = plan_stages(args.theta_min, args.delta, args.theta_target)
    schedule.save_plan(plan, args.out)
    angles = ", ".join(f"{s.max_angle_deg:g}" for s in plan.stages)
    print(f"{len(plan.stages)} stages ({angles} deg) -> {args.out}")
    return EXIT_OK


def _stage_dir(root: Path, index: int) -> Path:
    return root / f"stage_{index:02d}"


def _cmd_stage(args) -> int:
    plan = schedule.load_plan(args.plan)
    out_root = Path(args.out)
    prior_state = None
    if args.stage > 0:
        state_path = _stage_dir(out_root, args.stage - 1) / "state.json"
        if not state_path.exists():
            raise StageOrderViolation(
                f"stage {args.stage} needs {state_path}, which does not exist"
            )
        prior_state = schedule.load_stage_state(state_path)
    manifest = emit_stage_dataset(
        plan,
        args.stage,
        args.bundle,
        args.k_traj,
        args.seed,
        _stage_dir(out_root, args.stage),
        prior_state=prior_state,
    )
    print(
        f"stage {args.stage}: {len(manifest.bundles)} samples -> "
        f"{_stage_dir(out_root, args.stage)}"
    )
    return EXIT_OK


def _cmd_ingest(args) -> int:
    state = schedule.load_stage_state(args.state)
    videos_root = Path(args.videos)
    if (videos_root / "manifest.json").exists():
        videos = [videos_root]
    else:
        videos = sorted(
            p for p in videos_root.iterdir() if (p / "manifest.json").exists()
        ) if videos_root.is_dir() else []
    if not videos:
        raise ValidationError(f"no video bundles found under {videos_root}")
    new_state = ingest_generated(state, videos)
    schedule.save_stage_state(new_state, args.state)
    print(f"stage {new_state.stage}: ingested {len(videos)} videos, status GENERATED")
    return EXIT_OK


def _cmd_pack(args) -> int:
    generated = storage.load_bundle(args.generated)
    mask = storage.load_mask_video(args.mask)
    hole = storage.load_training_pair(args.hole)
    seq = build_packed_sequence(
        generated.frames, mask, hole, args.k, source_name=Path(args.generated).name
    )
    manifest = storage.store_packed_sequence(seq, args.out)
    print(
        f"packed {seq.manifest.k} context + {len(seq.hole_video)} hole frames -> {manifest}"
    )
    return EXIT_OK


def _cmd_validate(args) -> int:
    path = Path(args.path)
    manifest_path = path if path.is_file() else path / "manifest.json"
    manifest = storage.read_manifest(manifest_path)
    tag = manifest.get("format")
    if tag == storage.BUNDLE_FORMAT:
        bundle = storage.load_bundle(path)
        detail = f"{bundle.frame_count} frames"
    elif tag == storage.PAIR_FORMAT:
        pair = storage.load_training_pair(path)
        detail = f"{pair.frame_count} frames"
    elif tag == storage.SAMPLE_FORMAT:
        sample = storage.load_composite_sample(path)
        detail = f"kind {sample.kind}"
    elif tag == storage.PACK_FORMAT:
        seq = storage.load_packed_sequence(path)
        detail = f"{seq.total_frames} packed frames"
    elif tag == schedule.PLAN_FORMAT:
        plan = schedule.load_plan(manifest_path)
        detail = f"{len(plan.stages)} stages"
    elif tag == schedule.STAGE_FORMAT:
        if manifest.get("kind") == "state":
            state = schedule.load_stage_state(manifest_path)
            detail = f"stage {state.stage} {state.status}"
        else:
            stage_manifest = schedule.load_stage_manifest(manifest_path)
            detail = f"stage {stage_manifest.stage}, {len(stage_manifest.bundles)} bundles"
    else:
        raise UnsupportedVersion(f"{manifest_path}: unknown format tag {tag!r}")
    print(f"OK {tag} ({detail})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="warpforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a bundle along a trajectory")
    p.add_argument("--bundle", required=True, help="input bundle directory")
    p.add_argument("--traj", required=True, help="trajectory DSL file")
    p.add_argument("--splat", type=int, default=1, help="splat radius (0-2)")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("pair", help="double-reproject a bundle into a training pair")
    p.add_argument("--bundle", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pair)

    p = sub.add_parser("masks", help="attach a composite mask to a training pair")
    p.add_argument("--pair", required=True)
    p.add_argument("--mode", required=True, choices=["pointcloud", "edit", "union", "sample"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_masks)

    p = sub.add_parser("plan", help="write an angle-progressive stage plan")
    p.add_argument("--theta-min", type=float, required=True, dest="theta_min")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--theta-target", type=float, required=True, dest="theta_target")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("stage", help="emit one stage's training dataset")
    p.add_argument("--plan", required=True)
    p.add_argument("--stage", type=int, required=True)
    p.add_argument("--bundle", required=True, help="original input bundle")
    p.add_argument("--k-traj", type=int, required=True, dest="k_traj")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="pipeline root directory")
    p.set_defaults(func=_cmd_stage)

    p = sub.add_parser("ingest", help="record externally generated videos for a stage")
    p.add_argument("--state", required=True, help="stage state JSON file")
    p.add_argument("--videos", required=True, help="directory of generated bundles")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("pack", help="build a temporally packed sequence")
    p.add_argument("--generated", required=True, help="generated video bundle")
    p.add_argument("--mask", required=True, help="mask bundle or directory of PNGs")
    p.add_argument("--hole", required=True, help="training pair for the new trajectory")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("validate", help="validate any warpforge artifact")
    p.add_argument("--path", required=True)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IoError as exc:
        print(f"warpforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationFailure, ValueError) as exc:
        print(f"warpforge: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except WarpforgeError as exc:
        print(f"warpforge: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"warpforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
