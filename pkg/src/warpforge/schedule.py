"""Angle-progressive stage planning and the resumable tuning-loop state
machine.

Each stage j owns a maximum view angle; its dataset is built from template
trajectories gated to that angle, paired by double reprojection, and
supervised by composite masks.  Training and video generation happen in an
external process: this module only emits datasets plus trainer manifests,
records the externally produced adapter reference, and ingests the
generated videos that seed the next stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .camera import Keyframe, Trajectory, max_view_angle, sample_poses
from .dsl import format_trajectory
from .errors import (
    IngestMissing,
    InvalidSchedule,
    ManifestMismatch,
    StageOrderViolation,
    ValidationError,
)
from .maskgen import EditMaskConfig, sample_composite
from .reprojection import TrajectoryRef, double_reproject
from .storage import (
    LoadedBundle,
    load_bundle,
    read_manifest,
    store_composite_sample,
    write_manifest,
)

__all__ = [
    "TRAINER_DEFAULTS",
    "STAGE_TEMPLATES",
    "STATUS_ORDER",
    "Stage",
    "StagePlan",
    "StageState",
    "StageManifest",
    "plan_stages",
    "emit_stage_dataset",
    "ingest_generated",
    "save_plan",
    "load_plan",
    "save_stage_state",
    "load_stage_state",
    "save_stage_manifest",
    "load_stage_manifest",
]

STAGE_FORMAT = "fyc-stage/1"
PLAN_FORMAT = "fyc-plan/1"

TRAINER_DEFAULTS: Mapping[str, object] = MappingProxyType(
    {
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
)

STAGE_TEMPLATES = ("yaw_sweep", "pitch_sweep", "orbit")
STATUS_ORDER = ("PLANNED", "DATASET_EMITTED", "TRAINED", "GENERATED")

# keep emitted angles strictly inside the stage gate despite arccos roundoff
_GATE_MARGIN = 0.999


@dataclass(frozen=True)
class Stage:
    index: int
    max_angle_deg: float
    templates: tuple[str, ...] = STAGE_TEMPLATES


@dataclass(frozen=True)
class StagePlan:
    stages: tuple[Stage, ...]
    theta_min: float
    delta_theta: float
    trainer_defaults: dict = field(default_factory=lambda: dict(TRAINER_DEFAULTS))

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise InvalidSchedule("plan needs at least one stage")
        angles = [s.max_angle_deg for s in self.stages]
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise InvalidSchedule(f"stage angles must strictly increase, got {angles}")
        if angles[0] != self.theta_min:
            raise InvalidSchedule("first stage angle must equal theta_min")


def plan_stages(theta_min: float, delta_theta: float, theta_target: float) -> StagePlan:
    """Stages at theta_min, theta_min + delta, ... until theta_target is
    covered; the last stage angle is >= theta_target."""
    if theta_min <= 0:
        raise InvalidSchedule(f"theta_min must be positive, got {theta_min}")
    if delta_theta <= 0:
        raise InvalidSchedule(f"delta_theta must be positive, got {delta_theta}")
    if theta_target < theta_min:
        raise InvalidSchedule(
            f"theta_target {theta_target} smaller than theta_min {theta_min}"
        )
    angles = [float(theta_min)]
    while angles[-1] < theta_target:
        angles.append(angles[-1] + float(delta_theta))
    stages = tuple(Stage(index=i, max_angle_deg=a) for i, a in enumerate(angles))
    return StagePlan(stages=stages, theta_min=float(theta_min), delta_theta=float(delta_theta))


@dataclass(frozen=True)
class StageState:
    """Progress record for one stage; transitions are forward-only."""

    stage: int
    status: str = "PLANNED"
    dataset_dir: str | None = None
    trainer_manifest: str | None = None
    adapter_ref: str | None = None
    generated: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status not in STATUS_ORDER:
            raise ValueError(f"unknown status {self.status!r}")
        object.__setattr__(self, "generated", tuple(self.generated))

    def _require(self, expected: str, transition: str) -> None:
        if self.status != expected:
            raise StageOrderViolation(
                f"stage {self.stage}: {transition} requires status {expected}, "
                f"currently {self.status}"
            )

    def with_dataset(self, dataset_dir: str, trainer_manifest: str) -> "StageState":
        self._require("PLANNED", "dataset emission")
        return replace(
            self,
            status="DATASET_EMITTED",
            dataset_dir=dataset_dir,
            trainer_manifest=trainer_manifest,
        )

    def with_trained(self, adapter_ref: str) -> "StageState":
        self._require("DATASET_EMITTED", "recording training")
        return replace(self, status="TRAINED", adapter_ref=adapter_ref)

    def with_generated(self, paths: Sequence[str]) -> "StageState":
        self._require("TRAINED", "ingesting generated videos")
        return replace(self, status="GENERATED", generated=tuple(paths))


def save_stage_state(state: StageState, path: Path | str) -> Path:
    path = Path(path)
    write_manifest(
        {
            "format": STAGE_FORMAT,
            "kind": "state",
            "stage": state.stage,
            "status": state.status,
            "dataset_dir": state.dataset_dir,
            "trainer_manifest": state.trainer_manifest,
            "adapter_ref": state.adapter_ref,
            "generated": list(state.generated),
        },
        path,
    )
    return path


def load_stage_state(path: Path | str) -> StageState:
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("format") != STAGE_FORMAT or manifest.get("kind") != "state":
        raise ManifestMismatch(f"{path}: not a stage state file")
    try:
        return StageState(
            stage=int(manifest["stage"]),
            status=str(manifest["status"]),
            dataset_dir=manifest.get("dataset_dir"),
            trainer_manifest=manifest.get("trainer_manifest"),
            adapter_ref=manifest.get("adapter_ref"),
            generated=tuple(manifest.get("generated", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed stage state ({exc})") from exc


@dataclass(frozen=True)
class StageManifest:
    """What the external trainer needs: sample bundle paths plus
    hyperparameters."""

    stage: int
    bundles: tuple[str, ...]
    trainer: dict = field(default_factory=lambda: dict(TRAINER_DEFAULTS))
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


def save_stage_manifest(manifest: StageManifest, path: Path | str) -> Path:
    path = Path(path)
    write_manifest(
        {
            "format": STAGE_FORMAT,
            "kind": "trainer-manifest",
            "stage": manifest.stage,
            "bundles": list(manifest.bundles),
            "trainer": dict(manifest.trainer),
            "seeds": list(manifest.seeds),
        },
        path,
    )
    return path


def load_stage_manifest(path: Path | str) -> StageManifest:
    path = Path(path)
    raw = read_manifest(path)
    if raw.get("format") != STAGE_FORMAT or raw.get("kind") != "trainer-manifest":
        raise ManifestMismatch(f"{path}: not a trainer manifest")
    try:
        return StageManifest(
            stage=int(raw["stage"]),
            bundles=tuple(str(b) for b in raw["bundles"]),
            trainer=dict(raw["trainer"]),
            seeds=tuple(int(s) for s in raw["seeds"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed trainer manifest ({exc})") from exc


def save_plan(plan: StagePlan, path: Path | str) -> Path:
    path = Path(path)
    write_manifest(
        {
            "format": PLAN_FORMAT,
            "theta_min": plan.theta_min,
            "delta_theta": plan.delta_theta,
            "stages": [
                {
                    "index": s.index,
                    "max_angle_deg": s.max_angle_deg,
                    "templates": list(s.templates),
                }
                for s in plan.stages
            ],
            "trainer_defaults": dict(plan.trainer_defaults),
        },
        path,
    )
    return path


def load_plan(path: Path | str) -> StagePlan:
    path = Path(path)
    raw = read_manifest(path)
    if raw.get("format") != PLAN_FORMAT:
        raise ManifestMismatch(f"{path}: not a stage plan file")
    try:
        stages = tuple(
            Stage(
                index=int(s["index"]),
                max_angle_deg=float(s["max_angle_deg"]),
                templates=tuple(str(t) for t in s["templates"]),
            )
            for s in raw["stages"]
        )
        return StagePlan(
            stages=stages,
            theta_min=float(raw["theta_min"]),
            delta_theta=float(raw["delta_theta"]),
            trainer_defaults=dict(raw["trainer_defaults"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestMismatch(f"{path}: malformed plan ({exc})") from exc


def _orbit_amplitude(angle_deg: float) -> float:
    """Equal yaw/pitch amplitude whose composed rotation reaches angle_deg.

    For rotations about perpendicular axes the composed half-angle satisfies
    cos(theta/2) = cos(a/2) * cos(a/2).
    """
    half = math.radians(angle_deg) / 2.0
    return math.degrees(2.0 * math.acos(math.sqrt(math.cos(half))))


def template_trajectory(template: str, max_angle_deg: float, frame_count: int, name: str) -> Trajectory:
    """Build one gated template trajectory ending at its largest angle."""
    if template not in STAGE_TEMPLATES:
        raise InvalidSchedule(f"unknown trajectory template {template!r}")
    amplitude = _GATE_MARGIN * max_angle_deg
    keyframes = [Keyframe(index=0)]
    if frame_count > 1:
        last = frame_count - 1
        if template == "yaw_sweep":
            keyframes.append(Keyframe(index=last, yaw=amplitude))
        elif template == "pitch_sweep":
            keyframes.append(Keyframe(index=last, pitch=amplitude))
        else:
            a = _orbit_amplitude(amplitude)
            keyframes.append(Keyframe(index=last, yaw=a, pitch=a))
    return Trajectory(name=name, frame_count=frame_count, keyframes=tuple(keyframes))


def _resolve_seeds(seeds: int | Sequence[int], k: int) -> list[int]:
    if isinstance(seeds, (int, np.integer)):
        return [int(seeds) + i for i in range(k)]
    seeds = [int(s) for s in seeds]
    if len(seeds) < k:
        raise InvalidSchedule(f"need {k} seeds, got {len(seeds)}")
    return seeds[:k]


def _median_pivot(bundle: LoadedBundle) -> float:
    depth0 = bundle.depths[0]
    valid = depth0.values[depth0.validity]
    return float(np.median(valid)) if valid.size else 1.0


def emit_stage_dataset(
    plan: StagePlan,
    stage_index: int,
    source_bundle: Path | str,
    k_trajectories: int,
    seeds: int | Sequence[int],
    out_dir: Path | str,
    prior_state: StageState | None = None,
    splat_radius: int = 1,
    edit_cfg: EditMaskConfig = EditMaskConfig(),
    workers: int = 1,
) -> StageManifest:
    """Emit stage j's composite-sample dataset, trainer manifest, and state.

    Stage 0 reads the original input bundle; later stages draw their source
    videos from the previous stage's ingested generated bundles (cycling
    over them), each of which must carry depths.  Emitted trajectories cycle
    the stage templates and always satisfy max_view_angle <= the stage gate.
    Writes ``trainer_manifest.json`` and ``state.json`` (status
    DATASET_EMITTED) into ``out_dir`` and returns the manifest.
    """
    if not 0 <= stage_index < len(plan.stages):
        raise InvalidSchedule(
            f"stage {stage_index} outside plan with {len(plan.stages)} stages"
        )
    if k_trajectories < 1:
        raise InvalidSchedule("k_trajectories must be at least 1")
    stage = plan.stages[stage_index]
    out_dir = Path(out_dir)

    if stage_index == 0:
        sources = [Path(source_bundle)]
    else:
        if prior_state is None or prior_state.stage != stage_index - 1:
            raise StageOrderViolation(
                f"stage {stage_index} needs the state of stage {stage_index - 1}"
            )
        if prior_state.status != "GENERATED":
            raise StageOrderViolation(
                f"stage {stage_index} requires stage {stage_index - 1} to be GENERATED, "
                f"found {prior_state.status}"
            )
        if not prior_state.generated:
            raise IngestMissing(f"stage {stage_index - 1} recorded no generated videos")
        sources = [Path(p) for p in prior_state.generated]
        for p in sources:
            if not (p / "manifest.json").exists():
                raise IngestMissing(f"generated bundle missing: {p}")

    seed_list = _resolve_seeds(seeds, k_trajectories)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded: dict[Path, LoadedBundle] = {}
    bundle_paths: list[str] = []
    for i in range(k_trajectories):
        src = sources[i % len(sources)]
        if src not in loaded:
            loaded[src] = load_bundle(src)
        bundle = loaded[src]
        template = stage.templates[i % len(stage.templates)]
        traj = template_trajectory(
            template,
            stage.max_angle_deg,
            bundle.frame_count,
            name=f"stage{stage_index:02d}_traj{i:02d}_{template}",
        )
        poses = sample_poses(traj, _median_pivot(bundle))
        pair = double_reproject(
            bundle.frames,
            bundle.depths,
            bundle.camera,
            poses,
            splat_radius=splat_radius,
            trajectory_ref=TrajectoryRef(name=traj.name, max_angle_deg=max_view_angle(traj)),
            workers=workers,
        )
        sample = sample_composite(pair, edit_cfg, seed_list[i])
        sample_dir = out_dir / f"sample_{i:02d}"
        store_composite_sample(sample, sample_dir)
        # provenance: the exact trajectory source, replayable through the DSL
        (sample_dir / "trajectory.traj").write_text(format_trajectory(traj), encoding="utf-8")
        bundle_paths.append(sample_dir.name)

    manifest = StageManifest(
        stage=stage_index,
        bundles=tuple(bundle_paths),
        trainer=dict(plan.trainer_defaults),
        seeds=tuple(seed_list),
    )
    manifest_path = save_stage_manifest(manifest, out_dir / "trainer_manifest.json")
    state = StageState(stage=stage_index).with_dataset(
        dataset_dir=str(out_dir), trainer_manifest=str(manifest_path)
    )
    save_stage_state(state, out_dir / "state.json")
    return manifest


def ingest_generated(state: StageState, video_files: Sequence[Path | str]) -> StageState:
    """Validate externally generated bundles against the stage's trainer
    manifest (frame count and square resolution) and advance to GENERATED."""
    if state.status != "TRAINED":
        raise StageOrderViolation(
            f"stage {state.stage}: ingest requires status TRAINED, currently {state.status}"
        )
    if not video_files:
        raise ValidationError("no generated videos supplied")
    if state.trainer_manifest is None:
        raise IngestMissing(f"stage {state.stage} has no trainer manifest recorded")
    manifest = load_stage_manifest(state.trainer_manifest)
    expected_len = int(manifest.trainer["length"])
    expected_res = int(manifest.trainer["resolution"])

    paths = [Path(p) for p in video_files]
    for p in paths:
        bundle = load_bundle(p)
        if bundle.frame_count != expected_len:
            raise ValidationError(
                f"{p}: frame_count {bundle.frame_count} does not match plan length "
                f"{expected_len}"
            )
        w, h = bundle.frames[0].width, bundle.frames[0].height
        if (w, h) != (expected_res, expected_res):
            raise ValidationError(
                f"{p}: resolution {w}x{h} does not match plan {expected_res}x{expected_res}"
            )
    return state.with_generated([str(p) for p in paths])
