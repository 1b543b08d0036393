"""warpforge: camera-retargeting data pipelines for video inpainting.

Turns a monocular video plus per-frame depth into the artifacts a
camera-retargeted inpainting pipeline trains and infers on: rendered novel
views with visibility masks, double-reprojected training pairs, composite
mask datasets, angle-progressive stage manifests, and temporally packed
inference sequences.
"""

from .camera import (
    CameraModel,
    Keyframe,
    Pose,
    Trajectory,
    invert_pose,
    max_view_angle,
    rotation_angle_deg,
    sample_poses,
)
from .dsl import format_trajectory, parse_trajectory
from .errors import (
    BadMagic,
    DimensionMismatch,
    IngestMissing,
    InvalidK,
    InvalidSchedule,
    IoError,
    LengthMismatch,
    ManifestMismatch,
    MissingFile,
    StageOrderViolation,
    TrajectorySemanticError,
    TrajectorySyntaxError,
    UnsupportedVersion,
    ValidationError,
    ValidationFailure,
    WarpforgeError,
)
from .geometry import (
    DepthFrame,
    Frame,
    PointCloud,
    RenderResult,
    brute_force_render,
    project_render,
    render_scene,
    render_trajectory,
    unproject,
)
from .maskgen import (
    CompositeSample,
    EditMaskConfig,
    MaskVideo,
    make_composite,
    make_edit_mask,
    sample_composite,
    union_mask,
)
from .packing import (
    PackedSequence,
    PackManifest,
    build_packed_sequence,
    frame_inpaint_area,
    overlap_mask,
    select_top_k,
)
from .reprojection import TrainingPair, TrajectoryRef, double_reproject
from .schedule import (
    TRAINER_DEFAULTS,
    StageManifest,
    StagePlan,
    StageState,
    emit_stage_dataset,
    ingest_generated,
    plan_stages,
)
from .storage import (
    LoadedBundle,
    load_bundle,
    load_composite_sample,
    load_mask_video,
    load_packed_sequence,
    load_training_pair,
    store_composite_sample,
    store_packed_sequence,
    store_training_pair,
    write_bundle,
    write_mask_video,
)

__version__ = "0.1.0"
