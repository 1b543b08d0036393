import json

import numpy as np
import pytest

from warpforge import load_bundle, load_training_pair, write_bundle
from warpforge.cli import main
from warpforge.storage import load_composite_sample, load_packed_sequence

from conftest import make_camera, random_scene_with_holes

TRAJ = 'trajectory "sweep" { frames 3 keyframe 0 {} keyframe 2 { yaw 20 deg } }'
IDENTITY_TRAJ = 'trajectory "still" { frames 3 keyframe 0 {} }'


@pytest.fixture
def bundle(tmp_path):
    cam = make_camera(16, 16)
    frames, depths = zip(*(random_scene_with_holes(s, 16, 16) for s in range(3)))
    path = tmp_path / "bundle"
    write_bundle(path, frames, depths, cam)
    return path


@pytest.fixture
def traj_file(tmp_path):
    path = tmp_path / "sweep.traj"
    path.write_text(TRAJ)
    return path


def test_render_command(tmp_path, bundle, traj_file, capsys):
    out = tmp_path / "rendered"
    code = main(
        ["render", "--bundle", str(bundle), "--traj", str(traj_file), "--splat", "1", "--out", str(out)]
    )
    assert code == 0
    rendered = load_bundle(out)
    assert rendered.frame_count == 3
    assert rendered.masks is not None  # invisibility masks ride along


def test_pair_command_roundtrip(tmp_path, bundle, traj_file):
    out = tmp_path / "pair"
    assert main(["pair", "--bundle", str(bundle), "--traj", str(traj_file), "--out", str(out)]) == 0
    pair = load_training_pair(out)
    assert pair.frame_count == 3
    assert pair.trajectory_ref.name == "sweep"
    assert pair.trajectory_ref.max_angle_deg <= 20.0 + 1e-6

    source = load_bundle(bundle)
    for clean, original in zip(pair.clean, source.frames):
        assert np.array_equal(clean.pixels, original.pixels)


def test_masks_command_modes(tmp_path, bundle, traj_file):
    pair_dir = tmp_path / "pair"
    main(["pair", "--bundle", str(bundle), "--traj", str(traj_file), "--out", str(pair_dir)])
    for mode in ("pointcloud", "edit", "union", "sample"):
        out = tmp_path / f"mask_{mode}"
        code = main(
            ["masks", "--pair", str(pair_dir), "--mode", mode, "--seed", "7", "--out", str(out)]
        )
        assert code == 0
        sample = load_composite_sample(out)
        assert sample.seed == 7
        if mode != "sample":
            assert sample.kind == mode


def test_plan_and_stage_commands(tmp_path, bundle):
    plan_file = tmp_path / "plan.json"
    assert main(
        ["plan", "--theta-min", "25", "--delta", "10", "--theta-target", "45", "--out", str(plan_file)]
    ) == 0
    plan = json.loads(plan_file.read_text())
    assert [s["max_angle_deg"] for s in plan["stages"]] == [25.0, 35.0, 45.0]

    out = tmp_path / "run"
    code = main(
        [
            "stage", "--plan", str(plan_file), "--stage", "0", "--bundle", str(bundle),
            "--k-traj", "2", "--seed", "3", "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "stage_00" / "state.json").exists()
    manifest = json.loads((out / "stage_00" / "trainer_manifest.json").read_text())
    assert manifest["trainer"]["rank"] == 128

    # stage 1 without ingest: order violation -> validation exit code
    code = main(
        [
            "stage", "--plan", str(plan_file), "--stage", "1", "--bundle", str(bundle),
            "--k-traj", "2", "--seed", "3", "--out", str(out),
        ]
    )
    assert code == 2


def test_ingest_command(tmp_path, bundle):
    plan_file = tmp_path / "plan.json"
    main(["plan", "--theta-min", "25", "--delta", "10", "--theta-target", "45", "--out", str(plan_file)])
    # shrink the expected dims to this test's bundle
    plan = json.loads(plan_file.read_text())
    plan["trainer_defaults"]["resolution"] = 16
    plan["trainer_defaults"]["length"] = 3
    plan_file.write_text(json.dumps(plan, sort_keys=True))

    out = tmp_path / "run"
    main(
        [
            "stage", "--plan", str(plan_file), "--stage", "0", "--bundle", str(bundle),
            "--k-traj", "1", "--seed", "0", "--out", str(out),
        ]
    )
    state_file = out / "stage_00" / "state.json"

    # ingest before TRAINED fails
    assert main(["ingest", "--state", str(state_file), "--videos", str(bundle)]) == 2

    # the external trainer marks the stage TRAINED
    state = json.loads(state_file.read_text())
    state["status"] = "TRAINED"
    state["adapter_ref"] = "lora-0001"
    state_file.write_text(json.dumps(state, sort_keys=True))

    assert main(["ingest", "--state", str(state_file), "--videos", str(bundle)]) == 0
    state = json.loads(state_file.read_text())
    assert state["status"] == "GENERATED"
    assert state["generated"] == [str(bundle)]

    # now stage 1 can emit
    code = main(
        [
            "stage", "--plan", str(plan_file), "--stage", "1", "--bundle", str(bundle),
            "--k-traj", "1", "--seed", "1", "--out", str(out),
        ]
    )
    assert code == 0


def test_pack_command(tmp_path, bundle, traj_file):
    rendered = tmp_path / "rendered"
    main(["render", "--bundle", str(bundle), "--traj", str(traj_file), "--splat", "0", "--out", str(rendered)])
    hole = tmp_path / "hole"
    main(["pair", "--bundle", str(bundle), "--traj", str(traj_file), "--out", str(hole)])
    out = tmp_path / "packed"
    code = main(
        ["pack", "--generated", str(rendered), "--mask", str(rendered), "--hole", str(hole), "--k", "2", "--out", str(out)]
    )
    assert code == 0
    seq = load_packed_sequence(out)
    assert seq.total_frames == 2 + 3
    assert seq.manifest.source == "rendered"


def test_validate_command(tmp_path, bundle, traj_file, capsys):
    assert main(["validate", "--path", str(bundle)]) == 0
    assert "fyc-bundle/1" in capsys.readouterr().out

    pair_dir = tmp_path / "pair"
    main(["pair", "--bundle", str(bundle), "--traj", str(traj_file), "--out", str(pair_dir)])
    assert main(["validate", "--path", str(pair_dir)]) == 0

    # corrupt the pair: drop a frame
    (pair_dir / "clean" / "f_00002.png").unlink()
    assert main(["validate", "--path", str(pair_dir)]) == 2


def test_exit_codes(tmp_path, bundle, capsys):
    # missing bundle -> validation error
    assert main(["render", "--bundle", str(tmp_path / "nope"), "--traj", "x", "--out", str(tmp_path / "o")]) == 2
    # bad trajectory syntax -> validation error
    traj = tmp_path / "bad.traj"
    traj.write_text('trajectory "t" { frames 2 zoom 3 }')
    assert main(["render", "--bundle", str(bundle), "--traj", str(traj), "--out", str(tmp_path / "o")]) == 2
    # usage error -> 4
    with pytest.raises(SystemExit) as exc:
        main(["render", "--bundle"])
    assert exc.value.code == 4
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 4


def test_io_error_exit_code(tmp_path, bundle, traj_file):
    # a path under a regular file cannot become a directory, even for root
    blocker = tmp_path / "blocker"
    blocker.write_text("file")
    code = main(
        ["pair", "--bundle", str(bundle), "--traj", str(traj_file), "--out", str(blocker / "pair")]
    )
    assert code == 3
