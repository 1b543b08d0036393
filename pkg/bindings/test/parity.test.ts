/** Binding-vs-CLI parity: doubleReproject must be byte-identical to running
 * `warpforge pair` on the same bundle, per the release criterion. */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import {
  CliValidationError,
  ShapeError,
  doubleReproject,
  loadTrainingPair,
  runWarpforge,
  writeBundle,
} from "../src";
import { IDENTITY_TRAJ, SWEEP_TRAJ, makeScene } from "./helpers";

let tmp: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "wf-parity-"));
});

afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

const bytesEqual = (a: Uint8Array, b: Uint8Array) =>
  Buffer.from(a).equals(Buffer.from(b));

describe("doubleReproject parity", () => {
  it("matches a direct CLI pair run byte-for-byte on a seeded bundle", async () => {
    const video = makeScene(42, 3, 16);

    // binding route: arrays in, arrays out
    const viaBinding = await doubleReproject(video, SWEEP_TRAJ);

    // direct CLI route on an independently staged copy of the same inputs
    const bundleDir = path.join(tmp, "bundle");
    writeBundle(bundleDir, video);
    const trajFile = path.join(tmp, "sweep.traj");
    fs.writeFileSync(trajFile, SWEEP_TRAJ);
    const outDir = path.join(tmp, "pair");
    await runWarpforge(["pair", "--bundle", bundleDir, "--traj", trajFile, "--out", outDir]);
    const viaCli = loadTrainingPair(outDir);

    expect(viaBinding.frameCount).toBe(viaCli.frameCount);
    expect(bytesEqual(viaBinding.corrupted, viaCli.corrupted)).toBe(true);
    expect(bytesEqual(viaBinding.masks, viaCli.masks)).toBe(true);
    expect(bytesEqual(viaBinding.clean, viaCli.clean)).toBe(true);
    expect(viaBinding.trajectory).toEqual(viaCli.trajectory);
  }, 30_000);

  it("produces all-zero masks for an identity trajectory", async () => {
    const video = makeScene(7, 3, 12);
    const pair = await doubleReproject(video, IDENTITY_TRAJ);
    expect(pair.masks.every((v) => v === 0)).toBe(true);
    // identity round trip also reproduces the clean video where depth is valid
    expect(pair.trajectory.maxAngleDeg).toBe(0);
  }, 30_000);

  it("returns the clean video bit-exact to the input frames", async () => {
    const video = makeScene(9, 2, 12);
    const pair = await doubleReproject(video, 'trajectory "t" { frames 2 keyframe 0 {} keyframe 1 { yaw 10 deg } }');
    expect(bytesEqual(pair.clean, video.frames)).toBe(true);
  }, 30_000);

  it("rejects wrongly shaped arrays with a typed exception", async () => {
    const video = makeScene(3, 2, 8);
    await expect(
      doubleReproject({ ...video, depths: new Float32Array(7) }, SWEEP_TRAJ),
    ).rejects.toThrow(ShapeError);
    await expect(
      doubleReproject({ ...video, frames: new Uint8Array(10) }, SWEEP_TRAJ),
    ).rejects.toThrow(ShapeError);
    await expect(doubleReproject(video, "")).rejects.toThrow(TypeError);
  });

  it("surfaces CLI validation failures as typed errors", async () => {
    const video = makeScene(3, 2, 8);
    await expect(
      doubleReproject(video, 'trajectory "t" { frames 2 zoom 3 }'),
    ).rejects.toThrow(CliValidationError);
  }, 30_000);
});
