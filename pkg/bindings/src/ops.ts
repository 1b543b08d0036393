/** Batch entry points delegating to the warpforge CLI.
 *
 * Each call shells out to one subcommand and decodes its file outputs back
 * into typed arrays, so results are byte-identical to what a direct CLI
 * invocation produces on the same inputs.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { loadBundle, validateVideoArrays, writeBundle, type VideoArrays } from "./bundle";
import { runWarpforge } from "./cli";
import { FormatError } from "./errors";
import {
  frameName,
  maskName,
  readManifest,
  readPngMask,
  readPngRgb,
} from "./formats";

export const PAIR_FORMAT = "fyc-pair/1";
export const SAMPLE_FORMAT = "fyc-sample/1";
export const PACK_FORMAT = "fyc-pack/1";

export interface TrainingPairArrays {
  frameCount: number;
  width: number;
  height: number;
  /** Corrupted frames V'', row-major N*H*W*3. */
  corrupted: Uint8Array;
  /** Inpaint mask M'', 0/1 flags, N*H*W. */
  masks: Uint8Array;
  /** Clean source frames V^s, N*H*W*3. */
  clean: Uint8Array;
  trajectory: { name: string; maxAngleDeg: number };
}

function readFrameStack(
  dir: string,
  count: number,
  width: number,
  height: number,
): Uint8Array {
  const stride = width * height * 3;
  const out = new Uint8Array(count * stride);
  for (let i = 0; i < count; i++) {
    const img = readPngRgb(path.join(dir, frameName(i)));
    if (img.width !== width || img.height !== height) {
      throw new FormatError(`${dir}: frame ${i} is ${img.width}x${img.height}`);
    }
    out.set(img.pixels, i * stride);
  }
  return out;
}

function readMaskStack(
  dir: string,
  count: number,
  width: number,
  height: number,
): Uint8Array {
  const stride = width * height;
  const out = new Uint8Array(count * stride);
  for (let i = 0; i < count; i++) {
    const mask = readPngMask(path.join(dir, maskName(i)));
    if (mask.width !== width || mask.height !== height) {
      throw new FormatError(`${dir}: mask ${i} is ${mask.width}x${mask.height}`);
    }
    out.set(mask.flags, i * stride);
  }
  return out;
}

/** Decode a training pair directory into arrays. */
export function loadTrainingPair(dir: string): TrainingPairArrays {
  const manifest = readManifest(path.join(dir, "manifest.json"));
  if (manifest.format !== PAIR_FORMAT) {
    throw new FormatError(
      `${dir}: expected format ${PAIR_FORMAT}, got ${JSON.stringify(manifest.format)}`,
    );
  }
  const frameCount = manifest.frame_count as number;
  const width = manifest.width as number;
  const height = manifest.height as number;
  const traj = manifest.trajectory as { name: string; max_angle_deg: number };
  return {
    frameCount,
    width,
    height,
    corrupted: readFrameStack(path.join(dir, "corrupted"), frameCount, width, height),
    masks: readMaskStack(path.join(dir, "masks"), frameCount, width, height),
    clean: readFrameStack(path.join(dir, "clean"), frameCount, width, height),
    trajectory: { name: traj.name, maxAngleDeg: traj.max_angle_deg },
  };
}

async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "warpforge-"));
  try {
    return await fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/** Double-reproject a video (as arrays) through a trajectory, returning the
 * corrupted frames, inpaint masks, and clean frames.
 *
 * The video is staged as a temporary bundle and run through
 * ``warpforge pair``, so the result is byte-identical to the CLI's output
 * for the same bundle and trajectory source.
 */
export async function doubleReproject(
  video: VideoArrays,
  trajectorySource: string,
): Promise<TrainingPairArrays> {
  validateVideoArrays(video);
  if (typeof trajectorySource !== "string" || trajectorySource.trim() === "") {
    throw new TypeError("trajectorySource must be non-empty DSL text");
  }
  return withTempDir(async (tmp) => {
    const bundleDir = path.join(tmp, "bundle");
    writeBundle(bundleDir, video);
    const trajFile = path.join(tmp, "trajectory.traj");
    fs.writeFileSync(trajFile, trajectorySource);
    const outDir = path.join(tmp, "pair");
    await runWarpforge(["pair", "--bundle", bundleDir, "--traj", trajFile, "--out", outDir]);
    return loadTrainingPair(outDir);
  });
}

export type CompositeMode = "pointcloud" | "edit" | "union" | "sample";

export interface CompositeSampleArrays {
  kind: string;
  seed: number;
  frameCount: number;
  width: number;
  height: number;
  /** The supervising mask, 0/1 flags, N*H*W. */
  mask: Uint8Array;
  /** Directory holding the stored sample artifact. */
  path: string;
}

/** Attach a composite mask to a stored training pair (batch, path-based).
 * ``mode: "sample"`` draws one of the three kinds uniformly from the seed. */
export async function sampleComposite(
  pairDir: string,
  options: { mode?: CompositeMode; seed: number; outDir: string },
): Promise<CompositeSampleArrays> {
  const mode = options.mode ?? "sample";
  await runWarpforge([
    "masks",
    "--pair", pairDir,
    "--mode", mode,
    "--seed", String(options.seed),
    "--out", options.outDir,
  ]);
  const manifest = readManifest(path.join(options.outDir, "manifest.json"));
  if (manifest.format !== SAMPLE_FORMAT) {
    throw new FormatError(`${options.outDir}: unexpected format ${manifest.format}`);
  }
  const pairManifest = readManifest(
    path.join(options.outDir, String(manifest.pair_dir), "manifest.json"),
  );
  const frameCount = pairManifest.frame_count as number;
  const width = pairManifest.width as number;
  const height = pairManifest.height as number;
  return {
    kind: manifest.kind as string,
    seed: manifest.seed as number,
    frameCount,
    width,
    height,
    mask: readMaskStack(path.join(options.outDir, "sample_mask"), frameCount, width, height),
    path: options.outDir,
  };
}

export interface StageManifestJson {
  stage: number;
  bundles: string[];
  trainer: Record<string, number>;
  seeds: number[];
  /** Stage state file recorded next to the manifest. */
  stateFile: string;
  /** Directory holding the emitted samples. */
  stageDir: string;
}

/** Emit one stage's dataset via ``warpforge stage`` and return its trainer
 * manifest. */
export async function emitStageDataset(options: {
  planFile: string;
  stage: number;
  bundleDir: string;
  kTrajectories: number;
  seed: number;
  outRoot: string;
}): Promise<StageManifestJson> {
  await runWarpforge([
    "stage",
    "--plan", options.planFile,
    "--stage", String(options.stage),
    "--bundle", options.bundleDir,
    "--k-traj", String(options.kTrajectories),
    "--seed", String(options.seed),
    "--out", options.outRoot,
  ]);
  const stageDir = path.join(
    options.outRoot,
    `stage_${String(options.stage).padStart(2, "0")}`,
  );
  const manifest = readManifest(path.join(stageDir, "trainer_manifest.json"));
  return {
    stage: manifest.stage as number,
    bundles: manifest.bundles as string[],
    trainer: manifest.trainer as Record<string, number>,
    seeds: manifest.seeds as number[],
    stateFile: path.join(stageDir, "state.json"),
    stageDir,
  };
}

export interface PackedSequenceArrays {
  k: number;
  selected: number[];
  source: string;
  width: number;
  height: number;
  /** Selected context frames, k*H*W*3. */
  context: Uint8Array;
  /** Hole video frames, N*H*W*3. */
  hole: Uint8Array;
  /** Hole masks, 0/1 flags, N*H*W. */
  holeMask: Uint8Array;
  totalFrames: number;
  path: string;
}

/** Build a temporally packed sequence via ``warpforge pack`` and decode it. */
export async function buildPackedSequence(options: {
  generatedDir: string;
  maskDir: string;
  holeDir: string;
  k: number;
  outDir: string;
}): Promise<PackedSequenceArrays> {
  await runWarpforge([
    "pack",
    "--generated", options.generatedDir,
    "--mask", options.maskDir,
    "--hole", options.holeDir,
    "--k", String(options.k),
    "--out", options.outDir,
  ]);
  const manifest = readManifest(path.join(options.outDir, "manifest.json"));
  if (manifest.format !== PACK_FORMAT) {
    throw new FormatError(`${options.outDir}: unexpected format ${manifest.format}`);
  }
  const contextPaths = manifest.context_frames as string[];
  const holePaths = manifest.hole_frames as string[];
  const maskPaths = manifest.hole_masks as string[];

  const first = readPngRgb(path.join(options.outDir, contextPaths[0] ?? holePaths[0]));
  const { width, height } = first;
  const frameStride = width * height * 3;

  const readStack = (paths: string[]) => {
    const out = new Uint8Array(paths.length * frameStride);
    paths.forEach((rel, i) => {
      const img = readPngRgb(path.join(options.outDir, rel));
      if (img.width !== width || img.height !== height) {
        throw new FormatError(`${rel}: inconsistent packed frame size`);
      }
      out.set(img.pixels, i * frameStride);
    });
    return out;
  };
  const holeMask = new Uint8Array(maskPaths.length * width * height);
  maskPaths.forEach((rel, i) => {
    const mask = readPngMask(path.join(options.outDir, rel));
    holeMask.set(mask.flags, i * width * height);
  });

  return {
    k: manifest.k as number,
    selected: manifest.selected as number[],
    source: manifest.source as string,
    width,
    height,
    context: readStack(contextPaths),
    hole: readStack(holePaths),
    holeMask,
    totalFrames: contextPaths.length + holePaths.length,
    path: options.outDir,
  };
}
