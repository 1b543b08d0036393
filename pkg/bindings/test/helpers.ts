/** Deterministic scene construction for the binding tests. */

import type { CameraParams, VideoArrays } from "../src";

/** mulberry32: tiny seeded PRNG, plenty for test fixtures. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makeCamera(width: number, height: number): CameraParams {
  return { fx: width, fy: width, cx: width / 2, cy: height / 2, width, height };
}

export function makeScene(seed: number, frameCount: number, size: number): VideoArrays {
  const rand = mulberry32(seed);
  const pixels = frameCount * size * size;
  const frames = new Uint8Array(pixels * 3);
  for (let i = 0; i < frames.length; i++) frames[i] = Math.floor(rand() * 256);
  const depths = new Float32Array(pixels);
  for (let i = 0; i < depths.length; i++) {
    // leave some pixels invalid so validity handling is exercised
    depths[i] = rand() < 0.1 ? 0 : 2 + rand() * 4;
  }
  return {
    frameCount,
    width: size,
    height: size,
    camera: makeCamera(size, size),
    frames,
    depths,
  };
}

export const SWEEP_TRAJ =
  'trajectory "sweep" { frames 3 keyframe 0 {} keyframe 2 { yaw 20 deg truck 0.2 } }';

export const IDENTITY_TRAJ = 'trajectory "still" { frames 3 keyframe 0 {} }';
