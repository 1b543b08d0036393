/** Array-level view of video bundles: decode a bundle directory into flat
 * typed arrays, or write arrays out as a bundle the CLI accepts. */

import * as fs from "node:fs";
import * as path from "node:path";

import { FormatError, ShapeError } from "./errors";
import {
  depthName,
  frameName,
  maskName,
  readDpt1,
  readManifest,
  readPngMask,
  readPngRgb,
  writeDpt1,
  writeManifest,
  writePngMask,
  writePngRgb,
} from "./formats";

export const BUNDLE_FORMAT = "fyc-bundle/1";

export interface CameraParams {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface VideoArrays {
  frameCount: number;
  width: number;
  height: number;
  camera: CameraParams;
  /** Row-major (frame, row, column, rgb), frameCount*height*width*3 bytes. */
  frames: Uint8Array;
  /** Row-major (frame, row, column); 0 marks invalid depth. */
  depths: Float32Array;
  /** Optional row-major 0/1 fill flags, frameCount*height*width entries. */
  masks?: Uint8Array;
}

export function validateVideoArrays(video: VideoArrays): void {
  const { frameCount, width, height, frames, depths, masks } = video;
  if (!Number.isInteger(frameCount) || frameCount < 1) {
    throw new ShapeError(`frameCount must be a positive integer, got ${frameCount}`);
  }
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new ShapeError(`dimensions must be positive integers, got ${width}x${height}`);
  }
  const pixels = frameCount * height * width;
  if (!(frames instanceof Uint8Array) || frames.length !== pixels * 3) {
    throw new ShapeError(
      `frames must be a Uint8Array of ${pixels * 3} bytes (N*H*W*3), got ` +
        `${frames instanceof Uint8Array ? frames.length : typeof frames}`,
    );
  }
  if (!(depths instanceof Float32Array) || depths.length !== pixels) {
    throw new ShapeError(
      `depths must be a Float32Array of ${pixels} entries (N*H*W), got ` +
        `${depths instanceof Float32Array ? depths.length : typeof depths}`,
    );
  }
  if (masks !== undefined && (!(masks instanceof Uint8Array) || masks.length !== pixels)) {
    throw new ShapeError(`masks must be a Uint8Array of ${pixels} entries (N*H*W)`);
  }
  const cam = video.camera;
  if (cam.width !== width || cam.height !== height) {
    throw new ShapeError(
      `camera dimensions ${cam.width}x${cam.height} disagree with video ${width}x${height}`,
    );
  }
}

/** Write arrays as a bundle directory; returns the manifest path. */
export function writeBundle(dir: string, video: VideoArrays): string {
  validateVideoArrays(video);
  const { frameCount, width, height, camera } = video;
  const frameDir = path.join(dir, "frames");
  const depthDir = path.join(dir, "depths");
  fs.mkdirSync(frameDir, { recursive: true });
  fs.mkdirSync(depthDir, { recursive: true });

  const frameStride = width * height * 3;
  const depthStride = width * height;
  for (let i = 0; i < frameCount; i++) {
    writePngRgb(path.join(frameDir, frameName(i)), {
      pixels: video.frames.subarray(i * frameStride, (i + 1) * frameStride),
      width,
      height,
    });
    writeDpt1(path.join(depthDir, depthName(i)), {
      values: video.depths.subarray(i * depthStride, (i + 1) * depthStride),
      width,
      height,
    });
  }

  const manifest: Record<string, unknown> = {
    format: BUNDLE_FORMAT,
    width,
    height,
    frame_count: frameCount,
    camera: {
      fx: camera.fx,
      fy: camera.fy,
      cx: camera.cx,
      cy: camera.cy,
      width: camera.width,
      height: camera.height,
    },
    depth_encoding: "dpt1",
    has_masks: video.masks !== undefined,
  };
  if (video.masks !== undefined) {
    manifest.mask_semantics = "inpaint";
    const maskDir = path.join(dir, "masks");
    fs.mkdirSync(maskDir, { recursive: true });
    for (let i = 0; i < frameCount; i++) {
      writePngMask(path.join(maskDir, maskName(i)), {
        flags: video.masks.subarray(i * depthStride, (i + 1) * depthStride),
        width,
        height,
      });
    }
  }
  const manifestPath = path.join(dir, "manifest.json");
  writeManifest(manifestPath, manifest);
  return manifestPath;
}

function requireNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new FormatError(`${what} must be a number, got ${JSON.stringify(value)}`);
  }
  return value;
}

/** Decode a bundle directory into flat typed arrays. */
export function loadBundle(dir: string): VideoArrays {
  const manifest = readManifest(path.join(dir, "manifest.json"));
  if (manifest.format !== BUNDLE_FORMAT) {
    throw new FormatError(
      `${dir}: expected format ${BUNDLE_FORMAT}, got ${JSON.stringify(manifest.format)}`,
    );
  }
  if (manifest.depth_encoding !== "dpt1") {
    throw new FormatError(
      `${dir}: this binding reads dpt1 depth bundles only, got ` +
        `${JSON.stringify(manifest.depth_encoding)} (use the CLI for png16)`,
    );
  }
  const width = requireNumber(manifest.width, "width");
  const height = requireNumber(manifest.height, "height");
  const frameCount = requireNumber(manifest.frame_count, "frame_count");
  const cam = manifest.camera as Record<string, unknown> | undefined;
  if (!cam) throw new FormatError(`${dir}: manifest lacks a camera block`);
  const camera: CameraParams = {
    fx: requireNumber(cam.fx, "camera.fx"),
    fy: requireNumber(cam.fy, "camera.fy"),
    cx: requireNumber(cam.cx, "camera.cx"),
    cy: requireNumber(cam.cy, "camera.cy"),
    width: requireNumber(cam.width, "camera.width"),
    height: requireNumber(cam.height, "camera.height"),
  };

  const frameStride = width * height * 3;
  const depthStride = width * height;
  const frames = new Uint8Array(frameCount * frameStride);
  const depths = new Float32Array(frameCount * depthStride);
  for (let i = 0; i < frameCount; i++) {
    const img = readPngRgb(path.join(dir, "frames", frameName(i)));
    if (img.width !== width || img.height !== height) {
      throw new FormatError(`${dir}: frame ${i} is ${img.width}x${img.height}`);
    }
    frames.set(img.pixels, i * frameStride);
    const depth = readDpt1(path.join(dir, "depths", depthName(i)));
    if (depth.width !== width || depth.height !== height) {
      throw new FormatError(`${dir}: depth ${i} is ${depth.width}x${depth.height}`);
    }
    depths.set(depth.values, i * depthStride);
  }

  let masks: Uint8Array | undefined;
  if (manifest.has_masks === true) {
    masks = new Uint8Array(frameCount * depthStride);
    for (let i = 0; i < frameCount; i++) {
      const mask = readPngMask(path.join(dir, "masks", maskName(i)));
      if (mask.width !== width || mask.height !== height) {
        throw new FormatError(`${dir}: mask ${i} is ${mask.width}x${mask.height}`);
      }
      masks.set(mask.flags, i * depthStride);
    }
  }
  return { frameCount, width, height, camera, frames, depths, masks };
}
