/** Codecs for the on-disk formats the CLI produces and consumes: 8-bit PNG
 * frames and masks, raw DPT1 depth files, and sorted-key JSON manifests. */

import * as fs from "node:fs";
import * as os from "node:os";

import { PNG } from "pngjs";

import { FormatError } from "./errors";

const DPT1_MAGIC = "DPT1";

export interface ImageSize {
  width: number;
  height: number;
}

export interface RgbImage extends ImageSize {
  /** Row-major RGB, 3 bytes per pixel. */
  pixels: Uint8Array;
}

export interface DepthImage extends ImageSize {
  /** Row-major depths; 0 marks an invalid pixel. */
  values: Float32Array;
}

export interface MaskImage extends ImageSize {
  /** Row-major 0/1 flags; 1 marks a pixel to fill. */
  flags: Uint8Array;
}

export function readPngRgb(path: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const n = png.width * png.height;
  const pixels = new Uint8Array(n * 3);
  for (let i = 0; i < n; i++) {
    pixels[i * 3] = png.data[i * 4];
    pixels[i * 3 + 1] = png.data[i * 4 + 1];
    pixels[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { pixels, width: png.width, height: png.height };
}

export function writePngRgb(path: string, image: RgbImage): void {
  const { width, height, pixels } = image;
  if (pixels.length !== width * height * 3) {
    throw new FormatError(
      `rgb buffer has ${pixels.length} bytes, expected ${width * height * 3}`,
    );
  }
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = pixels[i * 3];
    png.data[i * 4 + 1] = pixels[i * 3 + 1];
    png.data[i * 4 + 2] = pixels[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png, { colorType: 2 }));
}

export function readPngMask(path: string): MaskImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const n = png.width * png.height;
  const flags = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    flags[i] = png.data[i * 4] > 127 ? 1 : 0;
  }
  return { flags, width: png.width, height: png.height };
}

export function writePngMask(path: string, mask: MaskImage): void {
  const { width, height, flags } = mask;
  if (flags.length !== width * height) {
    throw new FormatError(
      `mask buffer has ${flags.length} entries, expected ${width * height}`,
    );
  }
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    const v = flags[i] ? 255 : 0;
    png.data[i * 4] = v;
    png.data[i * 4 + 1] = v;
    png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png, { colorType: 0 }));
}

function float32FromLeBytes(bytes: Uint8Array): Float32Array {
  // copy realigns the data; typed-array views need host endianness
  const aligned = new Uint8Array(bytes);
  if (os.endianness() === "LE") {
    return new Float32Array(aligned.buffer, 0, aligned.length / 4);
  }
  const view = new DataView(aligned.buffer);
  const out = new Float32Array(aligned.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}

function float32ToLeBytes(values: Float32Array): Uint8Array {
  if (os.endianness() === "LE") {
    return new Uint8Array(values.buffer.slice(values.byteOffset, values.byteOffset + values.byteLength));
  }
  const out = new Uint8Array(values.length * 4);
  const view = new DataView(out.buffer);
  for (let i = 0; i < values.length; i++) view.setFloat32(i * 4, values[i], true);
  return out;
}

export function readDpt1(path: string): DepthImage {
  const raw = fs.readFileSync(path);
  if (raw.length < 12 || raw.toString("latin1", 0, 4) !== DPT1_MAGIC) {
    throw new FormatError(`${path}: not a DPT1 depth file`);
  }
  const width = raw.readUInt32LE(4);
  const height = raw.readUInt32LE(8);
  const expected = 12 + 4 * width * height;
  if (raw.length !== expected) {
    throw new FormatError(`${path}: payload is ${raw.length} bytes, expected ${expected}`);
  }
  return { values: float32FromLeBytes(raw.subarray(12)), width, height };
}

export function writeDpt1(path: string, depth: DepthImage): void {
  const { width, height, values } = depth;
  if (values.length !== width * height) {
    throw new FormatError(
      `depth buffer has ${values.length} entries, expected ${width * height}`,
    );
  }
  const header = Buffer.alloc(12);
  header.write(DPT1_MAGIC, 0, "latin1");
  header.writeUInt32LE(width, 4);
  header.writeUInt32LE(height, 8);
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(float32ToLeBytes(values))]));
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeysDeep);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function readManifest(path: string): Record<string, unknown> {
  let text: string;
  try {
    text = fs.readFileSync(path, "utf-8");
  } catch (err) {
    throw new FormatError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (err) {
    throw new FormatError(`manifest ${path} is not valid JSON: ${(err as Error).message}`);
  }
  if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
    throw new FormatError(`manifest ${path} must be a JSON object`);
  }
  return parsed as Record<string, unknown>;
}

export function writeManifest(path: string, manifest: Record<string, unknown>): void {
  fs.writeFileSync(path, JSON.stringify(sortKeysDeep(manifest), null, 2) + "\n");
}

export function frameName(i: number): string {
  return `f_${String(i).padStart(5, "0")}.png`;
}

export function depthName(i: number): string {
  return `d_${String(i).padStart(5, "0")}.dpt`;
}

export function maskName(i: number): string {
  return `m_${String(i).padStart(5, "0")}.png`;
}
