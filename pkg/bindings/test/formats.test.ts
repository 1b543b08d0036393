import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import {
  FormatError,
  readDpt1,
  readManifest,
  readPngMask,
  readPngRgb,
  writeDpt1,
  writeManifest,
  writePngMask,
  writePngRgb,
} from "../src";
import { mulberry32 } from "./helpers";

let tmp: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "wf-fmt-"));
});

afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("png codecs", () => {
  it("round-trips rgb images bit-exactly", () => {
    const rand = mulberry32(1);
    const pixels = new Uint8Array(12 * 9 * 3);
    for (let i = 0; i < pixels.length; i++) pixels[i] = Math.floor(rand() * 256);
    const file = path.join(tmp, "img.png");
    writePngRgb(file, { pixels, width: 12, height: 9 });
    const back = readPngRgb(file);
    expect(back.width).toBe(12);
    expect(back.height).toBe(9);
    expect(Buffer.from(back.pixels).equals(Buffer.from(pixels))).toBe(true);
  });

  it("round-trips masks", () => {
    const rand = mulberry32(2);
    const flags = new Uint8Array(8 * 8);
    for (let i = 0; i < flags.length; i++) flags[i] = rand() < 0.5 ? 1 : 0;
    const file = path.join(tmp, "mask.png");
    writePngMask(file, { flags, width: 8, height: 8 });
    const back = readPngMask(file);
    expect(Buffer.from(back.flags).equals(Buffer.from(flags))).toBe(true);
  });

  it("rejects mismatched buffer sizes", () => {
    expect(() =>
      writePngRgb(path.join(tmp, "x.png"), { pixels: new Uint8Array(5), width: 4, height: 4 }),
    ).toThrow(FormatError);
  });
});

describe("dpt1 codec", () => {
  it("round-trips float depths bit-exactly", () => {
    const rand = mulberry32(3);
    const values = new Float32Array(10 * 6);
    for (let i = 0; i < values.length; i++) values[i] = Math.fround(rand() * 5);
    const file = path.join(tmp, "d.dpt");
    writeDpt1(file, { values, width: 10, height: 6 });
    const back = readDpt1(file);
    expect(back.width).toBe(10);
    expect(back.height).toBe(6);
    expect(Array.from(back.values)).toEqual(Array.from(values));
  });

  it("rejects bad magic", () => {
    const file = path.join(tmp, "bad.dpt");
    fs.writeFileSync(file, Buffer.from("JUNKxxxxxxxxxxxx"));
    expect(() => readDpt1(file)).toThrow(FormatError);
  });

  it("rejects truncated payloads", () => {
    const file = path.join(tmp, "trunc.dpt");
    writeDpt1(file, { values: new Float32Array(4), width: 2, height: 2 });
    const raw = fs.readFileSync(file);
    fs.writeFileSync(file, raw.subarray(0, raw.length - 4));
    expect(() => readDpt1(file)).toThrow(FormatError);
  });
});

describe("manifests", () => {
  it("writes sorted keys and round-trips", () => {
    const file = path.join(tmp, "m.json");
    writeManifest(file, { zebra: 1, apple: { nested: [3, 2, 1], alpha: true } });
    const text = fs.readFileSync(file, "utf-8");
    expect(text.indexOf('"apple"')).toBeLessThan(text.indexOf('"zebra"'));
    expect(text.endsWith("\n")).toBe(true);
    expect(readManifest(file)).toEqual({
      zebra: 1,
      apple: { nested: [3, 2, 1], alpha: true },
    });
  });

  it("rejects invalid json", () => {
    const file = path.join(tmp, "bad.json");
    fs.writeFileSync(file, "{nope");
    expect(() => readManifest(file)).toThrow(FormatError);
  });
});
