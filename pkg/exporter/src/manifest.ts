/**
 * Canonical manifest serialization.
 *
 * The byte layout is fixed: compact JSON, keys in the order
 * width/height/masks and id/counts, trailing newline, ASCII only.
 * Consumers re-encode what they load and compare bytes, so any drift
 * here is a breaking change.
 */

import { decodeRle, encodeRle } from "./rle.js";

export interface MaskRecord {
  id: number;
  counts: number[];
}

export interface Manifest {
  width: number;
  height: number;
  masks: MaskRecord[];
}

export function manifestBytes(bitmaps: Uint8Array[], width: number, height: number): Buffer {
  const masks: MaskRecord[] = bitmaps.map((bitmap, id) => {
    if (bitmap.length !== width * height) {
      throw new Error(`mask ${id}: ${bitmap.length} pixels, expected ${width * height}`);
    }
    return { id, counts: encodeRle(bitmap) };
  });
  return Buffer.from(JSON.stringify({ width, height, masks }) + "\n", "ascii");
}

export function parseManifest(data: Buffer): Manifest {
  const doc = JSON.parse(data.toString("ascii"));
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("manifest must be a JSON object");
  }
  const { width, height, masks } = doc as Record<string, unknown>;
  if (!Number.isInteger(width) || !Number.isInteger(height)
      || (width as number) <= 0 || (height as number) <= 0) {
    throw new Error("manifest width/height must be positive integers");
  }
  if (!Array.isArray(masks)) {
    throw new Error("manifest masks must be an array");
  }
  const records: MaskRecord[] = [];
  for (const entry of masks) {
    const { id, counts } = entry as Record<string, unknown>;
    if (!Number.isInteger(id) || !Array.isArray(counts)) {
      throw new Error("each mask needs an integer id and a counts array");
    }
    if (records.length && (id as number) <= records[records.length - 1].id) {
      throw new Error("mask ids must be strictly ascending");
    }
    decodeRle(counts as number[], height as number, width as number); // validates
    records.push({ id: id as number, counts: counts as number[] });
  }
  return { width: width as number, height: height as number, masks: records };
}
