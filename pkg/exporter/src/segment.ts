/**
 * Deterministic automatic mask generation.
 *
 * A grid of seed points is dropped over the image (pointsPerSide per
 * axis). Each seed grows a region of pixels whose color stays within
 * the checkpoint's tolerance of the seed color. Every candidate gets
 * two quality scores:
 *
 *   predIou    color homogeneity of the region, 1 for a solid patch
 *   stability  IoU between regrowths at a tightened and a loosened
 *              tolerance; noisy regions shrink under the tight pass
 *
 * Duplicates are collapsed before any threshold is applied (largest
 * candidate wins), so raising a threshold can only remove masks, never
 * surface new ones: the exported count is monotone in both thresholds.
 *
 * There is no randomness anywhere: identical image, checkpoint, and
 * settings give identical masks byte for byte.
 */

import type { Checkpoint, ExporterConfig } from "./config.js";
import type { RgbImage } from "./ppm.js";

export interface MaskCandidate {
  bitmap: Uint8Array;
  area: number;
  predIou: number;
  stability: number;
  /** Lowest set pixel index; deterministic tiebreaker for equal areas. */
  anchor: number;
}

const NEIGHBORS_4 = [[1, 0], [-1, 0], [0, 1], [0, -1]] as const;
const NEIGHBORS_8 = [...NEIGHBORS_4, [1, 1], [1, -1], [-1, 1], [-1, -1]] as const;

function growRegion(image: RgbImage, seed: number, tolerance: number,
                    connectivity: 4 | 8): Uint8Array {
  const { width, height, data } = image;
  const bitmap = new Uint8Array(width * height);
  const queue = new Int32Array(width * height);
  const r0 = data[3 * seed];
  const g0 = data[3 * seed + 1];
  const b0 = data[3 * seed + 2];
  const steps = connectivity === 8 ? NEIGHBORS_8 : NEIGHBORS_4;
  let head = 0;
  let tail = 0;
  bitmap[seed] = 1;
  queue[tail++] = seed;
  while (head < tail) {
    const idx = queue[head++];
    const x = idx % width;
    const y = (idx - x) / width;
    for (const [dx, dy] of steps) {
      const nx = x + dx;
      const ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const nIdx = ny * width + nx;
      if (bitmap[nIdx]) continue;
      const dist = Math.abs(data[3 * nIdx] - r0)
        + Math.abs(data[3 * nIdx + 1] - g0)
        + Math.abs(data[3 * nIdx + 2] - b0);
      if (dist > tolerance) continue;
      bitmap[nIdx] = 1;
      queue[tail++] = nIdx;
    }
  }
  return bitmap;
}

/** 1 minus the mean color deviation from the region mean, in tolerance units. */
function homogeneity(image: RgbImage, bitmap: Uint8Array, area: number,
                     tolerance: number): number {
  const { data } = image;
  let r = 0;
  let g = 0;
  let b = 0;
  for (let i = 0; i < bitmap.length; i++) {
    if (!bitmap[i]) continue;
    r += data[3 * i];
    g += data[3 * i + 1];
    b += data[3 * i + 2];
  }
  r /= area;
  g /= area;
  b /= area;
  let deviation = 0;
  for (let i = 0; i < bitmap.length; i++) {
    if (!bitmap[i]) continue;
    deviation += Math.abs(data[3 * i] - r)
      + Math.abs(data[3 * i + 1] - g)
      + Math.abs(data[3 * i + 2] - b);
  }
  return 1 - Math.min(1, deviation / area / tolerance);
}

export function iou(a: Uint8Array, b: Uint8Array): number {
  let inter = 0;
  let union = 0;
  for (let i = 0; i < a.length; i++) {
    if (a[i] && b[i]) inter++;
    if (a[i] || b[i]) union++;
  }
  return union === 0 ? 0 : inter / union;
}

function countSet(bitmap: Uint8Array): number {
  let n = 0;
  for (let i = 0; i < bitmap.length; i++) n += bitmap[i];
  return n;
}

function firstSet(bitmap: Uint8Array): number {
  for (let i = 0; i < bitmap.length; i++) {
    if (bitmap[i]) return i;
  }
  return -1;
}

export function generateCandidates(image: RgbImage, checkpoint: Checkpoint,
                                   pointsPerSide: number): MaskCandidate[] {
  const { width, height } = image;
  const { colorTolerance, stabilityDelta, dedupeIou, connectivity } = checkpoint;
  const raw: MaskCandidate[] = [];
  for (let j = 0; j < pointsPerSide; j++) {
    const sy = Math.min(height - 1, Math.floor(((j + 0.5) * height) / pointsPerSide));
    for (let i = 0; i < pointsPerSide; i++) {
      const sx = Math.min(width - 1, Math.floor(((i + 0.5) * width) / pointsPerSide));
      const seed = sy * width + sx;
      const bitmap = growRegion(image, seed, colorTolerance, connectivity);
      const area = countSet(bitmap);
      const tight = growRegion(image, seed, colorTolerance * (1 - stabilityDelta),
                               connectivity);
      const loose = growRegion(image, seed, colorTolerance * (1 + stabilityDelta),
                               connectivity);
      raw.push({
        bitmap,
        area,
        predIou: homogeneity(image, bitmap, area, colorTolerance),
        stability: iou(tight, loose),
        anchor: firstSet(bitmap),
      });
    }
  }
  // collapse duplicates up front; thresholds later can only shrink the set
  raw.sort((a, b) => b.area - a.area || a.anchor - b.anchor);
  const kept: MaskCandidate[] = [];
  for (const candidate of raw) {
    if (kept.every((other) => iou(candidate.bitmap, other.bitmap) <= dedupeIou)) {
      kept.push(candidate);
    }
  }
  return kept;
}

export function selectMasks(candidates: MaskCandidate[],
                            cfg: ExporterConfig): MaskCandidate[] {
  return candidates.filter((c) => c.predIou >= cfg.predIouThresh
    && c.stability >= cfg.stabilityScoreThresh
    && c.area >= cfg.minMaskArea);
}

export function generateMasks(image: RgbImage, checkpoint: Checkpoint,
                              cfg: ExporterConfig): MaskCandidate[] {
  return selectMasks(generateCandidates(image, checkpoint, cfg.pointsPerSide), cfg);
}
