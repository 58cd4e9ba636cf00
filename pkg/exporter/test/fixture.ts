/**
 * Shared test image: four rectangles on a light background, each with a
 * different amount of deterministic per-pixel color noise, so the
 * quality thresholds have something real to discriminate.
 *
 * Noise is a fixed integer pattern (no RNG): channel c of pixel (x, y)
 * is offset by round(((x*31 + y*17 + c*11) % 7 - 3) * k) where k is the
 * region's roughness. The pattern has 7 color classes laid out in
 * anti-diagonal stripes; the largest L1 distance between two classes is
 * 12k. Roughness 0 regions are perfectly solid and score homogeneity 1.
 * k=3 keeps the whole region within the default tolerance of 40 from
 * any seed (12*3 = 36), so every seed grows the full rectangle, but the
 * tightened tolerance of 30 excludes the two classes at distance 33 and
 * 36 from a class-0 seed, dropping that region's stability below 1. The
 * k=3 rectangle is placed so its first-scanned seed (63, 42) sits on
 * class 0.
 */

import { ppmBytes, type RgbImage } from "../src/ppm.js";

export const FIXTURE_WIDTH = 96;
export const FIXTURE_HEIGHT = 64;

// [x0, x1, y0, y1, [r, g, b], roughness]
export const REGIONS: Array<[number, number, number, number,
                             [number, number, number], number]> = [
  [0, 96, 0, 64, [210, 210, 215], 0],   // background, area 4416 after carving
  [8, 38, 8, 28, [190, 40, 40], 0],     // solid, area 600
  [52, 76, 10, 26, [40, 170, 60], 1],   // slightly noisy, area 384
  [10, 38, 38, 56, [50, 80, 190], 2],   // noisier, area 504
  [58, 78, 40, 52, [210, 190, 40], 3],  // roughest, area 240
];

export function fixtureImage(): RgbImage {
  const data = new Uint8Array(FIXTURE_WIDTH * FIXTURE_HEIGHT * 3);
  for (const [x0, x1, y0, y1, rgb, roughness] of REGIONS) {
    for (let y = y0; y < y1; y++) {
      for (let x = x0; x < x1; x++) {
        for (let c = 0; c < 3; c++) {
          const off = Math.round((((x * 31 + y * 17 + c * 11) % 7) - 3) * roughness);
          data[3 * (y * FIXTURE_WIDTH + x) + c] =
            Math.max(0, Math.min(255, rgb[c] + off));
        }
      }
    }
  }
  return { width: FIXTURE_WIDTH, height: FIXTURE_HEIGHT, data };
}

export function fixturePpm(): Buffer {
  return ppmBytes(fixtureImage());
}
