/** One image in, one manifest (or mask-image directory) out. */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { loadCheckpoint, type ExporterConfig } from "./config.js";
import { manifestBytes } from "./manifest.js";
import { maskPpmBytes, parsePpm } from "./ppm.js";
import { generateMasks } from "./segment.js";

export interface ExportResult {
  outPath: string;
  width: number;
  height: number;
  count: number;
}

export function exportMasks(imagePath: string, cfg: ExporterConfig,
                            outPath: string): ExportResult {
  const checkpoint = loadCheckpoint(cfg.checkpoint);
  let raw: Buffer;
  try {
    raw = readFileSync(imagePath);
  } catch (err) {
    throw new Error(`cannot read image ${imagePath}: ${(err as Error).message}`);
  }
  let image;
  try {
    image = parsePpm(raw);
  } catch (err) {
    throw new Error(`${imagePath}: ${(err as Error).message}`);
  }

  const masks = generateMasks(image, checkpoint, cfg);
  if (cfg.format === "images") {
    mkdirSync(outPath, { recursive: true });
    masks.forEach((mask, id) => {
      const name = `mask_${String(id).padStart(3, "0")}.ppm`;
      writeFileSync(join(outPath, name),
                    maskPpmBytes(mask.bitmap, image.width, image.height));
    });
  } else {
    writeFileSync(outPath,
                  manifestBytes(masks.map((m) => m.bitmap), image.width, image.height));
  }
  return { outPath, width: image.width, height: image.height, count: masks.length };
}
