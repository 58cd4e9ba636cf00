#!/usr/bin/env node
/**
 * mask-exporter: segment images and write maskcalib-compatible manifests.
 *
 * Usage:
 *   mask-exporter --out masks.json image.ppm
 *   mask-exporter --out outdir img1.ppm img2.ppm ...
 *
 * With several images (or --format images) --out names a directory;
 * manifests are written as <stem>.masks.json, mask-image directories as
 * <stem>_masks/. Batch mode runs strictly sequentially.
 */

import { mkdirSync } from "node:fs";
import { basename, extname, join, resolve } from "node:path";
import { parseArgs } from "node:util";
import { fileURLToPath, pathToFileURL } from "node:url";

import { ExporterConfigSchema } from "./config.js";
import { exportMasks } from "./export.js";

const DEFAULT_CHECKPOINT = fileURLToPath(
  new URL("../checkpoints/default.json", import.meta.url));

const USAGE = `usage: mask-exporter [options] <image.ppm> [more images ...]
  --out <path>                    manifest file, or directory in batch/images mode (required)
  --checkpoint <path>             backend parameter file (default: bundled)
  --points-per-side <n>           seed grid resolution (default 16)
  --pred-iou-thresh <0..1>        drop masks below this homogeneity (default 0.7)
  --stability-score-thresh <0..1> drop masks below this stability (default 0.8)
  --min-mask-area <px>            drop masks smaller than this (default 100)
  --format <manifest|images>      output style (default manifest)
`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        checkpoint: { type: "string" },
        "points-per-side": { type: "string" },
        "pred-iou-thresh": { type: "string" },
        "stability-score-thresh": { type: "string" },
        "min-mask-area": { type: "string" },
        format: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    process.stderr.write(`mask-exporter: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  if (parsed.values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  const images = parsed.positionals;
  if (images.length === 0 || !parsed.values.out) {
    process.stderr.write(`mask-exporter: need --out and at least one image\n${USAGE}`);
    return 2;
  }

  const config = ExporterConfigSchema.safeParse({
    checkpoint: parsed.values.checkpoint ?? DEFAULT_CHECKPOINT,
    pointsPerSide: parsed.values["points-per-side"],
    predIouThresh: parsed.values["pred-iou-thresh"],
    stabilityScoreThresh: parsed.values["stability-score-thresh"],
    minMaskArea: parsed.values["min-mask-area"],
    format: parsed.values.format,
  });
  if (!config.success) {
    process.stderr.write(`mask-exporter: invalid settings: ${config.error.message}\n`);
    return 2;
  }
  const cfg = config.data;
  const out = parsed.values.out;

  try {
    for (const image of images) {
      let target: string;
      if (images.length > 1) {
        mkdirSync(out, { recursive: true });
        const stem = basename(image, extname(image));
        target = cfg.format === "images"
          ? join(out, `${stem}_masks`)
          : join(out, `${stem}.masks.json`);
      } else {
        target = out;
      }
      const result = exportMasks(image, cfg, target);
      process.stdout.write(
        `${image}: ${result.count} masks (${result.width}x${result.height}) -> ${result.outPath}\n`);
    }
  } catch (err) {
    process.stderr.write(`mask-exporter: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

const invokedDirectly = process.argv[1]
  && import.meta.url === pathToFileURL(resolve(process.argv[1])).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
