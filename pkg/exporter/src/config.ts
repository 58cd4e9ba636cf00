/** Run settings and the backend checkpoint, both validated with zod. */

import { readFileSync } from "node:fs";
import { z } from "zod";

export const ExporterConfigSchema = z.object({
  checkpoint: z.string().min(1),
  pointsPerSide: z.coerce.number().int().min(1).max(256).default(16),
  predIouThresh: z.coerce.number().min(0).max(1).default(0.7),
  stabilityScoreThresh: z.coerce.number().min(0).max(1).default(0.8),
  minMaskArea: z.coerce.number().int().min(0).default(100),
  format: z.enum(["manifest", "images"]).default("manifest"),
});

export type ExporterConfig = z.infer<typeof ExporterConfigSchema>;

/**
 * Backend parameters live in a checkpoint file so runs are reproducible
 * against a pinned set of segmentation hyperparameters rather than
 * whatever a tool version happens to default to.
 */
export const CheckpointSchema = z.object({
  kind: z.literal("color-region-grower"),
  version: z.literal(1),
  colorTolerance: z.number().positive(),
  stabilityDelta: z.number().min(0).max(1),
  dedupeIou: z.number().min(0).max(1).default(0.5),
  connectivity: z.union([z.literal(4), z.literal(8)]).default(4),
});

export type Checkpoint = z.infer<typeof CheckpointSchema>;

export function loadCheckpoint(path: string): Checkpoint {
  let raw: string;
  try {
    raw = readFileSync(path, "utf8");
  } catch (err) {
    throw new Error(`cannot read checkpoint ${path}: ${(err as Error).message}`);
  }
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    throw new Error(`checkpoint ${path} is not valid JSON`);
  }
  const parsed = CheckpointSchema.safeParse(doc);
  if (!parsed.success) {
    throw new Error(`checkpoint ${path} is malformed: ${parsed.error.message}`);
  }
  return parsed.data;
}
