export { decodeRle, encodeRle } from "./rle.js";
export { manifestBytes, parseManifest } from "./manifest.js";
export type { Manifest, MaskRecord } from "./manifest.js";
export { maskPpmBytes, parsePpm, ppmBytes } from "./ppm.js";
export type { RgbImage } from "./ppm.js";
export { CheckpointSchema, ExporterConfigSchema, loadCheckpoint } from "./config.js";
export type { Checkpoint, ExporterConfig } from "./config.js";
export { generateCandidates, generateMasks, iou, selectMasks } from "./segment.js";
export type { MaskCandidate } from "./segment.js";
export { exportMasks } from "./export.js";
export type { ExportResult } from "./export.js";
export { main } from "./cli.js";
