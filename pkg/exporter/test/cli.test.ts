import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, readdirSync, rmSync,
         writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, afterEach, beforeAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { parseManifest } from "../src/manifest.js";
import { fixturePpm } from "./fixture.js";

const DIST_CLI = new URL("../dist/cli.js", import.meta.url).pathname;

let dir: string;
let imagePath: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "exporter-cli-"));
  imagePath = join(dir, "fixture.ppm");
  writeFileSync(imagePath, fixturePpm());
});

afterAll(() => {
  rmSync(dir, { recursive: true, force: true });
});

interface RunResult {
  code: number;
  out: string;
  err: string;
}

const realOut = process.stdout.write.bind(process.stdout);
const realErr = process.stderr.write.bind(process.stderr);

afterEach(() => {
  process.stdout.write = realOut;
  process.stderr.write = realErr;
});

/** Run main() in process, capturing the streams. */
function run(...argv: string[]): RunResult {
  let out = "";
  let err = "";
  process.stdout.write = ((chunk: unknown) => {
    out += String(chunk);
    return true;
  }) as typeof process.stdout.write;
  process.stderr.write = ((chunk: unknown) => {
    err += String(chunk);
    return true;
  }) as typeof process.stderr.write;
  try {
    return { code: main(argv), out, err };
  } finally {
    process.stdout.write = realOut;
    process.stderr.write = realErr;
  }
}

describe("usage handling", () => {
  it("reports missing arguments on exit code 2", () => {
    const none = run();
    expect(none.code).toBe(2);
    expect(none.err).toContain("usage:");
    const noOut = run(imagePath);
    expect(noOut.code).toBe(2);
    expect(noOut.err).toContain("--out");
  });

  it("rejects unknown flags", () => {
    const r = run("--frobnicate", "--out", join(dir, "x.json"), imagePath);
    expect(r.code).toBe(2);
    expect(r.err).toContain("frobnicate");
  });

  it("rejects out-of-range settings", () => {
    const r = run("--out", join(dir, "x.json"),
                  "--pred-iou-thresh", "1.5", imagePath);
    expect(r.code).toBe(2);
    expect(r.err).toContain("invalid settings");
    const nan = run("--out", join(dir, "x.json"),
                    "--points-per-side", "many", imagePath);
    expect(nan.code).toBe(2);
  });

  it("prints usage on --help", () => {
    const r = run("--help");
    expect(r.code).toBe(0);
    expect(r.out).toContain("usage: mask-exporter");
  });
});

describe("runtime failures", () => {
  it("missing image exits 1 with the path in the message", () => {
    const r = run("--out", join(dir, "x.json"), join(dir, "nope.ppm"));
    expect(r.code).toBe(1);
    expect(r.err).toContain("nope.ppm");
  });

  it("missing checkpoint exits 1", () => {
    const r = run("--out", join(dir, "x.json"),
                  "--checkpoint", join(dir, "nope.json"), imagePath);
    expect(r.code).toBe(1);
    expect(r.err).toContain("checkpoint");
  });

  it("unparseable and malformed checkpoints exit 1", () => {
    const garbled = join(dir, "garbled.json");
    writeFileSync(garbled, "{not json");
    const bad = run("--out", join(dir, "x.json"), "--checkpoint", garbled, imagePath);
    expect(bad.code).toBe(1);
    expect(bad.err).toContain("not valid JSON");

    const wrong = join(dir, "wrong.json");
    writeFileSync(wrong, JSON.stringify({ kind: "other", version: 1 }));
    const r = run("--out", join(dir, "x.json"), "--checkpoint", wrong, imagePath);
    expect(r.code).toBe(1);
    expect(r.err).toContain("malformed");
  });
});

describe("export runs", () => {
  it("writes a valid manifest and reports the count", () => {
    const out = join(dir, "single.masks.json");
    const r = run("--out", out, imagePath);
    expect(r.code).toBe(0);
    expect(r.out).toBe(`${imagePath}: 4 masks (96x64) -> ${out}\n`);
    const parsed = parseManifest(readFileSync(out));
    expect(parsed.masks.map((m) => m.id)).toEqual([0, 1, 2, 3]);
  });

  it("reruns are byte-identical", () => {
    const a = join(dir, "rerun-a.json");
    const b = join(dir, "rerun-b.json");
    expect(run("--out", a, imagePath).code).toBe(0);
    expect(run("--out", b, imagePath).code).toBe(0);
    expect(readFileSync(a).equals(readFileSync(b))).toBe(true);
  });

  it("threshold flags reach the pipeline", () => {
    const out = join(dir, "loose.masks.json");
    const r = run("--out", out, "--pred-iou-thresh", "0",
                  "--stability-score-thresh", "0", "--min-mask-area", "0",
                  imagePath);
    expect(r.code).toBe(0);
    expect(r.out).toContain("5 masks");
  });

  it("batch mode writes one manifest per image stem", () => {
    const second = join(dir, "other.ppm");
    writeFileSync(second, fixturePpm());
    const outDir = join(dir, "batch");
    const r = run("--out", outDir, imagePath, second);
    expect(r.code).toBe(0);
    expect(r.out.trim().split("\n")).toHaveLength(2);
    const a = readFileSync(join(outDir, "fixture.masks.json"));
    const b = readFileSync(join(outDir, "other.masks.json"));
    expect(a.equals(b)).toBe(true); // same pixels in, same masks out
  });

  it("images format writes one file per mask", () => {
    const outDir = join(dir, "imgdir");
    const r = run("--out", outDir, "--format", "images", imagePath);
    expect(r.code).toBe(0);
    expect(readdirSync(outDir).sort()).toEqual(
      ["mask_000.ppm", "mask_001.ppm", "mask_002.ppm", "mask_003.ppm"]);
  });
});

describe("installed entry point", () => {
  it("the built cli behaves like the library", () => {
    expect(existsSync(DIST_CLI)).toBe(true); // npm test builds before running
    const out = join(dir, "subprocess.masks.json");
    const stdout = execFileSync(
      process.execPath, [DIST_CLI, "--out", out, imagePath], { encoding: "utf8" });
    expect(stdout).toBe(`${imagePath}: 4 masks (96x64) -> ${out}\n`);
    expect(readFileSync(out).equals(readFileSync(join(dir, "single.masks.json"))))
      .toBe(true);

    const help = execFileSync(process.execPath, [DIST_CLI, "--help"],
                              { encoding: "utf8" });
    expect(help).toContain("usage: mask-exporter");
  });
});
