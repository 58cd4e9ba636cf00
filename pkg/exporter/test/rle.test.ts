import { describe, expect, it } from "vitest";

import { decodeRle, encodeRle } from "../src/rle.js";

describe("decodeRle", () => {
  it("places runs row-major, zeros first", () => {
    // 2x4 image: [3, 2, 3] sets pixels 3 and 4, i.e. (0,3) and (1,0)
    const bitmap = decodeRle([3, 2, 3], 2, 4);
    expect(Array.from(bitmap)).toEqual([0, 0, 0, 1, 1, 0, 0, 0]);
  });

  it("handles uniform masks", () => {
    expect(Array.from(decodeRle([15], 3, 5))).toEqual(new Array(15).fill(0));
    expect(Array.from(decodeRle([0, 15], 3, 5))).toEqual(new Array(15).fill(1));
  });

  it("rejects negative and fractional counts", () => {
    expect(() => decodeRle([3, -1, 6], 2, 4)).toThrow("invalid run length");
    expect(() => decodeRle([3.5, 4.5], 2, 4)).toThrow("invalid run length");
  });

  it("rejects counts that do not fill the image", () => {
    expect(() => decodeRle([3, 2], 2, 4)).toThrow("runs sum to 5");
    expect(() => decodeRle([3, 2, 4], 2, 4)).toThrow("expected 8");
  });
});

describe("encodeRle", () => {
  it("starts with a zero count when the first pixel is set", () => {
    expect(encodeRle(Uint8Array.from([1, 1, 0]))).toEqual([0, 2, 1]);
  });

  it("encodes the hand example back", () => {
    expect(encodeRle(Uint8Array.from([0, 0, 0, 1, 1, 0, 0, 0]))).toEqual([3, 2, 3]);
  });

  it("inverts decodeRle on a deterministic pattern", () => {
    const bitmap = new Uint8Array(31 * 17);
    for (let i = 0; i < bitmap.length; i++) {
      bitmap[i] = (i * i + 3 * i) % 11 < 4 ? 1 : 0;
    }
    expect(decodeRle(encodeRle(bitmap), 17, 31)).toEqual(bitmap);
  });
});
