/**
 * Row-major run-length encoding of binary masks.
 *
 * Counts alternate starting with the number of leading zeros, so a mask
 * whose first pixel is set encodes as [0, ...]. An all-zero mask is a
 * single count. This is the exact convention of the maskcalib manifest
 * format; the byte-level contract is covered by the conformance tests.
 */

export function encodeRle(bitmap: Uint8Array): number[] {
  const counts: number[] = [];
  let current = 0;
  let run = 0;
  for (let i = 0; i < bitmap.length; i++) {
    const bit = bitmap[i] ? 1 : 0;
    if (bit === current) {
      run++;
    } else {
      counts.push(run);
      current = bit;
      run = 1;
    }
  }
  counts.push(run);
  return counts;
}

export function decodeRle(counts: number[], height: number, width: number): Uint8Array {
  const out = new Uint8Array(height * width);
  let pos = 0;
  let bit = 0;
  for (const count of counts) {
    if (!Number.isInteger(count) || count < 0) {
      throw new Error(`invalid run length ${count}`);
    }
    if (bit) {
      out.fill(1, pos, pos + count);
    }
    pos += count;
    bit ^= 1;
  }
  if (pos !== out.length) {
    throw new Error(`runs sum to ${pos}, expected ${out.length}`);
  }
  return out;
}
