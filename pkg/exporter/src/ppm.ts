/** Binary portable-pixmap (P6) reading and writing, the codec-free image path. */

export interface RgbImage {
  width: number;
  height: number;
  /** RGB triplets, row-major, length width * height * 3. */
  data: Uint8Array;
}

export function parsePpm(raw: Buffer): RgbImage {
  if (raw.length < 2 || raw[0] !== 0x50 || raw[1] !== 0x36) {
    throw new Error("not a P6 portable pixmap");
  }
  // header: three whitespace-separated integers, # comments allowed
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < raw.length && isSpace(raw[pos])) pos++;
    if (raw[pos] === 0x23) { // '#'
      while (pos < raw.length && raw[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < raw.length && !isSpace(raw[pos])) pos++;
    const token = raw.toString("ascii", start, pos);
    if (!/^\d+$/.test(token)) {
      throw new Error(`malformed header token "${token}"`);
    }
    fields.push(parseInt(token, 10));
  }
  const [width, height, maxval] = fields;
  if (maxval !== 255) {
    throw new Error(`unsupported maxval ${maxval}, expected 255`);
  }
  pos++; // single whitespace byte after maxval
  const expected = width * height * 3;
  if (raw.length - pos < expected) {
    throw new Error(`truncated pixel data: ${raw.length - pos} of ${expected} bytes`);
  }
  const data = new Uint8Array(raw.subarray(pos, pos + expected));
  return { width, height, data };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function ppmBytes(image: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.data)]);
}

/** White-on-black rendering of a binary mask, readable by any PPM viewer. */
export function maskPpmBytes(bitmap: Uint8Array, width: number, height: number): Buffer {
  const data = new Uint8Array(width * height * 3);
  for (let i = 0; i < bitmap.length; i++) {
    if (bitmap[i]) {
      data[3 * i] = 255;
      data[3 * i + 1] = 255;
      data[3 * i + 2] = 255;
    }
  }
  return ppmBytes({ width, height, data });
}
