/**
 * Minimal PNG codec for 8-bit images, backed by node:zlib.
 *
 * Decode handles color types 0 (gray), 2 (RGB), 4 (gray+alpha) and
 * 6 (RGBA) with all five scanline filters; alpha is composited over black
 * so decoded pixels match the engine's loader semantics. Encode always
 * writes 8-bit RGB (color type 2, filter 0), which the engine reads
 * losslessly.
 */

import * as zlib from "node:zlib";

export interface RawImage {
  width: number;
  height: number;
  /** RGB samples, row-major, length = width * height * 3 */
  data: Uint8Array;
}

const SIGNATURE = Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Uint8Array[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, payload.length);
  const typeBytes = new TextEncoder().encode(type);
  out.set(typeBytes, 4);
  out.set(payload, 8);
  view.setUint32(8 + payload.length, crc32(typeBytes, payload));
  return out;
}

export function encodePng(image: RawImage): Uint8Array {
  const { width, height, data } = image;
  if (width < 1 || height < 1) throw new Error("png: zero-dimension image");
  if (data.length !== width * height * 3) {
    throw new Error(
      `png: data length ${data.length} != ${width}x${height}x3`,
    );
  }
  const stride = width * 3;
  const raw = new Uint8Array(height * (stride + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter: None
    raw.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const ihdr = new Uint8Array(13);
  const view = new DataView(ihdr.buffer);
  view.setUint32(0, width);
  view.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: RGB
  const idat = zlib.deflateSync(raw, { level: 6 });
  return concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", new Uint8Array(idat.buffer, idat.byteOffset, idat.length)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(bytes: Uint8Array): RawImage {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("png: bad signature");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let offset = 8;
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  let colorType = 0;
  const idat: Uint8Array[] = [];
  while (offset < bytes.length) {
    const length = view.getUint32(offset);
    const type = new TextDecoder().decode(bytes.subarray(offset + 4, offset + 8));
    const payload = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      const h = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
      width = h.getUint32(0);
      height = h.getUint32(4);
      bitDepth = payload[8];
      colorType = payload[9];
      if (payload[12] !== 0) throw new Error("png: interlaced images unsupported");
    } else if (type === "IDAT") {
      idat.push(payload);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length;
  }
  if (bitDepth !== 8) throw new Error(`png: unsupported bit depth ${bitDepth}`);
  const channelsByType: Record<number, number> = { 0: 1, 2: 3, 4: 2, 6: 4 };
  const channels = channelsByType[colorType];
  if (channels === undefined) {
    throw new Error(`png: unsupported color type ${colorType}`);
  }
  const raw = new Uint8Array(zlib.inflateSync(concat(idat)));
  const stride = width * channels;
  if (raw.length !== height * (stride + 1)) {
    throw new Error("png: scanline data has unexpected length");
  }

  // Undo per-scanline filters in place.
  const lines = new Uint8Array(height * stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const row = lines.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? lines.subarray((y - 1) * stride, y * stride) : null;
    for (let x = 0; x < stride; x++) {
      const left = x >= channels ? row[x - channels] : 0;
      const up = prev ? prev[x] : 0;
      const upLeft = prev && x >= channels ? prev[x - channels] : 0;
      let value = src[x];
      switch (filter) {
        case 0:
          break;
        case 1:
          value += left;
          break;
        case 2:
          value += up;
          break;
        case 3:
          value += (left + up) >> 1;
          break;
        case 4:
          value += paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`png: unknown filter ${filter}`);
      }
      row[x] = value & 0xff;
    }
  }

  const data = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    const s = i * channels;
    let r: number, g: number, b: number, a: number;
    switch (colorType) {
      case 0:
        r = g = b = lines[s];
        a = 255;
        break;
      case 2:
        r = lines[s];
        g = lines[s + 1];
        b = lines[s + 2];
        a = 255;
        break;
      case 4:
        r = g = b = lines[s];
        a = lines[s + 1];
        break;
      default:
        r = lines[s];
        g = lines[s + 1];
        b = lines[s + 2];
        a = lines[s + 3];
        break;
    }
    if (a !== 255) {
      // composite over black, rounding half up (matches the engine loader)
      r = Math.floor((r * a * 2 + 255) / 510);
      g = Math.floor((g * a * 2 + 255) / 510);
      b = Math.floor((b * a * 2 + 255) / 510);
    }
    data[i * 3] = r;
    data[i * 3 + 1] = g;
    data[i * 3 + 2] = b;
  }
  return { width, height, data };
}
