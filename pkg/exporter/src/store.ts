/**
 * Embedding store writer/reader, byte-compatible with the classifier
 * toolkit's reader.
 *
 * Layout (little-endian, no padding):
 *   magic "EMBS" | u32 version=1 | 32-byte dataset digest | u32 dim |
 *   u64 count | u16 tag length | tag UTF-8 | count*dim float32 row-major
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = Buffer.from("EMBS", "ascii");
export const VERSION = 1;

export interface Store {
  datasetDigest: Buffer;
  dim: number;
  count: number;
  encoderTag: string;
  vectors: Float32Array; // count * dim values, row-major
}

export function encodeStore(store: Store): Buffer {
  if (store.datasetDigest.length !== 32) {
    throw new Error(`dataset digest must be 32 bytes, got ${store.datasetDigest.length}`);
  }
  if (store.vectors.length !== store.count * store.dim) {
    throw new Error(
      `payload has ${store.vectors.length} values, expected ${store.count * store.dim}`
    );
  }
  for (let i = 0; i < store.vectors.length; i++) {
    if (!Number.isFinite(store.vectors[i])) {
      throw new Error(`non-finite value at flat index ${i}`);
    }
  }
  const tag = Buffer.from(store.encoderTag, "utf-8");
  if (tag.length > 0xffff) throw new Error(`encoder tag too long (${tag.length} bytes)`);

  const header = Buffer.alloc(4 + 4 + 32 + 4 + 8 + 2);
  let offset = 0;
  MAGIC.copy(header, offset);
  offset += 4;
  header.writeUInt32LE(VERSION, offset);
  offset += 4;
  store.datasetDigest.copy(header, offset);
  offset += 32;
  header.writeUInt32LE(store.dim, offset);
  offset += 4;
  header.writeBigUInt64LE(BigInt(store.count), offset);
  offset += 8;
  header.writeUInt16LE(tag.length, offset);

  const payload = Buffer.alloc(store.vectors.length * 4);
  for (let i = 0; i < store.vectors.length; i++) {
    payload.writeFloatLE(store.vectors[i], i * 4);
  }
  return Buffer.concat([header, tag, payload]);
}

export function writeStore(store: Store, path: string): void {
  writeFileSync(path, encodeStore(store));
}

export function decodeStore(data: Buffer): Store {
  const headerSize = 4 + 4 + 32 + 4 + 8 + 2;
  if (data.length < headerSize) throw new Error(`truncated store (${data.length} bytes)`);
  if (!data.subarray(0, 4).equals(MAGIC)) throw new Error("bad magic, not an embedding store");
  const version = data.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`unsupported store version ${version}`);
  const digest = Buffer.from(data.subarray(8, 40));
  const dim = data.readUInt32LE(40);
  const count = Number(data.readBigUInt64LE(44));
  const tagLength = data.readUInt16LE(52);
  if (data.length < headerSize + tagLength) throw new Error("truncated store (tag cut short)");
  const encoderTag = data.subarray(headerSize, headerSize + tagLength).toString("utf-8");
  const payloadOffset = headerSize + tagLength;
  const expected = count * dim * 4;
  if (data.length !== payloadOffset + expected) {
    throw new Error(
      `payload is ${data.length - payloadOffset} bytes, expected ${expected} (${count} x ${dim} float32)`
    );
  }
  const vectors = new Float32Array(count * dim);
  for (let i = 0; i < vectors.length; i++) {
    vectors[i] = data.readFloatLE(payloadOffset + i * 4);
  }
  return { datasetDigest: digest, dim, count, encoderTag, vectors };
}

export function readStore(path: string): Store {
  return decodeStore(readFileSync(path));
}
