import assert from "node:assert/strict";
import { test } from "node:test";

import { decodeStore, encodeStore, Store } from "../src/store.js";

function sampleStore(): Store {
  return {
    datasetDigest: Buffer.from(Array.from({ length: 32 }, (_, i) => i)),
    dim: 3,
    count: 2,
    encoderTag: "t",
    vectors: Float32Array.from([1, 2, 3, 4, 5, 6]),
  };
}

// Hand-assembled from the format layout: magic, version, digest, dim,
// count, tag length, tag, then six float32 values.
const GOLDEN_HEX =
  "454d4253" + // "EMBS"
  "01000000" + // version 1
  "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f" +
  "03000000" + // dim 3
  "0200000000000000" + // count 2
  "0100" + // tag length 1
  "74" + // "t"
  "0000803f" + "00000040" + "00004040" + // 1.0 2.0 3.0
  "00008040" + "0000a040" + "0000c040"; // 4.0 5.0 6.0

test("encoding matches the golden byte layout", () => {
  const encoded = encodeStore(sampleStore());
  assert.equal(encoded.length, 54 + 1 + 24);
  assert.equal(encoded.toString("hex"), GOLDEN_HEX);
});

test("decode inverts encode bit-exactly", () => {
  const store = sampleStore();
  const decoded = decodeStore(encodeStore(store));
  assert.deepEqual(decoded.vectors, store.vectors);
  assert.equal(decoded.encoderTag, "t");
  assert.equal(decoded.dim, 3);
  assert.equal(decoded.count, 2);
  assert.ok(decoded.datasetDigest.equals(store.datasetDigest));
});

test("unicode encoder tags survive the round trip", () => {
  const store = { ...sampleStore(), encoderTag: "usé+convért" };
  assert.equal(decodeStore(encodeStore(store)).encoderTag, "usé+convért");
});

test("bad magic is rejected", () => {
  const data = encodeStore(sampleStore());
  data.write("NOPE", 0, "ascii");
  assert.throws(() => decodeStore(data), /bad magic/);
});

test("truncated payload is rejected", () => {
  const data = encodeStore(sampleStore());
  assert.throws(() => decodeStore(data.subarray(0, data.length - 4)), /payload/);
});

test("non-finite values are rejected at encode time", () => {
  const store = sampleStore();
  store.vectors[2] = Number.NaN;
  assert.throws(() => encodeStore(store), /non-finite/);
});

test("wrong digest length is rejected", () => {
  const store = { ...sampleStore(), datasetDigest: Buffer.from("short") };
  assert.throws(() => encodeStore(store), /32 bytes/);
});
