import assert from "node:assert/strict";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { loadDataset } from "../src/dataset.js";
import { Encoder, HashEncoder } from "../src/encoders.js";
import { exportDataset } from "../src/exporter.js";
import { decodeStore, encodeStore } from "../src/store.js";

function threeRowDataset() {
  const dir = mkdtempSync(join(tmpdir(), "exporter-test-"));
  const path = join(dir, "toy.csv");
  writeFileSync(path, "text,category\nhello,greet\npay my bill,bill\nhello,greet\n");
  return loadDataset(path);
}

test("export aligns one vector per row and binds the digest", async () => {
  const dataset = threeRowDataset();
  const store = await exportDataset(dataset, new HashEncoder(16));
  assert.equal(store.count, 3);
  assert.equal(store.dim, 16);
  assert.equal(store.encoderTag, "hash");
  assert.ok(store.datasetDigest.equals(dataset.digest));
});

test("identical texts encode to identical vectors", async () => {
  const dataset = threeRowDataset();
  const store = await exportDataset(dataset, new HashEncoder(16));
  const row = (i: number) => store.vectors.slice(i * 16, (i + 1) * 16);
  assert.deepEqual(row(0), row(2)); // rows 0 and 2 share the text "hello"
  assert.notDeepEqual(row(0), row(1));
});

test("re-export is byte-identical", async () => {
  const dataset = threeRowDataset();
  const a = encodeStore(await exportDataset(dataset, new HashEncoder(32)));
  const b = encodeStore(await exportDataset(dataset, new HashEncoder(32)));
  assert.ok(a.equals(b));
});

test("export respects the configured batch size", async () => {
  const batches: number[] = [];
  class CountingEncoder extends HashEncoder {
    override async encodeBatch(texts: string[]) {
      batches.push(texts.length);
      return super.encodeBatch(texts);
    }
  }
  const dataset = threeRowDataset();
  await exportDataset(dataset, new CountingEncoder(8), { batchSize: 2 });
  assert.deepEqual(batches, [2, 1]);
});

test("a failing encoder reports the row index", async () => {
  const dataset = threeRowDataset();
  const failing: Encoder = {
    name: "boom",
    dim: 4,
    encodeBatch: async () => {
      throw new Error("upstream exploded");
    },
  };
  await assert.rejects(exportDataset(dataset, failing), /row 0.*upstream exploded/);
});

test("a dimension-lying encoder is caught", async () => {
  const dataset = threeRowDataset();
  const liar: Encoder = {
    name: "liar",
    dim: 4,
    encodeBatch: async (texts) => texts.map(() => new Float32Array(3)),
  };
  await assert.rejects(exportDataset(dataset, liar), /3-dim vector at row 0, expected 4/);
});

test("exported stores decode with matching metadata", async () => {
  const dataset = threeRowDataset();
  const store = await exportDataset(dataset, new HashEncoder(8));
  const decoded = decodeStore(encodeStore(store));
  assert.equal(decoded.count, 3);
  assert.equal(decoded.dim, 8);
  assert.ok(decoded.datasetDigest.equals(dataset.digest));
});
