import assert from "node:assert/strict";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { fileDigest, loadDataset, parseCsv } from "../src/dataset.js";

const SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

function tempFile(name: string, content: string | Buffer): string {
  const dir = mkdtempSync(join(tmpdir(), "exporter-test-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

test("digest of the empty file is the SHA-256 constant", () => {
  assert.equal(fileDigest(tempFile("empty", "")).toString("hex"), SHA256_EMPTY);
});

test("digest covers raw bytes", () => {
  const a = fileDigest(tempFile("a.csv", "text,category\nhi,greet\n"));
  const b = fileDigest(tempFile("b.csv", "text,category\nho,greet\n"));
  assert.notDeepEqual(a, b);
});

test("csv parser handles quoting, embedded delimiters and CRLF", () => {
  const records = parseCsv('text,category\r\n"hey, ""you""",greet\r\nplain,bill\r\n');
  assert.deepEqual(
    records.map((r) => r.fields),
    [["text", "category"], ['hey, "you"', "greet"], ["plain", "bill"]]
  );
});

test("quoted fields may span lines", () => {
  const records = parseCsv('text,category\n"line one\nline two",greet\n');
  assert.equal(records[1].fields[0], "line one\nline two");
});

test("loadDataset preserves file order and indexes rows", () => {
  const path = tempFile("d.csv", "text,category\nb,two\na,one\n");
  const dataset = loadDataset(path);
  assert.deepEqual(
    dataset.rows.map((r) => [r.index, r.text, r.category]),
    [
      [0, "b", "two"],
      [1, "a", "one"],
    ]
  );
});

test("wrong header is rejected", () => {
  const path = tempFile("h.csv", "utterance,intent\nhi,greet\n");
  assert.throws(() => loadDataset(path), /text,category/);
});

test("field count errors name the line", () => {
  const path = tempFile("m.csv", "text,category\nhi,greet\nonly-one\n");
  assert.throws(() => loadDataset(path), /:3:/);
});

test("empty text is rejected", () => {
  const path = tempFile("e.csv", "text,category\n,greet\n");
  assert.throws(() => loadDataset(path), /empty utterance/);
});

test("jsonl rows load with categories", () => {
  const path = tempFile(
    "d.jsonl",
    '{"text": "hi", "category": "greet"}\n{"text": "pay", "category": "bill"}\n'
  );
  const dataset = loadDataset(path, "jsonl");
  assert.deepEqual(
    dataset.rows.map((r) => r.category),
    ["greet", "bill"]
  );
});

test("jsonl errors name the line", () => {
  const path = tempFile("bad.jsonl", '{"text": "hi", "category": "greet"}\n{oops\n');
  assert.throws(() => loadDataset(path, "jsonl"), /:2:/);
});
