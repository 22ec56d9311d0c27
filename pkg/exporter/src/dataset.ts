/**
 * Intent dataset reading: CSV with a `text,category` header (RFC-4180
 * quoting) or JSONL with `text`/`category` keys. The SHA-256 digest of
 * the raw file bytes binds exported stores to exact dataset content.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

export interface DatasetRow {
  index: number;
  text: string;
  category: string;
}

export interface Dataset {
  rows: DatasetRow[];
  digest: Buffer; // 32 bytes
  path: string;
}

export function fileDigest(path: string): Buffer {
  return createHash("sha256").update(readFileSync(path)).digest();
}

/** RFC-4180 record parser; returns rows of fields plus each record's 1-based start line. */
export function parseCsv(content: string): { fields: string[]; line: number }[] {
  const records: { fields: string[]; line: number }[] = [];
  let fields: string[] = [];
  let field = "";
  let inQuotes = false;
  let line = 1;
  let recordLine = 1;
  let sawAny = false;

  const pushField = () => {
    fields.push(field);
    field = "";
  };
  const pushRecord = () => {
    pushField();
    records.push({ fields, line: recordLine });
    fields = [];
    sawAny = false;
  };

  for (let i = 0; i < content.length; i++) {
    const ch = content[i];
    if (inQuotes) {
      if (ch === '"') {
        if (content[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        if (ch === "\n") line++;
        field += ch;
      }
      continue;
    }
    if (ch === '"' && field === "") {
      inQuotes = true;
      sawAny = true;
    } else if (ch === ",") {
      pushField();
      sawAny = true;
    } else if (ch === "\n" || ch === "\r") {
      if (ch === "\r" && content[i + 1] === "\n") i++;
      line++;
      if (sawAny || field !== "" || fields.length > 0) pushRecord();
      recordLine = line;
    } else {
      field += ch;
      sawAny = true;
    }
  }
  if (inQuotes) {
    throw new Error(`unterminated quoted field starting near line ${recordLine}`);
  }
  if (sawAny || field !== "" || fields.length > 0) pushRecord();
  return records;
}

function rowsFromCsv(content: string, path: string): DatasetRow[] {
  const records = parseCsv(content.replace(/^﻿/, ""));
  if (records.length === 0) {
    throw new Error(`${path}: empty file, expected 'text,category' header`);
  }
  const header = records[0].fields;
  if (header.length !== 2 || header[0] !== "text" || header[1] !== "category") {
    throw new Error(`${path}:1: expected header 'text,category', got '${header.join(",")}'`);
  }
  return records.slice(1).map((record, i) => {
    if (record.fields.length !== 2) {
      throw new Error(
        `${path}:${record.line}: expected 2 fields (text,category), got ${record.fields.length}`
      );
    }
    const [text, category] = record.fields;
    if (!text) throw new Error(`${path}:${record.line}: empty utterance text`);
    if (!category) throw new Error(`${path}:${record.line}: empty category`);
    return { index: i, text, category };
  });
}

function rowsFromJsonl(content: string, path: string): DatasetRow[] {
  const rows: DatasetRow[] = [];
  const lines = content.replace(/^﻿/, "").split("\n");
  lines.forEach((lineText, lineIdx) => {
    if (!lineText.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(lineText);
    } catch (err) {
      throw new Error(`${path}:${lineIdx + 1}: invalid JSON: ${(err as Error).message}`);
    }
    const record = obj as { text?: unknown; category?: unknown };
    if (typeof record.text !== "string" || !record.text) {
      throw new Error(`${path}:${lineIdx + 1}: empty or missing text`);
    }
    if (typeof record.category !== "string" || !record.category) {
      throw new Error(`${path}:${lineIdx + 1}: empty or missing category`);
    }
    rows.push({ index: rows.length, text: record.text, category: record.category });
  });
  return rows;
}

export function loadDataset(path: string, format: "csv" | "jsonl" = "csv"): Dataset {
  const raw = readFileSync(path);
  const content = raw.toString("utf-8");
  const rows = format === "csv" ? rowsFromCsv(content, path) : rowsFromJsonl(content, path);
  if (rows.length === 0) throw new Error(`${path}: dataset has no rows`);
  return {
    rows,
    digest: createHash("sha256").update(raw).digest(),
    path,
  };
}
