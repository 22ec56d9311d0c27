/**
 * Dataset -> embedding store export: encode every row in order, in
 * fixed-size batches (15 by default, matching the published throughput
 * measurement condition), and emit a store bound to the dataset digest.
 */

import { Dataset, loadDataset } from "./dataset.js";
import { Encoder } from "./encoders.js";
import { Store, writeStore } from "./store.js";

export interface ExportOptions {
  batchSize?: number;
  onBatch?: (done: number, total: number) => void;
}

export async function exportDataset(
  dataset: Dataset,
  encoder: Encoder,
  options: ExportOptions = {}
): Promise<Store> {
  const batchSize = options.batchSize ?? 15;
  if (batchSize < 1) throw new Error(`batch size must be >= 1, got ${batchSize}`);
  const texts = dataset.rows.map((row) => row.text);
  const vectors = new Float32Array(texts.length * encoder.dim);

  for (let start = 0; start < texts.length; start += batchSize) {
    const batch = texts.slice(start, start + batchSize);
    let encoded: Float32Array[];
    try {
      encoded = await encoder.encodeBatch(batch);
    } catch (err) {
      throw new Error(`encoding failed at row ${start}: ${(err as Error).message}`);
    }
    if (encoded.length !== batch.length) {
      throw new Error(
        `encoder returned ${encoded.length} vectors for a batch of ${batch.length} at row ${start}`
      );
    }
    encoded.forEach((vector, i) => {
      const row = start + i;
      if (vector.length !== encoder.dim) {
        throw new Error(
          `encoder returned a ${vector.length}-dim vector at row ${row}, expected ${encoder.dim}`
        );
      }
      for (let j = 0; j < vector.length; j++) {
        if (!Number.isFinite(vector[j])) {
          throw new Error(`non-finite embedding component at row ${row}`);
        }
      }
      vectors.set(vector, row * encoder.dim);
    });
    options.onBatch?.(Math.min(start + batchSize, texts.length), texts.length);
  }

  return {
    datasetDigest: dataset.digest,
    dim: encoder.dim,
    count: texts.length,
    encoderTag: encoder.name,
    vectors,
  };
}

export async function exportToFile(
  datasetPath: string,
  format: "csv" | "jsonl",
  encoder: Encoder,
  outPath: string,
  options: ExportOptions = {}
): Promise<Store> {
  const dataset = loadDataset(datasetPath, format);
  const store = await exportDataset(dataset, encoder, options);
  writeStore(store, outPath);
  return store;
}
