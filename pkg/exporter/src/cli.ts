/**
 * Exporter CLI.
 *
 *   export --dataset data.csv --encoder hash:16 --out vectors.embs
 *   serve  --encoder hash:64 --port 8080
 */

import { loadDataset } from "./dataset.js";
import { EncoderSpec, resolveEncoder, USE_TFHUB_URL } from "./encoders.js";
import { exportDataset } from "./exporter.js";
import { createEncodingServer } from "./server.js";
import { writeStore } from "./store.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad arguments near '${key}'`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

function encoderSpec(flags: Flags): EncoderSpec {
  const raw = flags["encoder"] ?? "hash:64";
  if (/^hash(:\d+)?$/.test(raw)) {
    return { name: "hash", locator: raw };
  }
  const locator = flags["locator"] ?? (raw === "use" ? USE_TFHUB_URL : "builtin");
  return { name: raw, locator };
}

async function runExport(flags: Flags): Promise<number> {
  const datasetPath = flags["dataset"];
  const outPath = flags["out"];
  if (!datasetPath || !outPath) {
    console.error("usage: export --dataset data.csv --out vectors.embs [--encoder hash:64]");
    return 1;
  }
  const format = (flags["format"] ?? "csv") as "csv" | "jsonl";
  const batchSize = parseInt(flags["batch-size"] ?? "15", 10);
  const encoder = await resolveEncoder(encoderSpec(flags));
  const dataset = loadDataset(datasetPath, format);
  const store = await exportDataset(dataset, encoder, {
    batchSize,
    onBatch: (done, total) => {
      if (done === total || done % (batchSize * 50) === 0) {
        process.stderr.write(`encoded ${done}/${total}\r`);
      }
    },
  });
  writeStore(store, outPath);
  process.stderr.write("\n");
  console.log(
    JSON.stringify({
      out: outPath,
      encoder: store.encoderTag,
      dim: store.dim,
      count: store.count,
      dataset_digest: store.datasetDigest.toString("hex"),
    })
  );
  return 0;
}

async function runServe(flags: Flags): Promise<number> {
  const port = parseInt(flags["port"] ?? "8080", 10);
  const maxBatch = parseInt(flags["max-batch"] ?? "256", 10);
  const encoder = await resolveEncoder(encoderSpec(flags));
  const server = createEncodingServer(encoder, { maxBatch });
  await new Promise<void>((resolve) => server.listen(port, resolve));
  console.log(
    JSON.stringify({ listening: port, encoder: encoder.name, dim: encoder.dim, maxBatch })
  );
  await new Promise(() => undefined); // run until killed
  return 0;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    if (command === "export") return await runExport(flags);
    if (command === "serve") return await runServe(flags);
    console.error("usage: cli.js <export|serve> [flags]");
    return 1;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => {
  if (code !== 0) process.exitCode = code;
});
