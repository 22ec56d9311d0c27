/**
 * Sentence encoders behind one interface.
 *
 * - `use`: the multilingual large Universal Sentence Encoder via
 *   tfjs, loaded lazily; needs the optional tfjs packages installed and
 *   network (or cached) model weights.
 * - `convert` / `bert-fixed`: not bundled. The original ConveRT release
 *   was withdrawn and BERT feature extraction is out of scope for this
 *   process, so both must be served behind an HTTP locator; exported
 *   stores then carry the name as their tag.
 * - `hash`: a deterministic text-hash featurizer with no model at all.
 *   It carries no semantics and exists so pipelines, tests and the
 *   store format can be exercised offline; results exported with it
 *   are never comparable to published accuracy numbers.
 * - any `http(s)://` locator: proxy to a running /encode service.
 */

import { createHash } from "node:crypto";

export interface EncoderSpec {
  name: string; // use | convert | bert-fixed | hash | ...
  locator: string; // "builtin", "hash:<dim>", tfhub URL, or http(s) endpoint
}

export interface Encoder {
  readonly name: string;
  /** Output dimensionality, discovered at load time. */
  readonly dim: number;
  encodeBatch(texts: string[]): Promise<Float32Array[]>;
}

export const USE_TFHUB_URL =
  "https://tfhub.dev/google/universal-sentence-encoder-multilingual-large/1";

/** Deterministic stand-in encoder: SHA-256 expansion of the text into [-1, 1). */
export class HashEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;

  constructor(dim = 64, name = "hash") {
    if (dim < 1) throw new Error(`encoder dim must be >= 1, got ${dim}`);
    this.dim = dim;
    this.name = name;
  }

  private encodeOne(text: string): Float32Array {
    const out = new Float32Array(this.dim);
    const blocks = Math.ceil(this.dim / 8);
    for (let block = 0; block < blocks; block++) {
      const digest = createHash("sha256").update(`${block}:`).update(text, "utf-8").digest();
      for (let j = 0; j < 8; j++) {
        const idx = block * 8 + j;
        if (idx >= this.dim) break;
        // 4 LE bytes -> uint32 -> [-1, 1)
        out[idx] = digest.readUInt32LE(j * 4) / 2 ** 31 - 1.0;
      }
    }
    return out;
  }

  async encodeBatch(texts: string[]): Promise<Float32Array[]> {
    return texts.map((t) => this.encodeOne(t));
  }
}

/** Proxy to a running /encode HTTP service (e.g. a GPU box hosting ConveRT). */
export class RemoteEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;
  private readonly endpoint: string;

  private constructor(name: string, endpoint: string, dim: number) {
    this.name = name;
    this.endpoint = endpoint;
    this.dim = dim;
  }

  static async connect(name: string, endpoint: string): Promise<RemoteEncoder> {
    const base = endpoint.replace(/\/+$/, "");
    const response = await fetch(`${base}/health`);
    if (!response.ok) {
      throw new Error(`encoding service at ${base} is unhealthy (${response.status})`);
    }
    const health = (await response.json()) as { dim?: number };
    if (typeof health.dim !== "number" || health.dim < 1) {
      throw new Error(`encoding service at ${base} did not report its dimension`);
    }
    return new RemoteEncoder(name, base, health.dim);
  }

  async encodeBatch(texts: string[]): Promise<Float32Array[]> {
    const response = await fetch(`${this.endpoint}/encode`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ texts }),
    });
    if (!response.ok) {
      throw new Error(`encode request failed with status ${response.status}`);
    }
    const body = (await response.json()) as { embeddings: number[][] };
    return body.embeddings.map((vector) => Float32Array.from(vector));
  }
}

/** Universal Sentence Encoder via tfjs; deps are optional, loaded lazily. */
class UseEncoder implements Encoder {
  readonly name = "use";
  readonly dim: number;
  private readonly model: { embed(texts: string[]): Promise<{ arraySync(): number[][] }> };

  private constructor(model: UseEncoder["model"], dim: number) {
    this.model = model;
    this.dim = dim;
  }

  static async load(): Promise<UseEncoder> {
    // optional deps: specifiers kept as plain strings so the build does
    // not require the packages to be installed
    const tfjsModule: string = "@tensorflow/tfjs";
    const useModule: string = "@tensorflow-models/universal-sentence-encoder";
    let use;
    try {
      await import(tfjsModule);
      use = await import(useModule);
    } catch (err) {
      throw new Error(
        "the 'use' encoder needs @tensorflow/tfjs and " +
          "@tensorflow-models/universal-sentence-encoder installed " +
          `(npm install them, or point --locator at an /encode service): ${(err as Error).message}`
      );
    }
    const model = await use.load();
    const probe = await model.embed(["dimension probe"]);
    const dim = probe.arraySync()[0].length;
    return new UseEncoder(model, dim);
  }

  async encodeBatch(texts: string[]): Promise<Float32Array[]> {
    const embeddings = await this.model.embed(texts);
    return embeddings.arraySync().map((vector: number[]) => Float32Array.from(vector));
  }
}

export async function resolveEncoder(spec: EncoderSpec): Promise<Encoder> {
  if (/^https?:\/\//.test(spec.locator)) {
    return RemoteEncoder.connect(spec.name, spec.locator);
  }
  if (spec.name === "hash" || spec.locator.startsWith("hash")) {
    const match = /^hash(?::(\d+))?$/.exec(spec.locator || "hash");
    if (!match) throw new Error(`bad hash locator '${spec.locator}', expected hash:<dim>`);
    return new HashEncoder(match[1] ? parseInt(match[1], 10) : 64);
  }
  if (spec.name === "use") {
    return UseEncoder.load();
  }
  if (spec.name === "convert" || spec.name === "bert-fixed") {
    throw new Error(
      `encoder '${spec.name}' is not bundled (the original release is not ` +
        "redistributable here); host it behind an /encode service and pass " +
        "--locator http://..."
    );
  }
  throw new Error(`unknown encoder '${spec.name}'`);
}
