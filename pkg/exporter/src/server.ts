/**
 * HTTP encoding service.
 *
 *   POST /encode {"texts": [...]} -> {"dim": n, "embeddings": [[...], ...]}
 *   GET  /health                  -> {"status": "ok", "encoder": name, "dim": n}
 *
 * 400 on malformed requests, 413 when a batch exceeds the configured
 * maximum, 500 with a message when encoding itself fails. Requests are
 * handled serially per process; scale horizontally with more processes.
 */

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";

import { Encoder } from "./encoders.js";

export interface ServerOptions {
  maxBatch?: number;
}

function sendJson(res: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

async function readBody(req: IncomingMessage): Promise<string> {
  const chunks: Buffer[] = [];
  for await (const chunk of req) chunks.push(chunk as Buffer);
  return Buffer.concat(chunks).toString("utf-8");
}

export function createEncodingServer(encoder: Encoder, options: ServerOptions = {}): Server {
  const maxBatch = options.maxBatch ?? 256;

  return createServer(async (req, res) => {
    if (req.method === "GET" && req.url === "/health") {
      sendJson(res, 200, { status: "ok", encoder: encoder.name, dim: encoder.dim });
      return;
    }
    if (req.method !== "POST" || req.url !== "/encode") {
      sendJson(res, 404, { error: "not found" });
      return;
    }

    let texts: unknown;
    try {
      const parsed = JSON.parse(await readBody(req)) as { texts?: unknown };
      texts = parsed.texts;
    } catch {
      sendJson(res, 400, { error: "body must be JSON" });
      return;
    }
    if (!Array.isArray(texts) || texts.some((t) => typeof t !== "string")) {
      sendJson(res, 400, { error: "body must be {\"texts\": [string, ...]}" });
      return;
    }
    if (texts.length > maxBatch) {
      sendJson(res, 413, { error: `batch of ${texts.length} exceeds maximum ${maxBatch}` });
      return;
    }

    try {
      const vectors = await encoder.encodeBatch(texts as string[]);
      sendJson(res, 200, {
        dim: encoder.dim,
        embeddings: vectors.map((v) => Array.from(v)),
      });
    } catch (err) {
      sendJson(res, 500, { error: (err as Error).message });
    }
  });
}
