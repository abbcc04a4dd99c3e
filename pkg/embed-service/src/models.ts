import { readFile } from "node:fs/promises";
import { existsSync } from "node:fs";
import path from "node:path";

/** One loaded embedding model. Rows returned by embed() are unit-normalized
 *  float64 vectors aligned with the input texts. */
export interface EmbeddingModel {
  readonly id: string;
  readonly dim: number;
  embed(texts: string[]): Promise<number[][]>;
}

export function l2Normalize(vec: number[]): number[] {
  let sq = 0;
  for (const x of vec) sq += x * x;
  const norm = Math.sqrt(sq);
  if (norm === 0) throw new Error("zero-norm vector cannot be normalized");
  return vec.map((x) => x / norm);
}

/** Deterministic model backed by an explicit text -> vector table
 *  (a `<id>.table.json` file in the model directory). Used for tests and
 *  for serving pre-computed vocabularies. */
export class TableModel implements EmbeddingModel {
  readonly id: string;
  readonly dim: number;
  private table: Map<string, number[]>;

  constructor(id: string, raw: Record<string, number[]>) {
    this.id = id;
    this.table = new Map();
    let dim: number | null = null;
    for (const [text, vec] of Object.entries(raw)) {
      if (dim === null) dim = vec.length;
      if (vec.length !== dim) {
        throw new Error(`table model ${id}: mixed vector lengths`);
      }
      this.table.set(text, l2Normalize(vec));
    }
    if (dim === null) throw new Error(`table model ${id}: empty table`);
    this.dim = dim;
  }

  async embed(texts: string[]): Promise<number[][]> {
    return texts.map((t) => {
      const vec = this.table.get(t);
      if (!vec) throw new UnknownTextError(this.id, t);
      return vec;
    });
  }
}

export class UnknownTextError extends Error {
  constructor(model: string, text: string) {
    super(`model ${model} has no entry for text: ${JSON.stringify(text)}`);
  }
}

/** Hub repositories that host ONNX weights for the ids the metric uses. */
const HUB_ALIASES: Record<string, string> = {
  "all-MiniLM-L6-v2": "Xenova/all-MiniLM-L6-v2",
  "paraphrase-TinyBERT-L6-v2": "Xenova/paraphrase-TinyBERT-L6-v2",
};

/** Transformer model executed with transformers.js; inference for one model
 *  is serialized through a promise chain so concurrent requests cannot
 *  interleave. */
export class TransformerModel implements EmbeddingModel {
  readonly id: string;
  readonly dim: number;
  private pipe: (texts: string[], opts: object) => Promise<{ dims: number[]; data: Float32Array }>;
  private queue: Promise<unknown> = Promise.resolve();

  private constructor(id: string, dim: number, pipe: TransformerModel["pipe"]) {
    this.id = id;
    this.dim = dim;
    this.pipe = pipe;
  }

  static async load(id: string, modelDir?: string): Promise<TransformerModel> {
    const { pipeline, env } = await import("@xenova/transformers");
    if (modelDir) {
      env.localModelPath = modelDir;
      env.cacheDir = modelDir;
    }
    const hubId = HUB_ALIASES[id] ?? id;
    const pipe = (await pipeline("feature-extraction", hubId)) as unknown as TransformerModel["pipe"];
    const probe = await pipe(["dimension probe"], { pooling: "mean", normalize: true });
    const dim = probe.dims[probe.dims.length - 1];
    return new TransformerModel(id, dim, pipe);
  }

  async embed(texts: string[]): Promise<number[][]> {
    const run = this.queue.then(async () => {
      const out = await this.pipe(texts, { pooling: "mean", normalize: true });
      const rows: number[][] = [];
      for (let i = 0; i < texts.length; i++) {
        const row = Array.from(out.data.slice(i * this.dim, (i + 1) * this.dim));
        rows.push(l2Normalize(row));
      }
      return rows;
    });
    this.queue = run.catch(() => undefined);
    return run;
  }
}

/** Resolve a model id: a `<id>.table.json` file in the model directory wins;
 *  anything else goes through transformers.js (local cache, then hub). */
export async function loadModel(id: string, modelDir?: string): Promise<EmbeddingModel> {
  if (modelDir) {
    const tablePath = path.join(modelDir, `${id}.table.json`);
    if (existsSync(tablePath)) {
      const raw = JSON.parse(await readFile(tablePath, "utf-8"));
      return new TableModel(id, raw);
    }
  }
  return TransformerModel.load(id, modelDir);
}

export class ModelRegistry {
  private models = new Map<string, EmbeddingModel>();

  add(model: EmbeddingModel): void {
    this.models.set(model.id, model);
  }

  get(id: string): EmbeddingModel | undefined {
    return this.models.get(id);
  }

  ids(): string[] {
    return [...this.models.keys()];
  }
}
