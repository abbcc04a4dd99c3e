import express, { type Express, type NextFunction, type Request, type Response } from "express";

import { loadModel, ModelRegistry, UnknownTextError } from "./models.js";
import { EmbedRequestSchema, type EmbedResponse, type HealthResponse } from "./protocol.js";

export interface ServiceConfig {
  modelIds: string[];
  modelDir?: string;
  maxBatch: number;
  maxTextLength: number;
}

export interface Service {
  app: Express;
  /** resolves when every configured model is loaded */
  ready: Promise<void>;
  registry: ModelRegistry;
}

export function createService(config: ServiceConfig): Service {
  if (config.modelIds.length === 0) {
    throw new Error("at least one model must be configured");
  }
  if (config.maxBatch < 1) {
    throw new Error("max batch size must be at least 1");
  }

  const registry = new ModelRegistry();
  let loading = true;
  const ready = (async () => {
    for (const id of config.modelIds) {
      registry.add(await loadModel(id, config.modelDir));
    }
    loading = false;
  })();

  const app = express();
  app.use(express.json({ limit: "5mb" }));

  app.get("/health", (_req: Request, res: Response) => {
    if (loading) {
      res.status(503).json({ status: "loading", models: [] } satisfies HealthResponse);
      return;
    }
    res.json({ status: "ok", models: registry.ids() } satisfies HealthResponse);
  });

  app.post("/embed", (req: Request, res: Response, next: NextFunction) => {
    if (loading) {
      res.status(503).json({ error: "models are still loading" });
      return;
    }
    const parsed = EmbedRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: `bad request: ${parsed.error.issues[0]?.message}` });
      return;
    }
    const { model: modelId, texts } = parsed.data;
    if (texts.length > config.maxBatch) {
      res.status(413).json({
        error: `batch of ${texts.length} exceeds the limit of ${config.maxBatch}`,
      });
      return;
    }
    const tooLong = texts.find((t) => t.length > config.maxTextLength);
    if (tooLong !== undefined) {
      res.status(400).json({
        error: `text exceeds the length limit of ${config.maxTextLength}`,
      });
      return;
    }
    const model = registry.get(modelId);
    if (!model) {
      res.status(400).json({
        error: `unknown model ${JSON.stringify(modelId)}; loaded: ${registry.ids().join(", ")}`,
      });
      return;
    }
    model
      .embed(texts)
      .then((embeddings) => {
        res.json({ model: modelId, dim: model.dim, embeddings } satisfies EmbedResponse);
      })
      .catch(next);
  });

  // malformed JSON from express.json() and model-level failures
  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: `malformed JSON: ${err.message}` });
      return;
    }
    if (err instanceof UnknownTextError) {
      res.status(400).json({ error: err.message });
      return;
    }
    res.status(500).json({ error: err.message });
  });

  return { app, ready, registry };
}
