import { z } from "zod";

export const EmbedRequestSchema = z.object({
  model: z.string().min(1),
  texts: z.array(z.string().min(1)).min(1),
});

export type EmbedRequest = z.infer<typeof EmbedRequestSchema>;

export interface EmbedResponse {
  model: string;
  dim: number;
  embeddings: number[][];
}

export interface HealthResponse {
  status: "ok" | "loading";
  models: string[];
}

export interface ErrorResponse {
  error: string;
}
