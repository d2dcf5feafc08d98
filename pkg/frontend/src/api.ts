/** Typed client for the versioned HTTP API; the console's only data source. */

import type { AlterationDraft, StateSpaceInfo } from "./alteration.js";

export interface RunStatus {
  run_id: string;
  kind: string;
  status: "pending" | "running" | "done" | "failed";
  outputs: string[];
  error: string | null;
}

export interface MetricSeries {
  baseline: (number | null)[];
  altered: (number | null)[];
}

export interface CompareReport {
  replicates: number;
  seed: number;
  metrics: Record<string, MetricSeries>;
  per_player: Record<string, { baseline: number[]; altered: number[] }>;
  epps_excluded_replicates: number;
  summary: Record<string, number>;
  alteration?: unknown;
}

export interface CompareRequest {
  draws: string;
  starts: string;
  lapses: string;
  replicates: number;
  seed: number;
  alteration_id: string;
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const doc = await response.json();
    if (doc?.error) {
      code = doc.error.code ?? code;
      message = doc.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the HTTP defaults
  }
  throw new ApiError(code, message, response.status);
}

export class ApiClient {
  constructor(private baseUrl: string, private fetcher: typeof fetch = fetch) {}

  private async get<T>(path: string): Promise<T> {
    const r = await this.fetcher(`${this.baseUrl}${path}`);
    if (!r.ok) await parseError(r);
    return (await r.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const r = await this.fetcher(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) await parseError(r);
    return (await r.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.get("/health");
  }

  stateSpace(): Promise<StateSpaceInfo> {
    return this.get("/state-space");
  }

  submitAlteration(draft: AlterationDraft): Promise<{ alteration_id: string; path: string; targeted_states: number[] | null }> {
    return this.post("/alterations", draft);
  }

  startCompare(req: CompareRequest): Promise<{ run_id: string; status: string }> {
    return this.post("/compare", req);
  }

  run(runId: string): Promise<RunStatus> {
    return this.get(`/runs/${runId}`);
  }

  report(runId: string): Promise<CompareReport> {
    return this.get(`/reports/${runId}`);
  }

  draws(): Promise<{ draw_sets: { path: string; model_tag: string }[] }> {
    return this.get("/draws");
  }
}
