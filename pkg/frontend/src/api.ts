/**
 * Thin typed client over the /v1 HTTP API.
 *
 * Every catalog, validation, aggregation, and run value shown by the UI
 * comes from these calls; nothing is recomputed on the client.
 */

import type {
  CatalogFilters,
  CourseAggregate,
  ModuleMeta,
  RunRecord,
  TrackFinding,
  WorkflowSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details?: unknown,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.text();
    let parsed: unknown = null;
    if (body) {
      try {
        parsed = JSON.parse(body);
      } catch {
        parsed = null;
      }
    }
    if (!response.ok) {
      const error = (parsed ?? {}) as { code?: string; message?: string; details?: unknown };
      throw new ApiError(
        response.status,
        error.code ?? "HTTP_ERROR",
        error.message ?? `request failed with status ${response.status}`,
        error.details,
      );
    }
    return parsed as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  searchModules(filters: CatalogFilters = {}): Promise<ModuleMeta[]> {
    const params = new URLSearchParams();
    if (filters.keyword) params.set("keyword", filters.keyword);
    if (filters.category_prefix) params.set("category_prefix", filters.category_prefix);
    if (filters.scale) params.set("scale", filters.scale);
    if (filters.language) params.set("language", filters.language);
    if (filters.max_complexity !== undefined) {
      params.set("max_complexity", String(filters.max_complexity));
    }
    const query = params.toString();
    return this.request<ModuleMeta[]>(`/v1/modules/search${query ? `?${query}` : ""}`);
  }

  checkTrack(entries: string[]): Promise<{ findings: TrackFinding[] }> {
    return this.post("/v1/tracks/check", {
      track: { id: "composer", title: "composer track", entries },
    });
  }

  aggregateTrack(entries: string[]): Promise<CourseAggregate> {
    return this.post("/v1/tracks/aggregate", {
      track: { id: "composer", title: "composer track", entries },
    });
  }

  listWorkflows(): Promise<WorkflowSummary[]> {
    return this.request<WorkflowSummary[]>("/v1/workflows");
  }

  submitRun(workflowId: string, seed: number): Promise<{ run_id: string }> {
    return this.post("/v1/runs", { workflow_id: workflowId, seed });
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request<RunRecord>(`/v1/runs/${runId}`);
  }

  cancelRun(runId: string): Promise<{ run_id: string; status: string }> {
    return this.post(`/v1/runs/${runId}/cancel`, {});
  }

  artifactUrl(runId: string, node: string, port: string): string {
    return `${this.base}/v1/runs/${runId}/artifacts/${node}/${port}`;
  }
}
