/**
 * Typed client for the gateway JSON API under /api.
 *
 * Every interface here mirrors a gateway response shape field for field;
 * the UI renders these values as received and never derives its own.
 */

export interface WorkflowRefObj {
  id: string;
  version: number;
  source_base: string;
}

export interface WorkflowCard {
  ref: WorkflowRefObj;
  title: string;
  uploader: string;
  description: string;
  rating: number;
  diagram_uri: string;
  definition_uri: string;
  license: string;
  format: string;
  favourite: boolean;
}

export interface SearchPage {
  total: number;
  page: number;
  per_page: number;
  items: WorkflowCard[];
}

export interface InputPortSpec {
  name: string;
  depth: number;
  description: string;
  required: boolean;
}

export interface WorkflowInterface {
  inputs: InputPortSpec[];
  outputs: { name: string; depth: number }[];
}

export interface RunObj {
  run_id: string;
  state: string;
  created_at: string | null;
  started_at: string | null;
  finished_at: string | null;
  expiry_at: string;
  workflow: WorkflowRefObj | null;
}

export interface ManifestEntry {
  port: string;
  depth: number;
  media_type: string;
  byte_size: number;
  sha256: string;
  remote_path: string;
}

export interface ManifestObj {
  run_id: string;
  entries: ManifestEntry[];
}

export interface StoredBindingObj {
  port: string;
  variant: string;
  value?: string;
  name?: string;
  sha256?: string;
  byte_size?: number;
}

export interface HistoryRecord {
  schema: number;
  server_base: string;
  descriptor: RunObj;
  bindings: StoredBindingObj[];
  manifest: ManifestObj | null;
  output_paths: Record<string, string>;
  note: string;
}

export interface GatewayConfig {
  repo_base: string;
  exec_base: string;
  poll_ms: number;
}

export interface LaunchRequest {
  ref?: string;
  definition?: string;
  format?: string;
  bindings?: Record<string, string | string[]>;
  reuse?: boolean;
}

export const TERMINAL_STATES = new Set([
  "Finished",
  "Failed",
  "Cancelled",
  "Expired",
]);

/** A non-2xx gateway answer, with the parsed error body when there is one. */
export class ApiError extends Error {
  status: number;
  body: Record<string, unknown>;

  constructor(status: number, body: Record<string, unknown>) {
    const text = typeof body.error === "string" ? body.error : `HTTP ${status}`;
    super(text);
    this.status = status;
    this.body = body;
  }

  /** Ports the gateway reported missing on a 409, if any. */
  get missing(): string[] {
    const m = this.body.missing;
    return Array.isArray(m) ? m.map(String) : [];
  }

  /** Final descriptor attached to a 410 "run expired" answer, if any. */
  get run(): RunObj | null {
    return (this.body.run as RunObj | undefined) ?? null;
  }
}

export class Api {
  base: string;
  private fetchFn: typeof fetch;

  constructor(base = "", fetchFn: typeof fetch = (...a) => fetch(...a)) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { Accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    const text = await res.text();
    let obj: unknown = {};
    try {
      obj = text ? JSON.parse(text) : {};
    } catch {
      obj = { error: text };
    }
    if (!res.ok) {
      throw new ApiError(res.status, obj as Record<string, unknown>);
    }
    return obj as T;
  }

  health(): Promise<{ ok: boolean }> {
    return this.call("GET", "/api/health");
  }

  config(): Promise<GatewayConfig> {
    return this.call("GET", "/api/config");
  }

  search(query: string, page = 1, perPage = 20): Promise<SearchPage> {
    const q = new URLSearchParams({
      query,
      page: String(page),
      per_page: String(perPage),
    });
    return this.call("GET", `/api/workflows?${q}`);
  }

  workflow(id: string, version: number): Promise<WorkflowCard> {
    return this.call("GET", `/api/workflows/${encodeURIComponent(id)}/${version}`);
  }

  workflowInterface(id: string, version: number): Promise<WorkflowInterface> {
    return this.call(
      "GET",
      `/api/workflows/${encodeURIComponent(id)}/${version}/interface`,
    );
  }

  diagramUrl(id: string, version: number): string {
    return `${this.base}/api/workflows/${encodeURIComponent(id)}/${version}/diagram`;
  }

  addFavourite(id: string, version: number): Promise<{ favourite: unknown }> {
    return this.call("POST", "/api/favourites", { id, version });
  }

  removeFavourite(id: string, version: number): Promise<{ removed: boolean }> {
    return this.call(
      "DELETE",
      `/api/favourites/${encodeURIComponent(id)}/${version}`,
    );
  }

  history(): Promise<{ runs: HistoryRecord[] }> {
    return this.call("GET", "/api/history");
  }

  launch(request: LaunchRequest): Promise<{ run: RunObj }> {
    return this.call("POST", "/api/runs", request);
  }

  run(runId: string): Promise<{ run: RunObj }> {
    return this.call("GET", `/api/runs/${encodeURIComponent(runId)}`);
  }

  outputs(runId: string): Promise<ManifestObj> {
    return this.call("GET", `/api/runs/${encodeURIComponent(runId)}/outputs`);
  }

  outputUrl(runId: string, port: string): string {
    return `${this.base}/api/runs/${encodeURIComponent(runId)}/outputs/${encodeURIComponent(port)}`;
  }

  async outputText(runId: string, port: string): Promise<string> {
    const res = await this.fetchFn(this.outputUrl(runId, port));
    if (!res.ok) {
      throw new ApiError(res.status, { error: `output fetch failed: ${res.status}` });
    }
    return res.text();
  }
}
