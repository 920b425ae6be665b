/** Typed client for the detection service HTTP API. */

export interface QuarantineSummary {
  id: string;
  received_at: string;
  probs: number[];
  status: "pending" | "labeled" | "dismissed";
  class?: string;
}

export interface QuarantineDetail extends QuarantineSummary {
  features: number[];
}

export interface LabelResponse extends QuarantineDetail {
  new_class: boolean;
}

export interface ModelInfo {
  classes: string[];
  layer_dims: number[];
  threshold: number;
  format_version: number;
  provenance: {
    dataset_digest: string;
    seed: number;
    epochs: number;
    created_at: string;
  };
  feature_names: string[] | null;
  scaler: { mins: number[]; maxs: number[] };
}

export interface RetrainJob {
  job_id: string;
  state: "running" | "done" | "failed";
  new_classes: string[];
  started_at: string;
  finished_at: string | null;
  error?: string;
}

export interface ClassMetrics {
  class: string;
  support: number;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  paper_fpr: number | null;
  standard_fpr: number | null;
}

export interface MetricsReport {
  accuracy: number | null;
  classes: ClassMetrics[];
  confusion: { class_names: string[]; counts: number[][] };
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${resp.status}`;
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) throw new ApiError(resp.status, await parseDetail(resp));
    return (await resp.json()) as T;
  }

  model(): Promise<ModelInfo> {
    return this.request("GET", "/v1/model");
  }

  /** null when the service has no evaluation yet (404). */
  async metrics(): Promise<MetricsReport | null> {
    try {
      return await this.request<MetricsReport>("GET", "/v1/metrics");
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async quarantine(status?: string): Promise<QuarantineSummary[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    const body = await this.request<{ items: QuarantineSummary[] }>(
      "GET",
      `/v1/quarantine${query}`,
    );
    return body.items;
  }

  item(id: string): Promise<QuarantineDetail> {
    return this.request("GET", `/v1/quarantine/${encodeURIComponent(id)}`);
  }

  label(id: string, className: string): Promise<LabelResponse> {
    // the contract body is exactly {"class": name}
    return this.request("POST", `/v1/quarantine/${encodeURIComponent(id)}/label`, {
      class: className,
    });
  }

  dismiss(id: string): Promise<QuarantineDetail> {
    return this.request("POST", `/v1/quarantine/${encodeURIComponent(id)}/dismiss`);
  }

  startRetrain(opts: { epochs?: number; seed?: number } = {}): Promise<{ job_id: string }> {
    return this.request("POST", "/v1/retrain", opts);
  }

  job(jobId: string): Promise<RetrainJob> {
    return this.request("GET", `/v1/retrain/${encodeURIComponent(jobId)}`);
  }
}
