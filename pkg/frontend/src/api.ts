/** Typed client for the tabcf what-if HTTP API. */

export interface ColumnSchema {
  name: string;
  kind: "categorical" | "numeric";
  values: string[];
  bin_edges: number[];
  bin_representatives: number[];
}

export interface Defaults {
  method: string;
  methods: string[];
  B: number;
  tau: number;
  tau_max: number;
  eta: number;
  lambdas: Record<string, number>;
  strategy: string;
  strategies: string[];
  add_initial_noise: boolean;
  seed: number;
}

export interface Schema {
  columns: ColumnSchema[];
  classes: string[];
  schema_digest: string;
  defaults: Defaults;
}

export interface Prediction {
  probabilities: Record<string, number>;
  predicted: string;
}

export interface Report {
  method: string;
  validity: number;
  proximity: number;
  raw_mean_distance: number;
  diversity: number;
  plausibility_recurrent: number;
  plausibility_transformer: number;
  valid_only: Record<string, number>;
}

export interface CounterfactualRequest {
  row: string[];
  desired_label: string;
  method?: string;
  seed?: number;
  B?: number;
  tau?: number;
  eta?: number;
  lambdas?: Record<string, number>;
  strategy?: string;
  add_initial_noise?: boolean;
}

export interface CounterfactualResponse {
  method: string;
  seed: number;
  rows: string[][];
  per_row: Array<Record<string, unknown> & { predicted_label: string }>;
  report: Report;
  loss_trace: Array<Record<string, number>>;
}

export interface RowProblem {
  column: string | null;
  error: string;
}

/** Raised for 4xx responses; carries the server's per-column diagnostics. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly field: string | null,
    public readonly problems: RowProblem[],
  ) {
    super(`api error ${status}: ${problems.map((p) => p.error).join("; ")}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  const body = await res.json();
  if (!res.ok) {
    const detail = (body as { detail?: { field?: string; problems?: RowProblem[] } }).detail ?? {};
    throw new ApiError(res.status, detail.field ?? null, detail.problems ?? []);
  }
  return body as T;
}

export class TabcfClient {
  constructor(private readonly base: string) {}

  getSchema(): Promise<Schema> {
    return request(`${this.base}/api/schema`);
  }

  getModels(): Promise<{ schema_digest: string; models: Array<Record<string, unknown>> }> {
    return request(`${this.base}/api/models`);
  }

  predict(row: string[] | Record<string, string>): Promise<Prediction> {
    return request(`${this.base}/api/predict`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ row }),
    });
  }

  counterfactuals(req: CounterfactualRequest): Promise<CounterfactualResponse> {
    return request(`${this.base}/api/counterfactuals`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  evaluate(rows: string[][], original: string[], desiredLabel: string): Promise<{ seed: null; report: Report }> {
    return request(`${this.base}/api/evaluate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rows, original_row: original, desired_label: desiredLabel }),
    });
  }
}
