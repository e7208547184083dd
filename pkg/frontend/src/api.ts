import type {
  HistoryResponse,
  QueryResponse,
  SchemaResponse,
  VisualizeResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface QueryRequest {
  question: string;
  database: string;
  session_id?: string;
  model?: string;
  k_demos?: number;
  max_attempts?: number;
}

export interface VisualizeRequest {
  session_id: string;
  result_id: string;
  question: string;
}

// Thin client over the four service endpoints. The UI talks to the
// service and nothing else; there is no model-provider access here.
export class ApiClient {
  constructor(
    private readonly baseUrl = '',
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`cannot reach service: ${String(err)}`);
    }
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const body = (await res.json()) as { detail?: string };
        if (body && typeof body.detail === 'string') detail = body.detail;
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ApiError(detail, res.status);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  query(req: QueryRequest): Promise<QueryResponse> {
    return this.post<QueryResponse>('/api/query', req);
  }

  visualize(req: VisualizeRequest): Promise<VisualizeResponse> {
    return this.post<VisualizeResponse>('/api/visualize', req);
  }

  schema(database: string): Promise<SchemaResponse> {
    return this.request<SchemaResponse>(
      `/api/schema/${encodeURIComponent(database)}`,
    );
  }

  history(sessionId: string): Promise<HistoryResponse> {
    return this.request<HistoryResponse>(
      `/api/session/${encodeURIComponent(sessionId)}/history`,
    );
  }
}
