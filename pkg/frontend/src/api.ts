// Typed client for the recommendation service JSON API.

export interface ResolvedId {
  id: string;
  known: boolean;
}

export interface ResolveResponse {
  recognized: ResolvedId[];
  unrecognized: string[];
}

export interface RecommendRequest {
  ids: string[];
  measure: string | null;
  aggregation: string;
  n: number;
}

export interface RecommendItem {
  rank: number;
  id: string;
  score: number;
  title: string | null;
}

export interface RecommendResponse {
  measure: string;
  aggregation: string;
  n: number;
  items: RecommendItem[];
  unknown_ids: string[];
}

export interface MeasuresResponse {
  measures: string[];
  default: string;
  aggregations: string[];
  default_aggregation: string;
  max_n: number;
  default_n: number;
}

export interface RandomResponse {
  id: string;
}

// Narrow fetch signature so tests can substitute a recorded stub.
export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class HttpError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "HttpError";
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof Error && err.name === "AbortError";
}

export function describeError(err: unknown): string {
  if (err instanceof HttpError) return `request failed (${err.status}): ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

export class ApiClient {
  constructor(private readonly fetchFn: FetchLike, private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body: unknown = await resp.json();
        if (body && typeof body === "object" && "detail" in body) {
          detail = String((body as { detail: unknown }).detail);
        }
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new HttpError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }

  resolve(text: string, signal?: AbortSignal): Promise<ResolveResponse> {
    return this.post<ResolveResponse>("/api/resolve", { text }, signal);
  }

  recommend(req: RecommendRequest, signal?: AbortSignal): Promise<RecommendResponse> {
    return this.post<RecommendResponse>("/api/recommend", req, signal);
  }

  measures(signal?: AbortSignal): Promise<MeasuresResponse> {
    return this.request<MeasuresResponse>("/api/measures", { signal });
  }

  randomPaper(signal?: AbortSignal): Promise<RandomResponse> {
    return this.request<RandomResponse>("/api/random", { signal });
  }
}
