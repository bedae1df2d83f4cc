import type {
  Answers,
  CreateSessionRequest,
  DisplayPayload,
  ErrorBody,
  LabelOutcome,
  MetricsPayload,
  SessionCreated,
} from "./types.js";

/** Non-2xx reply carrying the service's structured error body. */
export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field: string | null;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.name = "ServiceError";
    this.status = status;
    this.code = body.code;
    this.field = body.field ?? null;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  /** Origin prefix, e.g. "http://127.0.0.1:8741". Empty for same-origin. */
  baseUrl?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: FetchLike;
}

export interface ServiceClient {
  readonly baseUrl: string;
  createSession(request: CreateSessionRequest): Promise<SessionCreated>;
  getDisplay(sessionId: string): Promise<DisplayPayload>;
  postLabels(sessionId: string, answers: Answers): Promise<LabelOutcome>;
  getMetrics(sessionId: string): Promise<MetricsPayload>;
  health(): Promise<boolean>;
}

async function parseError(status: number, response: Response): Promise<ServiceError> {
  let body: ErrorBody;
  try {
    body = (await response.json()) as ErrorBody;
  } catch {
    body = { code: "unreadable-error", message: `HTTP ${status}`, field: null };
  }
  return new ServiceError(status, body);
}

export function createClient(options: ClientOptions = {}): ServiceClient {
  const baseUrl = options.baseUrl ?? "";
  const fetchFn: FetchLike = options.fetchFn ?? ((url, init) => fetch(url, init));

  async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetchFn(baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response.status, response);
    }
    return (await response.json()) as T;
  }

  return {
    baseUrl,
    createSession(req: CreateSessionRequest): Promise<SessionCreated> {
      return request<SessionCreated>("POST", "/sessions", req);
    },
    getDisplay(sessionId: string): Promise<DisplayPayload> {
      return request<DisplayPayload>("GET", `/sessions/${sessionId}/display`);
    },
    postLabels(sessionId: string, answers: Answers): Promise<LabelOutcome> {
      return request<LabelOutcome>("POST", `/sessions/${sessionId}/labels`, { answers });
    },
    getMetrics(sessionId: string): Promise<MetricsPayload> {
      return request<MetricsPayload>("GET", `/sessions/${sessionId}/metrics`);
    },
    async health(): Promise<boolean> {
      try {
        const response = await fetchFn(baseUrl + "/healthz", { method: "GET" });
        return response.ok;
      } catch {
        return false;
      }
    },
  };
}
