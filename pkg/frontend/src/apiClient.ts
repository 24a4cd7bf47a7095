// Thin typed client for the review HTTP API.
//
// Error contract: every server error body is {"error": message}. Anything
// that goes wrong surfaces as ApiError; `retriable` marks failures where the
// request may simply be sent again (server unreachable, gateway hiccups), as
// opposed to rejections that need a different request.

import type {
  ApproveResponse,
  GraphDelta,
  NodeLinkGraph,
  PutGraphPayload,
} from "./types";

export class ApiError extends Error {
  /** HTTP status, or 0 when the server could not be reached at all. */
  readonly status: number;
  readonly retriable: boolean;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
    this.retriable = status === 0 || status === 502 || status === 503 || status === 504;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function readError(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as Record<string, unknown>;
    if (typeof body?.error === "string" && body.error) return body.error;
  } catch {
    // fall through to the generic message
  }
  return `server returned HTTP ${response.status}`;
}

export class ReviewApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new ApiError(0, `review server unreachable: ${String(cause)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await readError(response));
    }
    try {
      return (await response.json()) as T;
    } catch {
      throw new ApiError(response.status, "server response is not valid JSON");
    }
  }

  /** GET /api/graph. Shape validation happens in the graph store. */
  fetchGraph(): Promise<NodeLinkGraph> {
    return this.request<NodeLinkGraph>("/api/graph");
  }

  /** PUT /api/graph with the full edited graph; returns the server's delta. */
  async putGraph(payload: PutGraphPayload): Promise<GraphDelta> {
    const body = await this.request<{ ok: true; delta: GraphDelta }>("/api/graph", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return body.delta;
  }

  /** POST /api/approve. The server persists the graph and begins shutdown. */
  approve(): Promise<ApproveResponse> {
    return this.request<ApproveResponse>("/api/approve", { method: "POST" });
  }
}
