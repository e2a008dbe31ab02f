import type { QueryError, QueryResponse, StatsResponse } from "./types";

// Server-enforced ceiling; the console never asks for more.
export const MAX_PAGE_SIZE = 1000;

export class ApiError extends Error {
  status: number;
  diagnostics?: Record<string, string>;

  constructor(status: number, body: QueryError) {
    super(body.error || `HTTP ${status}`);
    this.status = status;
    this.diagnostics = body.diagnostics;
  }
}

export class AskgClient {
  base: string;
  sessionId: string;

  constructor(base = "", sessionId?: string) {
    this.base = base;
    this.sessionId = sessionId ?? `web-${Math.random().toString(36).slice(2, 10)}`;
  }

  // First-page requests omit page params so the server's result cache
  // applies; navigation reuses the page size the server reported.
  async query(question: string, page = 1, pageSize?: number): Promise<QueryResponse> {
    const body: Record<string, unknown> = {
      question,
      session_id: this.sessionId,
    };
    if (page > 1 || pageSize !== undefined) {
      body.page = page;
      body.page_size = Math.min(pageSize ?? MAX_PAGE_SIZE, MAX_PAGE_SIZE);
    }
    const response = await fetch(`${this.base}/api/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.json().catch(() => ({ error: `HTTP ${response.status}` })));
    }
    return response.json();
  }

  async stats(): Promise<StatsResponse> {
    const response = await fetch(`${this.base}/api/stats`);
    if (!response.ok) {
      throw new ApiError(response.status, { error: `HTTP ${response.status}` });
    }
    return response.json();
  }
}
