import { vi } from "vitest";
import type { QueryResponse, StatsResponse } from "../src/types";

export function queryResponse(overrides: Partial<QueryResponse> = {}): QueryResponse {
  return {
    cypher:
      "MATCH (a:Aircraft)-[:INVOLVED_IN]->(x:Accident)-[:OCCURRED_AT]->(p:Airport) " +
      "WHERE a.make = 'Boeing' AND p.icao = 'KLAX' RETURN x " +
      "ORDER BY x.event_date DESC LIMIT 2",
    source: "fallback",
    columns: ["x"],
    rows: [
      [{ id: 11, labels: ["Accident"], properties: { event_id: "EVT000001" } }],
      [{ id: 22, labels: ["Accident"], properties: { event_id: "EVT000002" } }],
    ],
    page: { number: 1, size: 25, has_more: false },
    provenance: [[11], [22]],
    answer: {
      text: "Matching records: 'EVT000001', 'EVT000002'.",
      provenance: [11, 22],
      citations: [
        { value: "EVT000001", row: 0, column: 0 },
        { value: "EVT000002", row: 1, column: 0 },
      ],
      verified: true,
      violations: [],
    },
    subgraph: {
      nodes: [
        { id: 11, labels: ["Accident"], properties: { event_id: "EVT000001" } },
        { id: 22, labels: ["Accident"], properties: { event_id: "EVT000002" } },
      ],
      relationships: [],
    },
    warnings: [],
    cache: { tier: "miss" },
    elapsed_ms: 4.2,
    ...overrides,
  };
}

export function statsResponse(overrides: Partial<StatsResponse> = {}): StatsResponse {
  return {
    nodes: { Accident: 1000, Aircraft: 330, Airport: 12 },
    relationships: { INVOLVED_IN: 1000, OCCURRED_AT: 884 },
    cache: { hits_exact: 3, hits_semantic: 1, misses: 9 },
    query_log: [
      {
        timestamp: 1700000000,
        session_id: "web-1",
        question: "Find Boeing 737 accidents",
        query: "MATCH ...",
        cache: "miss",
        rows: 17,
        elapsed_ms: 5.5,
        verified: true,
        warnings: [],
      },
    ],
    ...overrides,
  };
}

export interface FetchStub {
  calls: { url: string; body?: unknown }[];
  respondQuery: (body: unknown, status?: number) => void;
  respondStats: (body: unknown, status?: number) => void;
  failAll: () => void;
}

export function stubFetch(): FetchStub {
  let queryBody: unknown = queryResponse();
  let queryStatus = 200;
  let statsBody: unknown = statsResponse();
  let statsStatus = 200;
  let fail = false;
  const calls: { url: string; body?: unknown }[] = [];

  vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
    const parsed = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ url, body: parsed });
    if (fail) throw new TypeError("network down");
    if (url.includes("/api/query")) {
      return new Response(JSON.stringify(queryBody), { status: queryStatus });
    }
    if (url.includes("/api/stats")) {
      return new Response(JSON.stringify(statsBody), { status: statsStatus });
    }
    return new Response("{}", { status: 404 });
  });

  return {
    calls,
    respondQuery(body, status = 200) {
      queryBody = body;
      queryStatus = status;
    },
    respondStats(body, status = 200) {
      statsBody = body;
      statsStatus = status;
    },
    failAll() {
      fail = true;
    },
  };
}
