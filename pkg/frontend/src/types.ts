// JSON shapes served by the query service. The console renders these
// verbatim and never synthesizes answer content client-side.

export interface Citation {
  value: string;
  row: number;
  column: number;
}

export interface Answer {
  text: string;
  provenance: number[];
  citations: Citation[];
  verified: boolean;
  violations: string[];
}

export interface PageInfo {
  number: number;
  size: number;
  has_more: boolean;
}

export interface SubgraphNode {
  id: number;
  labels: string[];
  properties: Record<string, string | number | boolean>;
}

export interface SubgraphRel {
  id: number;
  type: string;
  source: number;
  target: number;
}

export interface Subgraph {
  nodes: SubgraphNode[];
  relationships: SubgraphRel[];
}

export type Cell =
  | string
  | number
  | boolean
  | null
  | { id: number; labels: string[]; properties: Record<string, unknown> };

export interface QueryResponse {
  cypher: string;
  source: string;
  columns: string[];
  rows: Cell[][];
  page: PageInfo;
  provenance: number[][];
  answer: Answer;
  subgraph: Subgraph;
  warnings: string[];
  cache: { tier: string; similarity?: number };
  elapsed_ms: number;
}

export interface QueryError {
  error: string;
  diagnostics?: Record<string, string>;
}

export interface StatsResponse {
  nodes: Record<string, number>;
  relationships: Record<string, number>;
  cache: Record<string, number>;
  query_log: QueryLogEntry[];
}

export interface QueryLogEntry {
  timestamp: number;
  session_id: string;
  question: string;
  query: string;
  cache: string;
  rows: number;
  elapsed_ms: number;
  verified: boolean;
  warnings: string[];
}

export interface HealthResponse {
  status: string;
  graph_loaded: boolean;
  provider_reachable: boolean;
}
