/** Wire types for the JSON API (see API.md in the repository root). */

export type EditOp = "match" | "substitute" | "insert" | "delete";

export interface Annotation {
  op: EditOp;
  token: string;
  query_token?: string;
}

export interface ResultRow {
  pattern: string[];
  rendered: string;
  similarity: number; // percent, one decimal
  count: number;
  annotations: Annotation[];
}

export interface SearchStats {
  elapsed_ms: number;
  total_lookups: number;
  final_alpha: number;
  kgram_skips?: number;
  lastbits_scans?: number;
}

export interface SearchResponse {
  query: string;
  results: ResultRow[];
  stats: SearchStats;
  truncated: boolean;
}

export interface Occurrence {
  position: number;
  left: string;
  match: string;
  right: string;
}

export interface OccurrencesResponse {
  pattern: string;
  occurrences: Occurrence[];
}

export interface ApiError {
  code: string;
  message: string;
}
