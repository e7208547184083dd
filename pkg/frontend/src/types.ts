// Wire shapes of the metasql HTTP service. Field names match the JSON
// bodies exactly; do not rename.

export interface ColumnMeta {
  name: string;
  type: string;
}

export interface ResultPayload {
  result_id: string;
  columns: ColumnMeta[];
  rows: unknown[][];
  n_rows: number;
  truncated: boolean;
}

export interface AttemptPayload {
  index: number;
  sql: string | null;
  error: string | null;
  latency_s: number;
  repaired: boolean;
}

export type QueryStatus = 'ok' | 'abstained' | 'error';

export interface QueryResponse {
  session_id: string;
  status: QueryStatus;
  sql: string | null;
  latency_s?: number;
  attempts: AttemptPayload[];
  result?: ResultPayload;
  abstain_reason?: string | null;
  error?: string;
}

export type ChartKind = 'scatter' | 'bar' | 'line' | 'histogram';

export interface ChartDocument {
  kind: ChartKind;
  title: string;
  x_label: string;
  x_values: (number | string | null)[];
  y_label?: string;
  y_values?: (number | null)[];
}

export interface VisualizeResponse {
  status: 'ok' | 'viz_unavailable';
  chart?: ChartDocument;
  spec?: { viz_type: number; x_axis: string; y_axis: string | null };
  error?: string;
}

export interface SchemaColumn {
  name: string;
  type: string;
  notnull: boolean;
  pk: boolean;
}

export interface SchemaTable {
  name: string;
  columns: SchemaColumn[];
}

export interface SchemaResponse {
  database: string;
  text: string;
  tables: SchemaTable[];
}

export interface HistoryTurn {
  question: string;
  status: string;
  sql: string | null;
  result_id: string | null;
  database: string;
  n_attempts: number;
  error: string | null;
}

export interface HistoryResponse {
  session_id: string;
  turns: HistoryTurn[];
}
