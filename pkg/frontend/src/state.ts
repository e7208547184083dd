import type {
  ChartDocument,
  HistoryTurn,
  QueryResponse,
  SchemaResponse,
} from './types.js';

export interface RestoredTurn {
  question: string;
  sql: string | null;
}

export interface ViewState {
  sessionId: string | null;
  database: string;
  model: string;
  draft: string;
  busy: boolean;
  response: QueryResponse | null;
  chart: ChartDocument | null;
  chartError: string | null;
  history: HistoryTurn[];
  schema: SchemaResponse | null;
  banner: string | null;
  restored: RestoredTurn | null;
}

export function initialState(database: string, model: string): ViewState {
  return {
    sessionId: null,
    database,
    model,
    draft: '',
    busy: false,
    response: null,
    chart: null,
    chartError: null,
    history: [],
    schema: null,
    banner: null,
    restored: null,
  };
}

export type Listener = (state: ViewState) => void;

export class Store {
  private listeners: Listener[] = [];

  constructor(private state: ViewState) {}

  get(): ViewState {
    return this.state;
  }

  update(patch: Partial<ViewState>): ViewState {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
