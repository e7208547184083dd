import { ApiClient, ApiError } from './api.js';
import { renderChart } from './charts.js';
import { initialState, Store } from './state.js';
import type { HistoryTurn, QueryResponse } from './types.js';

export interface AppOptions {
  databases?: string[];
  models?: string[];
}

export interface AppHandle {
  store: Store;
  /** Resolves once every in-flight request spawned by UI events settles. */
  whenIdle(): Promise<void>;
}

const SKELETON = `
  <header class="toolbar">
    <label>Database <select id="database-select"></select></label>
    <label>Model <select id="model-select"></select></label>
    <button type="button" id="schema-toggle">Schema</button>
  </header>
  <div id="banner" class="banner" hidden>
    <span id="banner-text"></span>
    <button type="button" id="retry-btn">Retry</button>
  </div>
  <form id="question-form">
    <input id="question-input" autocomplete="off"
           placeholder="Ask a question about the data" />
    <button id="submit-btn" type="submit" disabled>Ask</button>
  </form>
  <div id="restored-note" class="note" hidden></div>
  <section id="notice" class="notice" hidden></section>
  <section id="sql-pane" hidden>
    <h2>Generated SQL</h2>
    <pre id="sql-text"></pre>
    <button type="button" id="copy-sql">Copy</button>
    <span id="attempts-note" class="note"></span>
  </section>
  <section id="table-pane" hidden>
    <h2>Result</h2>
    <div id="truncation-note" class="note" hidden></div>
    <table id="result-table"><thead></thead><tbody></tbody></table>
    <button type="button" id="chart-btn">Chart this result</button>
  </section>
  <section id="chart-pane" hidden>
    <div id="chart-error" class="note" hidden></div>
    <div id="chart-host"></div>
  </section>
  <section id="schema-pane" hidden></section>
  <aside id="history-pane">
    <h2>History</h2>
    <div id="history-empty">No questions yet in this session.</div>
    <ol id="history-list"></ol>
  </aside>
`;

export function mountApp(
  root: HTMLElement,
  client: ApiClient,
  options: AppOptions = {},
): AppHandle {
  const doc = root.ownerDocument;
  const databases = options.databases ?? ['demo'];
  const models = options.models ?? ['default'];
  const store = new Store(initialState(databases[0] ?? 'demo',
                                       models[0] ?? 'default'));

  root.classList.add('metasql-app');
  root.innerHTML = SKELETON;
  const pick = <T extends HTMLElement>(sel: string): T => {
    const node = root.querySelector<T>(sel);
    if (!node) throw new Error(`app skeleton is missing ${sel}`);
    return node;
  };

  const dbSelect = pick<HTMLSelectElement>('#database-select');
  const modelSelect = pick<HTMLSelectElement>('#model-select');
  const banner = pick<HTMLDivElement>('#banner');
  const bannerText = pick<HTMLSpanElement>('#banner-text');
  const form = pick<HTMLFormElement>('#question-form');
  const input = pick<HTMLInputElement>('#question-input');
  const submitBtn = pick<HTMLButtonElement>('#submit-btn');
  const restoredNote = pick<HTMLDivElement>('#restored-note');
  const notice = pick<HTMLElement>('#notice');
  const sqlPane = pick<HTMLElement>('#sql-pane');
  const sqlText = pick<HTMLPreElement>('#sql-text');
  const attemptsNote = pick<HTMLSpanElement>('#attempts-note');
  const tablePane = pick<HTMLElement>('#table-pane');
  const truncationNote = pick<HTMLDivElement>('#truncation-note');
  const table = pick<HTMLTableElement>('#result-table');
  const chartBtn = pick<HTMLButtonElement>('#chart-btn');
  const chartPane = pick<HTMLElement>('#chart-pane');
  const chartError = pick<HTMLDivElement>('#chart-error');
  const chartHost = pick<HTMLDivElement>('#chart-host');
  const schemaPane = pick<HTMLElement>('#schema-pane');
  const historyEmpty = pick<HTMLDivElement>('#history-empty');
  const historyList = pick<HTMLOListElement>('#history-list');

  for (const name of databases) {
    const opt = doc.createElement('option');
    opt.value = name;
    opt.textContent = name;
    dbSelect.appendChild(opt);
  }
  for (const name of models) {
    const opt = doc.createElement('option');
    opt.value = name;
    opt.textContent = name;
    modelSelect.appendChild(opt);
  }

  // the question whose result is currently displayed; feeds visualize
  let askedQuestion = '';
  let lastFailedQuestion: string | null = null;

  let inflight = 0;
  const idleWaiters: Array<() => void> = [];
  function track(work: Promise<void>): void {
    inflight += 1;
    void work
      .catch(() => {
        // handlers surface their own errors through the banner
      })
      .finally(() => {
        inflight -= 1;
        if (inflight === 0) idleWaiters.splice(0).forEach((w) => w());
      });
  }
  function whenIdle(): Promise<void> {
    if (inflight === 0) return Promise.resolve();
    return new Promise((resolve) => idleWaiters.push(resolve));
  }

  function render(): void {
    const s = store.get();
    submitBtn.disabled = s.busy || s.draft.trim() === '';
    dbSelect.value = s.database;
    modelSelect.value = s.model;

    banner.hidden = s.banner === null;
    bannerText.textContent = s.banner ?? '';

    restoredNote.hidden = s.restored === null;
    if (s.restored) {
      restoredNote.textContent =
        `Restored turn: "${s.restored.question}" (read-only; ` +
        'resubmit to re-execute)';
    }

    const r = s.response;
    const showSql = (s.restored?.sql ?? r?.sql) != null;
    sqlPane.hidden = !showSql;
    sqlText.textContent = s.restored?.sql ?? r?.sql ?? '';
    attemptsNote.textContent =
      r && r.attempts.length > 1 ? `${r.attempts.length} attempts` : '';

    const abstained = r?.status === 'abstained';
    notice.hidden = !abstained;
    notice.textContent = abstained
      ? 'The system declined to answer this question' +
        (r?.abstain_reason ? `: ${r.abstain_reason}` : '.')
      : '';

    const result = !s.restored && r?.status === 'ok' ? r.result : undefined;
    tablePane.hidden = !result;
    if (result) {
      truncationNote.hidden = !result.truncated;
      truncationNote.textContent = result.truncated
        ? `Showing ${result.rows.length} of ${result.n_rows} rows`
        : '';
      const thead = table.tHead!;
      thead.textContent = '';
      const headRow = doc.createElement('tr');
      for (const col of result.columns) {
        const th = doc.createElement('th');
        th.textContent = col.name;
        th.title = col.type;
        headRow.appendChild(th);
      }
      thead.appendChild(headRow);
      const tbody = table.tBodies[0]!;
      tbody.textContent = '';
      for (const row of result.rows) {
        const tr = doc.createElement('tr');
        for (const value of row) {
          const td = doc.createElement('td');
          td.textContent = value === null ? 'NULL' : String(value);
          tr.appendChild(td);
        }
        tbody.appendChild(tr);
      }
    }

    chartError.hidden = s.chartError === null;
    chartError.textContent = s.chartError
      ? `Chart unavailable: ${s.chartError}`
      : '';
    chartHost.textContent = '';
    if (s.chart) chartHost.appendChild(renderChart(doc, s.chart));
    chartPane.hidden = s.chart === null && s.chartError === null;

    schemaPane.textContent = '';
    if (s.schema) {
      const title = doc.createElement('h2');
      title.textContent = `Schema: ${s.schema.database}`;
      schemaPane.appendChild(title);
      for (const t of s.schema.tables) {
        const details = doc.createElement('details');
        const summary = doc.createElement('summary');
        summary.textContent = t.name;
        details.appendChild(summary);
        const cols = doc.createElement('ul');
        for (const c of t.columns) {
          const li = doc.createElement('li');
          li.textContent = `${c.name} ${c.type}${c.pk ? ' pk' : ''}`;
          cols.appendChild(li);
        }
        details.appendChild(cols);
        schemaPane.appendChild(details);
      }
    }

    historyEmpty.hidden = s.history.length > 0;
    historyList.textContent = '';
    s.history.forEach((turn, index) => {
      const li = doc.createElement('li');
      li.className = `history-turn status-${turn.status}`;
      li.setAttribute('data-index', String(index));
      const q = doc.createElement('span');
      q.className = 'history-question';
      q.textContent = turn.question;
      const badge = doc.createElement('span');
      badge.className = 'history-status';
      badge.textContent = turn.status;
      li.append(q, badge);
      historyList.appendChild(li);
    });
  }
  store.subscribe(render);

  async function refreshHistory(): Promise<void> {
    const s = store.get();
    if (!s.sessionId) return;
    const history = await client.history(s.sessionId);
    // service reports oldest first; the pane shows newest first
    store.update({ history: [...history.turns].reverse() });
  }

  async function submitQuestion(question: string): Promise<void> {
    store.update({
      busy: true,
      banner: null,
      chart: null,
      chartError: null,
      restored: null,
    });
    let response: QueryResponse;
    try {
      const s = store.get();
      response = await client.query({
        question,
        database: s.database,
        model: s.model,
        ...(s.sessionId ? { session_id: s.sessionId } : {}),
      });
    } catch (err) {
      lastFailedQuestion = question;
      const message = err instanceof ApiError ? err.message : String(err);
      store.update({ busy: false, banner: message });
      return;
    }
    lastFailedQuestion = null;
    askedQuestion = question;
    store.update({
      busy: false,
      sessionId: response.session_id,
      response,
      banner: response.status === 'error'
        ? response.error ?? 'request failed'
        : null,
    });
    await refreshHistory();
  }

  async function requestChart(): Promise<void> {
    const s = store.get();
    const result = s.response?.result;
    if (!s.sessionId || !result) return;
    store.update({ busy: true, chart: null, chartError: null });
    try {
      const viz = await client.visualize({
        session_id: s.sessionId,
        result_id: result.result_id,
        question: askedQuestion,
      });
      if (viz.status === 'ok' && viz.chart) {
        store.update({ busy: false, chart: viz.chart });
      } else {
        store.update({ busy: false,
                       chartError: viz.error ?? 'no chart produced' });
      }
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      store.update({ busy: false, chartError: message });
    }
  }

  async function toggleSchema(): Promise<void> {
    if (!schemaPane.hidden) {
      schemaPane.hidden = true;
      return;
    }
    const s = store.get();
    if (!s.schema || s.schema.database !== s.database) {
      try {
        const schema = await client.schema(s.database);
        store.update({ schema });
      } catch (err) {
        const message = err instanceof ApiError ? err.message : String(err);
        store.update({ banner: message });
        return;
      }
    }
    schemaPane.hidden = false;
  }

  input.addEventListener('input', () => {
    store.update({ draft: input.value });
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const question = store.get().draft.trim();
    if (question === '' || store.get().busy) return;
    track(submitQuestion(question));
  });
  pick<HTMLButtonElement>('#retry-btn').addEventListener('click', () => {
    if (lastFailedQuestion) track(submitQuestion(lastFailedQuestion));
  });
  chartBtn.addEventListener('click', () => {
    track(requestChart());
  });
  pick<HTMLButtonElement>('#schema-toggle').addEventListener('click', () => {
    track(toggleSchema());
  });
  pick<HTMLButtonElement>('#copy-sql').addEventListener('click', () => {
    const text = sqlText.textContent ?? '';
    const clipboard = (root.ownerDocument.defaultView as Window | null)
      ?.navigator?.clipboard;
    if (clipboard && text) void clipboard.writeText(text);
  });
  historyList.addEventListener('click', (event) => {
    const target = event.target as HTMLElement | null;
    const item = target?.closest('li.history-turn');
    if (!item) return;
    const index = Number(item.getAttribute('data-index'));
    const turn: HistoryTurn | undefined = store.get().history[index];
    if (!turn) return;
    store.update({
      restored: { question: turn.question, sql: turn.sql },
      chart: null,
      chartError: null,
    });
  });
  dbSelect.addEventListener('change', () => {
    // a new database means a fresh session and empty panes
    store.update({
      ...initialState(dbSelect.value, store.get().model),
      draft: store.get().draft,
    });
  });
  modelSelect.addEventListener('change', () => {
    store.update({ model: modelSelect.value });
  });

  render();
  return { store, whenIdle };
}
