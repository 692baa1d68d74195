// Typed client for the engine's HTTP API. One method per endpoint, no
// UI-side semantics: the server is the only authority on what a
// transaction, view or demo is.

export interface TxnRow {
  tag: string;
  label: string;
  staged: boolean;
  active_global: boolean;
  methods: string[];
  fields: string[];
  classes: string[];
  step?: number;
}

export interface TxnListing {
  transactions: TxnRow[];
  staged_order: string[]; // bottom -> top; last entry captures accepts
  global_stack: string[];
  step: number;
}

export interface MethodRef {
  selector: string;
  owner: string;
  tag: string;
}

export interface ClassRow {
  name: string;
  superclass: string | null;
  fields: string[];
  methods: MethodRef[];
}

export interface ClassListing {
  classes: ClassRow[];
  view: string[];
  step: number;
}

export interface MethodSource {
  class: string;
  selector: string;
  owner: string | null;
  tag: string;
  source: string;
  step: number;
}

export interface ProcessRow {
  pid: number;
  name: string;
  status: string;
  stack: string[];
  pending: number;
  error: { kind: string; message: string } | null;
}

export interface EvalResult {
  result: string | null;
  error: { kind: string; message: string } | null;
  step: number;
}

export interface TestReport {
  total: number;
  passed: number;
  failed: number;
  errored: number;
  seconds: number;
  results: {
    class: string;
    selector: string;
    outcome: string;
    detail?: string;
  }[];
}

export interface DemoSnapshot {
  name: string;
  clock: number;
  [key: string]: unknown;
}

export interface ImageInfo {
  hash: string;
  classes: number;
  processes: number;
  transactions: number;
  events: number;
  step: number;
}

export interface EngineEvent {
  seq: number;
  step: number;
  kind: string;
  [key: string]: unknown;
}

export interface EventsPage {
  events: EngineEvent[];
  gap: boolean;
  dropped: number;
  last_seq: number;
}

export type ActivationLevel = "method" | "reentrant" | "manual";

export interface ScopeBody {
  level?: ActivationLevel;
  targets?: number[]; // omitted = every process
  also?: string[];
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly diagnostics: string[] = [],
  ) {
    super(message);
  }
}

function viewParam(view: string[]): string {
  return view.length ? `?view=${encodeURIComponent(view.join(","))}` : "";
}

export class Api {
  constructor(
    private base = "",
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(
        res.status,
        typeof body.error === "string" ? body.error : `HTTP ${res.status}`,
        Array.isArray(body.diagnostics) ? body.diagnostics : [],
      );
    }
    return body as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  image(): Promise<ImageInfo> {
    return this.request("/api/image");
  }

  classes(view: string[]): Promise<ClassListing> {
    return this.request(`/api/classes${viewParam(view)}`);
  }

  method(klass: string, selector: string, view: string[]): Promise<MethodSource> {
    const q = new URLSearchParams({ class: klass, selector });
    if (view.length) q.set("view", view.join(","));
    return this.request(`/api/method?${q.toString()}`);
  }

  processes(): Promise<{ processes: ProcessRow[]; step: number }> {
    return this.request("/api/processes");
  }

  transactions(): Promise<TxnListing> {
    return this.request("/api/transactions");
  }

  createTxn(label: string, stage = true): Promise<TxnRow> {
    return this.post("/api/transactions", { label, stage });
  }

  stage(tag: string): Promise<TxnRow> {
    return this.post(`/api/transactions/${tag}/stage`);
  }

  unstage(tag: string): Promise<TxnRow> {
    return this.post(`/api/transactions/${tag}/unstage`);
  }

  abort(tag: string): Promise<{ aborted: string }> {
    return this.post(`/api/transactions/${tag}/abort`);
  }

  merge(tag: string, into = "base"): Promise<{ merged: string; into: string }> {
    return this.post(`/api/transactions/${tag}/merge`, { into });
  }

  activate(tag: string, scope: ScopeBody = {}): Promise<{ activating: string[] }> {
    return this.post(`/api/transactions/${tag}/activate`, scope);
  }

  deactivate(tag: string, scope: ScopeBody = {}): Promise<{ deactivating: string[] }> {
    return this.post(`/api/transactions/${tag}/deactivate`, scope);
  }

  accept(source: string, target: "staged" | "base" = "staged"): Promise<{
    class: string;
    selector: string;
    target: string;
  }> {
    return this.post("/api/accept", { source, target });
  }

  importScript(text: string, filename: string): Promise<TxnRow> {
    return this.post("/api/scripts/import", { text, filename });
  }

  eval(expr: string, view: string[]): Promise<EvalResult> {
    return this.post("/api/eval", { expr, view: view.join(",") });
  }

  updateProcess(pid: number): Promise<{ pid: number; applied: number; stack: string[] }> {
    return this.post(`/api/processes/${pid}/update`);
  }

  runTests(pattern: string, view: string[]): Promise<TestReport> {
    return this.post("/api/tests/run", { pattern, view: view.join(",") });
  }

  startDemo(
    name: string,
    opts: {
      auto?: boolean;
      tick_seconds?: number;
      snapshot_every?: number;
      persons?: number;
      seed?: number;
      rate?: number;
    } = {},
  ): Promise<{ name: string; pid: number }> {
    return this.post(`/api/demo/${name}/start`, opts);
  }

  stepDemo(name: string, ticks = 1): Promise<DemoSnapshot> {
    return this.post(`/api/demo/${name}/step`, { ticks });
  }

  demoStatus(name: string): Promise<DemoSnapshot> {
    return this.request(`/api/demo/${name}`);
  }

  stopDemo(name: string): Promise<{ name: string; status: string }> {
    return this.post(`/api/demo/${name}/stop`);
  }

  eventsLog(after = 0, limit = 1000): Promise<EventsPage> {
    return this.request(`/api/events/log?after=${after}&limit=${limit}`);
  }

  eventStreamUrl(after: number): string {
    return `${this.base}/api/events?after=${after}`;
  }
}
