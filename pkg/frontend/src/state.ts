// Browser-side mirror of the engine. The store never decides semantics:
// events and GET responses are server truth, applied verbatim; the only
// thing it adds is bookkeeping about what became stale and needs a
// refetch. Reloading the page and replaying GETs + the log rebuilds an
// equivalent store.

import type {
  ClassRow,
  DemoSnapshot,
  EngineEvent,
  ProcessRow,
  TxnRow,
} from "./api.js";

export interface EditorBuffer {
  klass: string | null;
  selector: string | null;
  source: string;
  dirty: boolean;
}

export interface ConsoleEntry {
  seq: number;
  text: string;
  severity: "info" | "error";
}

export type Stale = "transactions" | "classes" | "processes";

export interface BrowserState {
  transactions: TxnRow[];
  stagedOrder: string[]; // bottom -> top
  globalStack: string[];
  selectedView: string[];
  classes: ClassRow[];
  processes: ProcessRow[];
  editor: EditorBuffer;
  demo: DemoSnapshot | null;
  trend: { clock: number; infected: number }[];
  console: ConsoleEntry[];
  connected: boolean;
  autotest: boolean;
}

export function initialState(): BrowserState {
  return {
    transactions: [],
    stagedOrder: [],
    globalStack: [],
    selectedView: [],
    classes: [],
    processes: [],
    editor: { klass: null, selector: null, source: "", dirty: false },
    demo: null,
    trend: [],
    console: [],
    connected: false,
    autotest: true,
  };
}

// Accepts land in the topmost staged transaction; null means the user
// must create one first.
export function captureTarget(state: BrowserState): string | null {
  const order = state.stagedOrder;
  return order.length ? order[order.length - 1] : null;
}

const CONSOLE_CAP = 500;
const TREND_CAP = 400;

function say(
  state: BrowserState,
  seq: number,
  text: string,
  severity: "info" | "error" = "info",
): void {
  state.console.push({ seq, text, severity });
  if (state.console.length > CONSOLE_CAP) {
    state.console.splice(0, state.console.length - CONSOLE_CAP);
  }
}

function describeError(ev: EngineEvent): string {
  const kind = ev.error_kind ?? "error";
  const pid = ev.pid !== undefined ? ` in pid ${ev.pid}` : "";
  const nil = ev.nil_state ? " (nil state)" : "";
  return `${kind}${pid}${nil}: ${ev.message ?? ""}`;
}

export class Store {
  state: BrowserState = initialState();
  stale = new Set<Stale>();

  // GET responses replace whole sections; events only mark them stale.
  loadTransactions(rows: TxnRow[], stagedOrder: string[], globalStack: string[]): void {
    this.state.transactions = rows;
    this.state.stagedOrder = stagedOrder;
    this.state.globalStack = globalStack;
    this.stale.delete("transactions");
  }

  loadClasses(rows: ClassRow[]): void {
    this.state.classes = rows;
    this.stale.delete("classes");
  }

  loadProcesses(rows: ProcessRow[]): void {
    this.state.processes = rows;
    this.stale.delete("processes");
  }

  openMethod(klass: string, selector: string, source: string): void {
    this.state.editor = { klass, selector, source, dirty: false };
  }

  editSource(source: string): void {
    this.state.editor.source = source;
    this.state.editor.dirty = true;
  }

  markSaved(): void {
    this.state.editor.dirty = false;
  }

  setView(tags: string[]): void {
    this.state.selectedView = tags;
    this.stale.add("classes");
  }

  setConnected(connected: boolean): void {
    this.state.connected = connected;
  }

  apply(ev: EngineEvent): void {
    switch (ev.kind) {
      case "txn-created":
      case "txn-staged":
      case "txn-unstaged":
        this.stale.add("transactions");
        break;
      case "txn-merged":
      case "txn-aborted": {
        this.stale.add("transactions");
        this.stale.add("classes");
        const tag = ev.tag as string | undefined;
        if (tag) {
          this.state.selectedView = this.state.selectedView.filter(
            (t) => t !== tag,
          );
        }
        say(this.state, ev.seq, `${ev.kind} ${tag ?? ""}`);
        break;
      }
      case "method-accepted":
      case "method-removed":
      case "class-added":
      case "class-updated":
        this.stale.add("classes");
        this.stale.add("transactions");
        break;
      case "process-spawn":
      case "process-terminate":
      case "process-suspend":
        this.stale.add("processes");
        break;
      case "activation-requested":
      case "activation-deferred":
      case "barrier-fired":
        this.stale.add("processes");
        say(this.state, ev.seq, `${ev.kind} ${ev.rid ?? ""}`);
        break;
      case "activation-applied":
        this.stale.add("processes");
        this.stale.add("transactions");
        break;
      case "stack-pruned":
        this.stale.add("processes");
        this.stale.add("transactions");
        break;
      case "error":
        say(this.state, ev.seq, describeError(ev), "error");
        break;
      case "test-report":
        say(
          this.state,
          ev.seq,
          `tests: ${ev.passed} passed, ${ev.failed} failed, ${ev.errored} errored`,
        );
        break;
      case "demo-snapshot": {
        const snap = ev as unknown as DemoSnapshot;
        this.state.demo = snap;
        if (typeof snap.clock === "number" && typeof snap.infected === "number") {
          this.state.trend.push({
            clock: snap.clock,
            infected: snap.infected as number,
          });
          if (this.state.trend.length > TREND_CAP) {
            this.state.trend.splice(0, this.state.trend.length - TREND_CAP);
          }
        }
        break;
      }
      default:
        break; // dispatch and friends are log-only noise for the browser
    }
  }

  // Ring buffer wrapped past our cursor: everything is suspect.
  noteGap(dropped: number): void {
    this.stale.add("transactions");
    this.stale.add("classes");
    this.stale.add("processes");
    say(this.state, 0, `event log gap (${dropped} dropped); refreshing`, "error");
  }

  takeStale(): Stale[] {
    const out = [...this.stale];
    this.stale.clear();
    return out;
  }
}
