// Boot and wiring: construct the API client, the store, the event feed
// and the view, then keep them honest. All engine semantics stay on the
// server; this file only decides when to refetch and what to confirm.

import { Api, ApiError } from "./api.js";
import { EventFeed } from "./events.js";
import { BrowserView, type Actions } from "./render.js";
import { captureTarget, Store } from "./state.js";

const api = new Api("");
const store = new Store();

let renderQueued = false;
let view: BrowserView;

function scheduleRender(): void {
  if (renderQueued) return;
  renderQueued = true;
  setTimeout(() => {
    renderQueued = false;
    view.render();
  }, 40);
}

function report(text: string, severity: "info" | "error" = "info"): void {
  store.state.console.push({ seq: 0, text, severity });
  scheduleRender();
}

async function refetch(sections: Iterable<string>): Promise<void> {
  for (const section of new Set(sections)) {
    try {
      if (section === "transactions") {
        const t = await api.transactions();
        store.loadTransactions(t.transactions, t.staged_order, t.global_stack);
      } else if (section === "classes") {
        const c = await api.classes(store.state.selectedView);
        store.loadClasses(c.classes);
      } else if (section === "processes") {
        const p = await api.processes();
        store.loadProcesses(p.processes);
      }
    } catch (err) {
      report(`refresh ${section} failed: ${describe(err)}`, "error");
    }
  }
  scheduleRender();
}

let refetchQueued = false;

function scheduleRefetch(): void {
  if (refetchQueued) return;
  refetchQueued = true;
  setTimeout(() => {
    refetchQueued = false;
    void refetch(store.takeStale());
  }, 120);
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    const diag = err.diagnostics.length ? `: ${err.diagnostics.join("; ")}` : "";
    return `${err.message}${diag}`;
  }
  return err instanceof Error ? err.message : String(err);
}

// An action is a POST plus the refetches its event fallout would force
// anyway; doing them eagerly keeps the UI snappy when the stream lags.
async function act(fn: () => Promise<unknown>, ...then: string[]): Promise<boolean> {
  try {
    await fn();
    await refetch(then);
    return true;
  } catch (err) {
    report(describe(err), "error");
    return false;
  }
}

async function saveEditor(): Promise<void> {
  const source = view.editorSource();
  if (!source.trim()) return;
  if (captureTarget(store.state) === null) {
    const label = window.prompt(
      "No staged transaction to capture the change. Create one?",
      "workbench",
    );
    if (label === null) return;
    const ok = await act(() => api.createTxn(label.trim() || "workbench"),
      "transactions");
    if (!ok) return;
  }
  try {
    const accepted = await api.accept(source, "staged");
    store.markSaved();
    report(`accepted ${accepted.class}>>${accepted.selector} into ${accepted.target}`);
    await refetch(["classes", "transactions"]);
    if (store.state.autotest) {
      await runTests();
    }
  } catch (err) {
    report(describe(err), "error");
  }
  scheduleRender();
}

async function runTests(): Promise<void> {
  try {
    const rep = await api.runTests("", store.state.selectedView);
    const failures = rep.results.filter((r) => r.outcome !== "pass");
    report(
      `tests: ${rep.passed}/${rep.total} passed` +
        (failures.length
          ? ` — ${failures
              .map((f) => `${f.class}>>${f.selector}: ${f.detail ?? f.outcome}`)
              .join("; ")}`
          : ""),
      failures.length ? "error" : "info",
    );
  } catch (err) {
    report(describe(err), "error");
  }
}

const actions: Actions = {
  createTxn: (label) => void act(() => api.createTxn(label), "transactions"),
  stage: (tag) => void act(() => api.stage(tag), "transactions"),
  unstage: (tag) => void act(() => api.unstage(tag), "transactions"),
  activate: (tag, level) =>
    void act(
      () => api.activate(tag, { level: level as never }),
      "transactions", "processes",
    ),
  deactivate: (tag, level) =>
    void act(
      () => api.deactivate(tag, { level: level as never }),
      "transactions", "processes",
    ),
  merge: (tag) => void act(() => api.merge(tag), "transactions", "classes"),
  abort: (tag) => void act(() => api.abort(tag), "transactions", "classes"),

  toggleView: (tag) => {
    const current = store.state.selectedView;
    store.setView(
      current.includes(tag)
        ? current.filter((t) => t !== tag)
        : [...current, tag],
    );
    void refetch(["classes"]).then(() => {
      const { klass, selector } = store.state.editor;
      if (klass && selector) actions.openMethod(klass, selector);
    });
  },

  openMethod: (klass, selector) => {
    api
      .method(klass, selector, store.state.selectedView)
      .then((m) => {
        store.openMethod(m.class, m.selector, m.source);
        view.setEditorSource(m.source);
        scheduleRender();
      })
      .catch((err) => report(describe(err), "error"));
  },

  saveEditor: () => void saveEditor(),
  runTests: () => void runTests(),
  setAutotest: (on) => {
    store.state.autotest = on;
  },

  evalExpr: (expr) => {
    api
      .eval(expr, store.state.selectedView)
      .then((r) => {
        if (r.error) report(`${r.error.kind}: ${r.error.message}`, "error");
        else report(`=> ${r.result}`);
      })
      .catch((err) => report(describe(err), "error"));
  },

  startDemo: (name) =>
    void act(() => api.startDemo(name, { auto: true }), "processes"),
  stopDemo: (name) => void act(() => api.stopDemo(name), "processes"),
};

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  view = new BrowserView(root, actions, () => store.state);
  view.onEditorInput(() => {
    store.editSource(view.editorSource());
    scheduleRender();
  });

  await refetch(["transactions", "classes", "processes"]);

  let cursor = 0;
  try {
    const page = await api.eventsLog(0, 200);
    for (const ev of page.events) store.apply(ev);
    cursor = page.last_seq;
  } catch (err) {
    report(`event log unavailable: ${describe(err)}`, "error");
  }

  const feed = new EventFeed(
    (after) => api.eventStreamUrl(after),
    {
      onEvent: (ev) => {
        store.apply(ev);
        scheduleRefetch();
        scheduleRender();
      },
      onGap: (dropped) => {
        store.noteGap(dropped);
        scheduleRefetch();
      },
      onStateChange: (connected) => {
        store.setConnected(connected);
        scheduleRender();
      },
    },
  );
  feed.start(cursor);
  scheduleRender();
}

void boot();
