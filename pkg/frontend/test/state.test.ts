import { describe, expect, it } from "vitest";

import type { EngineEvent, TxnRow } from "../src/api.js";
import { captureTarget, Store } from "../src/state.js";

function ev(kind: string, extra: Record<string, unknown> = {}): EngineEvent {
  return { seq: 1, step: 0, kind, ...extra };
}

function txn(tag: string, staged = false): TxnRow {
  return {
    tag,
    label: tag,
    staged,
    active_global: false,
    methods: [],
    fields: [],
    classes: [],
  };
}

describe("Store", () => {
  it("accepts capture into the topmost staged transaction", () => {
    const store = new Store();
    expect(captureTarget(store.state)).toBeNull();
    store.loadTransactions([txn("t1", true), txn("t2", true)], ["t1", "t2"], []);
    expect(captureTarget(store.state)).toBe("t2");
  });

  it("marks the right sections stale per event kind", () => {
    const store = new Store();

    store.apply(ev("txn-staged"));
    expect(store.takeStale()).toEqual(["transactions"]);

    store.apply(ev("method-accepted"));
    expect(new Set(store.takeStale())).toEqual(new Set(["classes", "transactions"]));

    store.apply(ev("process-spawn"));
    expect(store.takeStale()).toEqual(["processes"]);

    store.apply(ev("dispatch", { selector: "move" }));
    expect(store.takeStale()).toEqual([]);
  });

  it("takeStale drains the set", () => {
    const store = new Store();
    store.apply(ev("txn-created"));
    expect(store.takeStale()).toEqual(["transactions"]);
    expect(store.takeStale()).toEqual([]);
  });

  it("drops a merged or aborted transaction from the selected view", () => {
    const store = new Store();
    store.setView(["t1", "t2"]);
    store.apply(ev("txn-merged", { tag: "t1" }));
    expect(store.state.selectedView).toEqual(["t2"]);
    store.apply(ev("txn-aborted", { tag: "t2" }));
    expect(store.state.selectedView).toEqual([]);
  });

  it("builds the demo trend from snapshot events", () => {
    const store = new Store();
    store.apply(ev("demo-snapshot", { name: "disease-spreading", clock: 5, infected: 12 }));
    store.apply(ev("demo-snapshot", { name: "disease-spreading", clock: 10, infected: 30 }));
    expect(store.state.trend).toEqual([
      { clock: 5, infected: 12 },
      { clock: 10, infected: 30 },
    ]);
    expect(store.state.demo?.clock).toBe(10);
  });

  it("ball snapshots update the panel but not the infected trend", () => {
    const store = new Store();
    store.apply(ev("demo-snapshot", { name: "bouncing-ball", x: 3, y: 80, vy: 0 }));
    expect(store.state.demo?.name).toBe("bouncing-ball");
    expect(store.state.trend).toEqual([]);
  });

  it("routes engine errors and test reports to the console", () => {
    const store = new Store();
    store.apply(
      ev("error", { pid: 4, error_kind: "does-not-understand", message: "gravitate" }),
    );
    store.apply(ev("test-report", { passed: 3, failed: 1, errored: 0 }));
    expect(store.state.console).toHaveLength(2);
    expect(store.state.console[0].severity).toBe("error");
    expect(store.state.console[0].text).toContain("does-not-understand");
    expect(store.state.console[1].text).toContain("3 passed, 1 failed");
  });

  it("caps the console so a chatty engine cannot grow it forever", () => {
    const store = new Store();
    for (let i = 0; i < 700; i++) {
      store.apply({ seq: i, step: 0, kind: "error", error_kind: "x", message: "m" });
    }
    expect(store.state.console.length).toBeLessThanOrEqual(500);
  });

  it("a log gap marks everything stale", () => {
    const store = new Store();
    store.takeStale();
    store.noteGap(123);
    expect(new Set(store.takeStale())).toEqual(
      new Set(["transactions", "classes", "processes"]),
    );
    expect(store.state.console.at(-1)?.text).toContain("123 dropped");
  });

  it("editor dirty flag follows edit and save", () => {
    const store = new Store();
    store.openMethod("Ball", "move", "Ball >> move\n    ^self");
    expect(store.state.editor.dirty).toBe(false);
    store.editSource("Ball >> move\n    ^nil");
    expect(store.state.editor.dirty).toBe(true);
    store.markSaved();
    expect(store.state.editor.dirty).toBe(false);
  });

  it("replaying the same events yields the same state", () => {
    const events: EngineEvent[] = [
      ev("txn-created", { tag: "t1" }),
      ev("txn-staged", { tag: "t1" }),
      ev("method-accepted", { selector: "step" }),
      ev("demo-snapshot", { name: "disease-spreading", clock: 1, infected: 2 }),
      ev("error", { error_kind: "assertion-failed", message: "boom" }),
    ];
    const a = new Store();
    const b = new Store();
    for (const e of events) a.apply(e);
    for (const e of events) b.apply(e);
    expect(a.state).toEqual(b.state);
    expect(a.takeStale()).toEqual(b.takeStale());
  });
});
