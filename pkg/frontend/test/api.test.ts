import { describe, expect, it } from "vitest";

import { Api, ApiError } from "../src/api.js";

interface Call {
  url: string;
  method: string;
  body: unknown;
}

function fakeServer(respond: (call: Call) => { status?: number; body?: unknown }) {
  const calls: Call[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const call: Call = {
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    };
    calls.push(call);
    const { status = 200, body = {} } = respond(call);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { calls, fetchFn };
}

describe("Api", () => {
  it("hits the documented endpoint for each operation", async () => {
    const { calls, fetchFn } = fakeServer(() => ({ body: {} }));
    const api = new Api("", fetchFn);

    await api.image();
    await api.classes(["t1", "t2"]);
    await api.method("Person", "step:", ["t1"]);
    await api.transactions();
    await api.createTxn("fix");
    await api.stage("t1");
    await api.unstage("t1");
    await api.activate("t1", { level: "reentrant", targets: [3] });
    await api.deactivate("t1", { level: "method" });
    await api.merge("t1");
    await api.abort("t2");
    await api.accept("Foo >> bar\n    ^1", "staged");
    await api.eval("3 + 4", ["t1"]);
    await api.runTests("Infection", ["t1"]);
    await api.updateProcess(7);
    await api.startDemo("disease-spreading", { persons: 30 });
    await api.stepDemo("disease-spreading", 5);
    await api.stopDemo("disease-spreading");
    await api.eventsLog(10, 50);

    expect(calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "GET /api/image",
      "GET /api/classes?view=t1%2Ct2",
      "GET /api/method?class=Person&selector=step%3A&view=t1",
      "GET /api/transactions",
      "POST /api/transactions",
      "POST /api/transactions/t1/stage",
      "POST /api/transactions/t1/unstage",
      "POST /api/transactions/t1/activate",
      "POST /api/transactions/t1/deactivate",
      "POST /api/transactions/t1/merge",
      "POST /api/transactions/t2/abort",
      "POST /api/accept",
      "POST /api/eval",
      "POST /api/tests/run",
      "POST /api/processes/7/update",
      "POST /api/demo/disease-spreading/start",
      "POST /api/demo/disease-spreading/step",
      "POST /api/demo/disease-spreading/stop",
      "GET /api/events/log?after=10&limit=50",
    ]);
  });

  it("sends the bodies the server contract expects", async () => {
    const { calls, fetchFn } = fakeServer(() => ({ body: {} }));
    const api = new Api("", fetchFn);

    await api.createTxn("gravity", false);
    await api.activate("t1", { level: "reentrant", targets: [4, 5] });
    await api.accept("src", "base");
    await api.eval("1 + 2", ["t1", "t9"]);
    await api.runTests("", []);

    expect(calls[0].body).toEqual({ label: "gravity", stage: false });
    expect(calls[1].body).toEqual({ level: "reentrant", targets: [4, 5] });
    expect(calls[2].body).toEqual({ source: "src", target: "base" });
    expect(calls[3].body).toEqual({ expr: "1 + 2", view: "t1,t9" });
    expect(calls[4].body).toEqual({ pattern: "", view: "" });
  });

  it("raises ApiError with status, message and diagnostics", async () => {
    const { fetchFn } = fakeServer((call) => {
      if (call.url === "/api/accept") {
        return {
          status: 409,
          body: { error: "compile failed", diagnostics: ["line 2: unexpected ]"] },
        };
      }
      return { status: 404, body: { error: "no transaction t9" } };
    });
    const api = new Api("", fetchFn);

    const accept = api.accept("broken", "staged");
    await expect(accept).rejects.toThrowError("compile failed");
    const err = await accept.catch((e) => e as ApiError);
    expect(err.status).toBe(409);
    expect(err.diagnostics).toEqual(["line 2: unexpected ]"]);

    const stage = api.stage("t9");
    const nf = await stage.catch((e) => e as ApiError);
    expect(nf.status).toBe(404);
    expect(nf.message).toBe("no transaction t9");
  });

  it("prefixes an explicit base URL and builds the stream URL from it", async () => {
    const { calls, fetchFn } = fakeServer(() => ({ body: {} }));
    const api = new Api("http://127.0.0.1:8000", fetchFn);
    await api.image();
    expect(calls[0].url).toBe("http://127.0.0.1:8000/api/image");
    expect(api.eventStreamUrl(42)).toBe("http://127.0.0.1:8000/api/events?after=42");
  });

  // The editing workflow, as the buttons drive it. The engine side of the
  // equivalence (same POSTs produce the same event sequence and state hash
  // as a terminal session) is covered by the service's own test suite;
  // this end keeps the browser from inventing calls of its own.
  it("a create/accept/activate/merge session issues exactly the documented calls", async () => {
    const { calls, fetchFn } = fakeServer((call) => {
      if (call.method === "POST" && call.url === "/api/transactions") {
        return { body: { tag: "t1", label: "fix", staged: true } };
      }
      return { body: {} };
    });
    const api = new Api("", fetchFn);

    const txn = await api.createTxn("fix");
    await api.accept("Ball >> gravitate\n    ^self", "staged");
    await api.activate(txn.tag, {});
    await api.deactivate(txn.tag, {});
    await api.merge(txn.tag);

    expect(calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST /api/transactions",
      "POST /api/accept",
      "POST /api/transactions/t1/activate",
      "POST /api/transactions/t1/deactivate",
      "POST /api/transactions/t1/merge",
    ]);
  });
});
