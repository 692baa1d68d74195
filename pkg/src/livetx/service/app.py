"""The web service: one world, one engine thread, a JSON surface.

All engine work is funnelled through EngineHost so the world is only ever
touched from its own thread; request handlers block on a future for their
answer. Views are per-request query parameters, never server-side session
state. The event log is reachable both as a JSON page (polling) and as a
server-sent-event stream.

Errors: malformed input is 400, unknown names are 404, and operations the
engine refuses (bad lifecycle state, builtin edits, hierarchy violations)
are 409 with the engine's message.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from concurrent.futures import Future
from contextlib import asynccontextmanager

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse

from ..errors import CompileError, LiveError, StaleTagError, TxnError
from ..kernel import (ClassObject, effective_superclass, env_resolve,
                      resolve_method, visible_fields, visible_methods)
from ..world import World
from ..tools import demos as demosmod
from ..tools import scripts as scriptsmod
from ..tools import testrun


class EngineHost:
    """Serializes access to the world and keeps auto-running demos moving
    between requests."""

    def __init__(self, world: World):
        self.world = world
        self.demos = {}
        self._auto = {}  # name -> (tick_seconds, last_advance, snapshot_every)
        self._queue = queue.Queue()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="livetx-engine")

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._queue.put(None)
        self._thread.join(timeout=5)

    def submit(self, fn):
        """Run fn(world) on the engine thread and return its result."""
        future = Future()
        self._queue.put((fn, future))
        return future.result()

    def set_auto(self, name, tick_seconds, snapshot_every):
        self._auto[name] = [tick_seconds, time.monotonic(), snapshot_every]

    def clear_auto(self, name):
        self._auto.pop(name, None)

    def _loop(self):
        while not self._stop.is_set():
            try:
                item = self._queue.get(timeout=0.02)
            except queue.Empty:
                item = None
            if item is not None:
                fn, future = item
                try:
                    future.set_result(fn(self.world))
                except BaseException as err:  # handed to the waiting request
                    future.set_exception(err)
            self._drive_demos()

    def _drive_demos(self):
        now = time.monotonic()
        for name, entry in list(self._auto.items()):
            tick_seconds, last, every = entry
            if now - last < tick_seconds:
                continue
            handle = self.demos.get(name)
            if handle is None or not handle.running:
                self._auto.pop(name, None)
                continue
            handle.advance(1)
            entry[1] = now
            if handle.proc.tick_count % every == 0:
                handle.snapshot()


def _parse_view(world, view):
    """view is a comma-separated tag/label list; returns transactions."""
    if not view:
        return []
    out = []
    for part in view.split(","):
        part = part.strip()
        if part:
            out.append(world.registry.resolve(part))
    return out


def _eval_stack(world, view_txns):
    stack = list(world.global_stack)
    for t in view_txns:
        if t not in stack:
            stack.append(t)
    return stack


def _txn_row(world, txn):
    methods, fields = [], []
    for changes in txn.class_changes.values():
        cname = changes.cls.name
        methods += [f"{cname}>>{sel}" for sel in changes.method_changes]
        fields += [f"{cname}.{n}" for n in changes.field_adds]
        fields += [f"{cname}.{n} (removed)" for n in changes.field_removes]
    return {
        "tag": txn.tag,
        "label": txn.label,
        "staged": txn in world.registry.staged_order,
        "active_global": txn in world.global_stack,
        "methods": sorted(methods),
        "fields": sorted(fields),
        "classes": sorted(txn.env_delta),
    }


def _class_row(world, cls, stack):
    sup = effective_superclass(cls, stack)
    methods = [{"selector": sel, "owner": owner, "tag": tag}
               for sel, (owner, tag) in
               sorted(visible_methods(cls, stack).items())]
    return {
        "name": cls.name,
        "superclass": sup.name if sup is not None else None,
        "fields": sorted(visible_fields(cls, stack)),
        "methods": methods,
    }


def create_app(world: World | None = None) -> FastAPI:
    host = EngineHost(world if world is not None else World())

    @asynccontextmanager
    async def lifespan(app):
        yield
        host.stop()

    app = FastAPI(title="livetx", docs_url=None, redoc_url=None,
                  lifespan=lifespan)
    app.state.host = host
    host.start()

    @app.exception_handler(TxnError)
    def _txn_error(request: Request, err: TxnError):
        code = 404 if isinstance(err, StaleTagError) else 409
        return JSONResponse({"error": str(err)}, status_code=code)

    @app.exception_handler(CompileError)
    def _compile_error(request: Request, err: CompileError):
        return JSONResponse(
            {"error": "compile failed",
             "diagnostics": [str(d) for d in err.diagnostics]},
            status_code=409)

    @app.exception_handler(LiveError)
    def _live_error(request: Request, err: LiveError):
        return JSONResponse(
            {"error": err.message, "kind": err.kind}, status_code=409)

    @app.exception_handler(ValueError)
    def _value_error(request: Request, err: ValueError):
        return JSONResponse({"error": str(err)}, status_code=400)

    def stamped(world, payload):
        payload["step"] = world.scheduler.step
        return payload

    # -- browsing ---------------------------------------------------------

    @app.get("/api/classes")
    def classes(view: str = ""):
        def work(world):
            stack = _eval_stack(world, _parse_view(world, view))
            names = set(world.env.base)
            for txn in stack:
                names.update(txn.env_delta)
            rows = []
            for name in sorted(names):
                cls = env_resolve(world.env, name, stack)
                if isinstance(cls, ClassObject):
                    rows.append(_class_row(world, cls, stack))
            return stamped(world, {"classes": rows,
                                   "view": [t.tag for t in stack]})
        return host.submit(work)

    @app.get("/api/method")
    def method(selector: str, view: str = "",
               klass: str = Query(alias="class")):
        def work(world):
            stack = _eval_stack(world, _parse_view(world, view))
            cls = env_resolve(world.env, klass, stack)
            if not isinstance(cls, ClassObject):
                return None
            hit = resolve_method(cls, selector, stack)
            if hit is None:
                return None
            compiled, tag = hit
            return stamped(world, {
                "class": klass, "selector": selector,
                "owner": compiled.defining_class.name
                if compiled.defining_class else None,
                "tag": tag, "source": compiled.source,
            })
        result = host.submit(work)
        if result is None:
            return JSONResponse(
                {"error": f"no {klass}>>{selector} in this view"},
                status_code=404)
        return result

    @app.get("/api/processes")
    def processes():
        def work(world):
            rows = []
            for pid in world.scheduler.run_order:
                proc = world.scheduler.processes[pid]
                rows.append({
                    "pid": pid, "name": proc.name, "status": proc.status,
                    "stack": proc.stack_tags(),
                    "pending": len(proc.pending),
                    "error": {"kind": proc.error.kind,
                              "message": proc.error.message}
                    if proc.error else None,
                })
            return stamped(world, {"processes": rows})
        return host.submit(work)

    # -- transactions -------------------------------------------------------

    @app.get("/api/transactions")
    def transactions():
        def work(world):
            rows = [_txn_row(world, t)
                    for t in world.registry.transactions.values()]
            return stamped(world, {
                "transactions": rows,
                "staged_order": [t.tag for t in world.registry.staged_order],
                "global_stack": [t.tag for t in world.global_stack],
            })
        return host.submit(work)

    @app.post("/api/transactions")
    def txn_create(body: dict):
        label = body.get("label", "")
        if not isinstance(label, str) or not label.strip():
            return JSONResponse({"error": "label required"}, status_code=400)

        def work(world):
            txn = world.txn_create(label.strip())
            if body.get("stage", True):
                world.txn_stage(txn.tag)
            return stamped(world, _txn_row(world, txn))
        return host.submit(work)

    def _lifecycle(tag, fn):
        def work(world):
            fn(world, tag)
            return stamped(world, _txn_row(world,
                                           world.registry.resolve(tag)))
        return host.submit(work)

    @app.post("/api/transactions/{tag}/stage")
    def txn_stage(tag: str):
        return _lifecycle(tag, lambda w, t: w.txn_stage(t))

    @app.post("/api/transactions/{tag}/unstage")
    def txn_unstage(tag: str):
        return _lifecycle(tag, lambda w, t: w.txn_unstage(t))

    @app.post("/api/transactions/{tag}/abort")
    def txn_abort(tag: str):
        def work(world):
            world.txn_abort(tag)
            return stamped(world, {"aborted": tag})
        return host.submit(work)

    @app.post("/api/transactions/{tag}/merge")
    def txn_merge(tag: str, body: dict | None = None):
        target = (body or {}).get("into", "base")

        def work(world):
            world.txn_merge(tag, target)
            return stamped(world, {"merged": tag, "into": target})
        return host.submit(work)

    def _scope(world, body):
        """targets absent/null means everywhere; [] is a caller mistake."""
        targets = body.get("targets", None)
        if targets is None:
            return None
        if not isinstance(targets, list) or not targets:
            raise ValueError("targets must be a non-empty list of pids, "
                             "or omitted to mean every process")
        procs = []
        for pid in targets:
            proc = world.scheduler.processes.get(pid)
            if proc is None:
                raise StaleTagError(f"no process {pid}")
            procs.append(proc)
        return procs

    @app.post("/api/transactions/{tag}/activate")
    def txn_activate(tag: str, body: dict | None = None):
        body = body or {}
        level = body.get("level", "method")
        more = body.get("also", [])

        def work(world):
            tags = [tag] + list(more)
            world.txn_activate(tags, targets=_scope(world, body),
                               level=level)
            return stamped(world, {"activating": tags, "level": level})
        return host.submit(work)

    @app.post("/api/transactions/{tag}/deactivate")
    def txn_deactivate(tag: str, body: dict | None = None):
        body = body or {}
        level = body.get("level", "method")
        more = body.get("also", [])

        def work(world):
            tags = [tag] + list(more)
            world.txn_deactivate(tags, targets=_scope(world, body),
                                 level=level)
            return stamped(world, {"deactivating": tags, "level": level})
        return host.submit(work)

    # -- editing and evaluating ----------------------------------------------

    @app.post("/api/accept")
    def accept(body: dict):
        source = body.get("source", "")
        target = body.get("target", "staged")
        if not source.strip():
            return JSONResponse({"error": "source required"},
                                status_code=400)
        if target not in ("staged", "base"):
            return JSONResponse({"error": "target is staged or base"},
                                status_code=400)

        def work(world):
            stack = [] if target == "base" else None
            cls, selector = world.accept_method(source, stack=stack,
                                                target=target)
            into = "base" if target == "base" \
                else world.registry.staged_top().tag
            return stamped(world, {"class": cls.name, "selector": selector,
                                   "target": into})
        return host.submit(work)

    @app.post("/api/scripts/import")
    def script_import(body: dict):
        text = body.get("text", "")
        if not text.strip():
            return JSONResponse({"error": "text required"}, status_code=400)

        def work(world):
            try:
                txn = scriptsmod.import_script(
                    world, text, body.get("filename", "<upload>"))
            except scriptsmod.ScriptError as err:
                raise ValueError(str(err)) from None
            return stamped(world, _txn_row(world, txn))
        return host.submit(work)

    @app.post("/api/eval")
    def eval_expr(body: dict):
        expr = body.get("expr", "")
        if not expr.strip():
            return JSONResponse({"error": "expr required"}, status_code=400)
        view = body.get("view", "")

        def work(world):
            stack = _eval_stack(world, _parse_view(world, view))
            proc = world.eval_expression(expr, stack, name="web-eval")
            try:
                if proc.error is not None:
                    return stamped(world, {
                        "result": None,
                        "error": {"kind": proc.error.kind,
                                  "message": proc.error.message}})
                return stamped(world,
                               {"result": world.format_value(proc.result),
                                "error": None})
            finally:
                world.scheduler.forget(proc)
        return host.submit(work)

    @app.post("/api/processes/{pid}/update")
    def proc_update(pid: int):
        def work(world):
            proc = world.scheduler.processes.get(pid)
            if proc is None:
                raise StaleTagError(f"no process {pid}")
            before = len(proc.pending)
            world.scheduler.apply_requests_quiescent(proc)
            return stamped(world, {
                "pid": pid, "applied": before - len(proc.pending),
                "stack": proc.stack_tags()})
        return host.submit(work)

    # -- tests and demos ---------------------------------------------------------

    @app.post("/api/tests/run")
    def tests_run(body: dict | None = None):
        body = body or {}
        pattern = body.get("pattern", "")
        view = body.get("view", "")

        def work(world):
            txns = _parse_view(world, view)
            report = testrun.run_tests(world, pattern=pattern, view=txns)
            return stamped(world, {
                "total": len(report.results), "passed": report.passed,
                "failed": report.failed, "errored": report.errored,
                "seconds": report.seconds,
                "results": [{"class": r.class_name, "selector": r.selector,
                             "outcome": r.outcome, "detail": r.detail}
                            for r in report.results]})
        return host.submit(work)

    @app.post("/api/demo/{name}/start")
    def demo_start(name: str, body: dict | None = None):
        body = body or {}

        def work(world):
            canonical = demosmod.canonical_name(name)
            existing = host.demos.get(canonical)
            if existing is not None and existing.running:
                raise TxnError(f"demo {canonical} is already running")
            handle = demosmod.start_demo(
                world, canonical,
                persons=int(body.get("persons", 100)),
                seed=int(body.get("seed", 42)),
                rate=int(body.get("rate", 600)))
            host.demos[canonical] = handle
            return handle
        handle = host.submit(work)
        if body.get("auto", True):
            host.set_auto(handle.name,
                          tick_seconds=float(body.get("tick_seconds", 0.05)),
                          snapshot_every=int(body.get("snapshot_every", 5)))
        return {"name": handle.name, "pid": handle.proc.pid}

    def _demo_handle(name):
        canonical = demosmod.canonical_name(name)
        handle = host.demos.get(canonical)
        if handle is None:
            raise StaleTagError(f"demo {canonical} is not running")
        return handle

    @app.post("/api/demo/{name}/step")
    def demo_step(name: str, body: dict | None = None):
        handle = _demo_handle(name)
        ticks = int((body or {}).get("ticks", 1))

        def work(world):
            handle.advance(ticks)
            return stamped(world, handle.snapshot())
        return host.submit(work)

    @app.get("/api/demo/{name}")
    def demo_status(name: str):
        handle = _demo_handle(name)

        def work(world):
            return stamped(world, handle.snapshot())
        return host.submit(work)

    @app.post("/api/demo/{name}/stop")
    def demo_stop(name: str):
        handle = _demo_handle(name)
        host.clear_auto(handle.name)

        def work(world):
            handle.stop()
            return stamped(world, {"name": handle.name,
                                   "status": handle.proc.status})
        return host.submit(work)

    # -- the event log -------------------------------------------------------------

    def _events_page(world, after, limit):
        log = world.scheduler.events
        first_seq = log[0]["seq"] if log else 0
        gap = after + 1 < first_seq and after > 0
        rows = [e for e in log if e["seq"] > after][:limit]
        return {"events": rows, "gap": gap,
                "dropped": world.scheduler.dropped_events,
                "last_seq": rows[-1]["seq"] if rows
                else (log[-1]["seq"] if log else 0)}

    @app.get("/api/events/log")
    def events_log(after: int = 0, limit: int = 1000):
        return host.submit(lambda w: stamped(w, _events_page(w, after,
                                                             limit)))

    @app.get("/api/events")
    def events_stream(after: int = 0, idle: float = 60.0):
        budget = max(1, int(idle / 0.1))

        def generate():
            cursor = after
            misses = 0
            while misses < budget:  # idle seconds of silence, then the
                page = host.submit(   # client is expected to reconnect
                    lambda w, c=cursor: _events_page(w, c, 500))
                if page["gap"]:
                    yield ("data: " + json.dumps(
                        {"kind": "gap",
                         "dropped": page["dropped"]}) + "\n\n")
                if page["events"]:
                    misses = 0
                    for event in page["events"]:
                        cursor = event["seq"]
                        yield "data: " + json.dumps(event) + "\n\n"
                else:
                    misses += 1
                    time.sleep(0.1)
            yield "event: timeout\ndata: {}\n\n"
        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/api/image")
    def image():
        def work(world):
            return stamped(world, {
                "hash": world.state_hash(),
                "classes": len(world.env.base),
                "processes": len(world.scheduler.processes),
                "transactions": len(world.registry.transactions),
                "events": len(world.scheduler.events),
            })
        return host.submit(work)

    return app


def serve(world, host="127.0.0.1", port=8000):  # pragma: no cover
    import uvicorn
    app = create_app(world)
    uvicorn.run(app, host=host, port=port, log_level="warning")
