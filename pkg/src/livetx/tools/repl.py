"""Interactive session over one world.

Anything that is not a command evaluates as an expression; the session's
view (global stack plus any transactions picked with `view`) scopes both
evaluation and method accepts. Method chunks are entered with `accept`
and closed by a line holding only !; they land in the staged top, or in
the base image with accept!. Background processes keep running: every
command pumps the scheduler a bounded number of slices, so a demo loop
advances while you edit it.
"""

from __future__ import annotations

from ..errors import CompileError, TxnError, LiveError
from ..world import World
from . import bench as benchmod
from . import demos as demosmod
from . import scripts as scriptsmod
from . import testrun

HELP = """\
commands:
  txn new <label...>         create a transaction
  txn stage <tag>            stage (top of the capture order)
  txn unstage <tag>
  txn merge <tag> [into <t>] fold into base or a staged parent
  txn abort <tag>
  txn list                   registry with states
  activate <tags> [level method|reentrant|manual]   everywhere
  deactivate <tags> [level ...]
  scope <pid> activate|deactivate <tags> [level ...]  one process
  view [tags... | clear]     transactions scoping eval and accept
  accept                     method chunk until !  (into staged top)
  accept!                    method chunk until !  (into base)
  load <file.st>             file-in a program (base)
  script <file.txns>         import a change script as one staged txn
  test [pattern]             run *Test classes under the session view
  autotest on|off            run tests after every accept (default on)
  bench call|state [iters]   dispatch cost sweep, 0..9 transactions
  demo <name> start|stop|status|step [n]
  ps                         processes
  update <pid>               apply pending activations at a quiet point
  run [slices]               pump the scheduler by hand
  events [n]                 tail of the event log
  quit
anything else evaluates as an expression under the session view."""

PUMP_SLICES = 50


class ReplSession:
    def __init__(self, world: World | None = None):
        self.world = world or World()
        self.view = []          # extra transactions on top of the global stack
        self.autotest = True
        self.demos = {}
        self.done = False

    # -- helpers -------------------------------------------------------------

    def _stack(self):
        stack = list(self.world.global_stack)
        for t in self.view:
            if t not in stack:
                stack.append(t)
        return stack

    def _resolve_tags(self, names):
        return [self.world.registry.resolve(n) for n in names]

    def _pump(self):
        self.world.scheduler.run(max_slices=PUMP_SLICES)

    def _split_level(self, words):
        level = "method"
        if len(words) >= 2 and words[-2] == "level":
            level = words[-1]
            words = words[:-2]
        return words, level

    # -- the entry point -----------------------------------------------------

    def execute(self, line: str, read_more=None) -> str:
        """Run one input line; returns the text to show. read_more() supplies
        continuation lines for method chunks."""
        try:
            out = self._dispatch(line, read_more or (lambda: "!"))
        except (TxnError, LiveError, ValueError,
                scriptsmod.ScriptError, OSError) as err:
            out = f"error: {err}"
        except CompileError as err:
            out = "\n".join(str(d) for d in err.diagnostics)
        self._pump()
        return out

    def _dispatch(self, line, read_more):
        stripped = line.strip()
        if not stripped or stripped.startswith('"'):
            return ""
        words = stripped.split()
        head = words[0]
        if head == "quit" or head == "exit":
            self.done = True
            return "bye"
        if head == "help":
            return HELP
        handler = getattr(self, f"_cmd_{head.rstrip('!')}", None)
        if head in ("accept", "accept!"):
            return self._cmd_accept(words, read_more, base=head == "accept!")
        if handler is not None and head in (
                "txn", "activate", "deactivate", "scope", "view", "load",
                "script", "test", "autotest", "bench", "demo", "ps",
                "update", "run", "events"):
            return handler(words)
        return self._eval(stripped)

    # -- evaluation and accepting --------------------------------------------

    def _eval(self, source):
        proc = self.world.eval_expression(source, self._stack(), name="it")
        try:
            if proc.error is not None:
                err = proc.error
                where = f" in #{err.selector}" if err.selector else ""
                return f"{err.kind}{where}: {err.message}"
            return self.world.format_value(proc.result)
        finally:
            self.world.scheduler.forget(proc)

    def _cmd_accept(self, words, read_more, base):
        lines = []
        while True:
            chunk_line = read_more()
            if chunk_line is None or chunk_line.strip() == "!":
                break
            lines.append(chunk_line)
        source = "\n".join(lines)
        if not source.strip():
            return "nothing to accept"
        target = "base" if base else "staged"
        stack = [] if base else None
        cls, selector = self.world.accept_method(
            source, stack=stack, target=target)
        into = "base" if base else self.world.registry.staged_top().tag
        msg = f"{cls.name}>>{selector} -> {into}"
        if self.autotest:
            report = testrun.run_tests(self.world, view=self.view)
            if report.results:
                msg += ("\n" + report.format().splitlines()[-1])
        return msg

    # -- transactions ----------------------------------------------------------

    def _cmd_txn(self, words):
        if len(words) < 2:
            return "txn new|stage|unstage|merge|abort|list ..."
        sub = words[1]
        w = self.world
        if sub == "new":
            label = " ".join(words[2:])
            txn = w.txn_create(label)
            return f"created {txn.tag} ({txn.label})"
        if sub == "list":
            lines = []
            staged = list(w.registry.staged_order)
            for txn in w.registry.transactions.values():
                state = "staged" if txn in staged else "unstaged"
                if txn in w.global_stack:
                    state += ", active"
                lines.append(f"{txn.tag:>4}  {state:<16} {txn.label}")
            return "\n".join(lines) or "no transactions"
        if len(words) < 3:
            return f"txn {sub} needs a tag"
        tag = words[2]
        if sub == "stage":
            w.txn_stage(tag)
            return f"staged {tag}"
        if sub == "unstage":
            w.txn_unstage(tag)
            return f"unstaged {tag}"
        if sub == "abort":
            w.txn_abort(tag)
            return f"aborted {tag}"
        if sub == "merge":
            target = words[4] if len(words) >= 5 and words[3] == "into" \
                else "base"
            w.txn_merge(tag, target)
            return f"merged {tag} into {target}"
        return f"unknown txn command {sub!r}"

    def _cmd_activate(self, words, deactivate=False):
        names, level = self._split_level(words[1:])
        if not names:
            return "which transactions?"
        txns = self._resolve_tags(names)
        if deactivate:
            self.world.txn_deactivate([t.tag for t in txns], level=level)
            return f"deactivating {' '.join(t.tag for t in txns)} everywhere"
        self.world.txn_activate([t.tag for t in txns], level=level)
        return (f"activating {' '.join(t.tag for t in txns)} everywhere "
                f"(level {level})")

    def _cmd_deactivate(self, words):
        return self._cmd_activate(words, deactivate=True)

    def _cmd_scope(self, words):
        if len(words) < 4:
            return "scope <pid> activate|deactivate <tags> [level ...]"
        proc = self._find_process(words[1])
        if proc is None:
            return f"no process {words[1]!r}"
        names, level = self._split_level(words[3:])
        txns = self._resolve_tags(names)
        if words[2] == "activate":
            self.world.txn_activate([t.tag for t in txns], targets=[proc],
                                    level=level)
        elif words[2] == "deactivate":
            self.world.txn_deactivate([t.tag for t in txns], targets=[proc],
                                      level=level)
        else:
            return "scope <pid> activate|deactivate ..."
        return f"{words[2]} {' '.join(t.tag for t in txns)} on {proc.name}"

    def _find_process(self, key):
        procs = self.world.scheduler.processes
        if key.isdigit() and int(key) in procs:
            return procs[int(key)]
        for proc in procs.values():
            if proc.name == key:
                return proc
        return None

    def _cmd_view(self, words):
        if len(words) == 1:
            tags = [t.tag for t in self.view] or ["(empty)"]
            return "view: " + " ".join(tags)
        if words[1] == "clear":
            self.view = []
            return "view cleared"
        self.view = self._resolve_tags(words[1:])
        return "view: " + " ".join(t.tag for t in self.view)

    # -- files, tests, benchmarks, demos ----------------------------------------

    def _cmd_load(self, words):
        if len(words) != 2:
            return "load <file.st>"
        with open(words[1], encoding="utf-8") as fh:
            report = self.world.load_program(fh.read(), filename=words[1])
        lines = [f"classes: {', '.join(report.classes) or '-'}",
                 f"methods: {len(report.methods)}"]
        lines += [str(e) for e in report.errors]
        return "\n".join(lines)

    def _cmd_script(self, words):
        if len(words) != 2:
            return "script <file.txns>"
        txn = scriptsmod.import_script_file(self.world, words[1])
        return f"imported as {txn.tag} ({txn.label}), staged"

    def _cmd_test(self, words):
        pattern = words[1] if len(words) > 1 else ""
        report = testrun.run_tests(self.world, pattern=pattern,
                                   view=self.view)
        return report.format()

    def _cmd_autotest(self, words):
        if len(words) == 2 and words[1] in ("on", "off"):
            self.autotest = words[1] == "on"
        return f"autotest {'on' if self.autotest else 'off'}"

    def _cmd_bench(self, words):
        variant = words[1] if len(words) > 1 else "call"
        iterations = int(words[2]) if len(words) > 2 else 10_000
        result = benchmod.run_variant(variant, iterations=iterations)
        return result.format_table()

    def _cmd_demo(self, words):
        if len(words) < 3:
            return "demo <name> start|stop|status|step [n]"
        name, action = words[1], words[2]
        if action == "start":
            if name in self.demos and self.demos[name].running:
                return f"{name} already running"
            handle = demosmod.start_demo(self.world, name)
            self.demos[handle.name] = handle
            return f"{handle.name} running as pid {handle.proc.pid}"
        handle = self.demos.get(demosmod.canonical_name(name))
        if handle is None:
            return f"{name} is not running"
        if action == "stop":
            handle.stop()
            return f"{handle.name} stopped"
        if action == "step":
            n = int(words[3]) if len(words) > 3 else 1
            handle.advance(n)
            return str(handle.snapshot())
        if action == "status":
            return str(handle.snapshot())
        return "demo <name> start|stop|status|step [n]"

    # -- processes ---------------------------------------------------------------

    def _cmd_ps(self, words):
        lines = []
        for pid in self.world.scheduler.run_order:
            proc = self.world.scheduler.processes[pid]
            stack = " ".join(proc.stack_tags()) or "-"
            note = ""
            if proc.error is not None:
                note = f"  {proc.error.kind}: {proc.error.message}"
            if proc.pending:
                note += f"  ({len(proc.pending)} pending)"
            lines.append(f"{pid:>4}  {proc.status:<12} [{stack}] "
                         f"{proc.name}{note}")
        return "\n".join(lines) or "no processes"

    def _cmd_update(self, words):
        if len(words) != 2:
            return "update <pid>"
        proc = self._find_process(words[1])
        if proc is None:
            return f"no process {words[1]!r}"
        before = len(proc.pending)
        self.world.scheduler.apply_requests_quiescent(proc)
        applied = before - len(proc.pending)
        return (f"applied {applied} request(s); stack now "
                f"[{' '.join(proc.stack_tags())}]")

    def _cmd_run(self, words):
        n = int(words[1]) if len(words) > 1 else 1000
        outcome = self.world.scheduler.run(max_slices=n)
        return f"scheduler: {outcome}"

    def _cmd_events(self, words):
        n = int(words[1]) if len(words) > 1 else 10
        rows = list(self.world.scheduler.events)[-n:]
        return "\n".join(str(r) for r in rows) or "no events"


def main_loop(session: ReplSession, stdin=None):  # pragma: no cover
    import sys
    stream = stdin or sys.stdin
    lines = iter(stream.readline, "")

    def read_more():
        sys.stdout.write("....  ")
        sys.stdout.flush()
        return next(lines, None)

    sys.stdout.write("live image; help lists the commands\n")
    while not session.done:
        sys.stdout.write("livetx> ")
        sys.stdout.flush()
        line = next(lines, None)
        if line is None:
            break
        out = session.execute(line, read_more)
        if out:
            sys.stdout.write(out + "\n")
