"""Cooperative round-robin scheduler and activation machinery.

Processes advance in spawn order, one slice at a time. A slice ends at a
send boundary or loop back edge (when several processes are runnable), at
the instruction budget, at a wait:, at a barrier park, or when the process
finishes. Everything is deterministic: same world, same commands, same
seeds, same event log.

Activation requests change per-process transaction stacks only at safe
points. A multi-target request shares one barrier: every runnable member
parks on arrival until all have arrived, then all stacks change in the
same scheduler step.
"""

from __future__ import annotations

from livetx.errors import HierarchyViolation, TxnError
from livetx.interp import executor
from livetx.interp.process import (
    BARRIER_WAIT, RUNNABLE, TERMINATED, ActivationBarrier, ActivationRequest,
)
from livetx.kernel import NO_CHANGE, superclass_chain

MULTI_SLICE = 400          # instruction budget when interleaving
SOLO_SLICE = 60000         # budget when only one process is runnable
EVENT_CAP = 200000

_LEVELS = ("method", "reentrant", "manual")


class Scheduler:
    def __init__(self, world):
        self.world = world
        self.processes = {}
        self.run_order = []
        self.events = []
        self.dropped_events = 0
        self.seq = 0
        self.step = 0
        self.log_dispatch = True
        self._next_rid = 1
        self._armed = {}  # rid -> ActivationRequest with a live barrier

    # -- events ------------------------------------------------------------

    def emit(self, kind, **payload):
        self.seq += 1
        event = {"seq": self.seq, "step": self.step, "kind": kind}
        event.update(payload)
        self.events.append(event)
        if len(self.events) > EVENT_CAP:
            drop = len(self.events) // 2
            del self.events[:drop]
            self.dropped_events += drop
        return event

    # -- process lifecycle ---------------------------------------------------

    def register(self, proc):
        self.processes[proc.pid] = proc
        self.run_order.append(proc.pid)
        self.emit("process-spawn", pid=proc.pid, name=proc.name,
                  stack=proc.stack_tags())
        return proc

    def process_finished(self, proc):
        from livetx.interp.builtins import print_string
        self.emit("process-terminate", pid=proc.pid,
                  result=print_string(self.world, proc.result))
        proc.pending.clear()
        self._drop_from_barriers(proc)

    def forget(self, proc):
        """Unregister a throwaway process (test cases, probes). Its pid is
        retired; events already emitted about it stay in the log."""
        self.processes.pop(proc.pid, None)
        if proc.pid in self.run_order:
            self.run_order.remove(proc.pid)
        self._drop_from_barriers(proc)

    def process_failed(self, proc, collected_hooks):
        self.emit("process-suspend", pid=proc.pid,
                  error_kind=proc.error.kind if proc.error else None,
                  message=proc.error.message if proc.error else None)
        proc.pending.clear()
        self._drop_from_barriers(proc)

    def _drop_from_barriers(self, proc):
        for rid in list(self._armed):
            request = self._armed[rid]
            barrier = request.barrier
            if proc.pid in barrier.members:
                barrier.members.discard(proc.pid)
                barrier.arrived.discard(proc.pid)
                if barrier.members and barrier.complete():
                    self._fire(request)
                elif not barrier.members:
                    self._armed.pop(rid, None)

    # -- the run loop --------------------------------------------------------

    def runnable(self):
        return [self.processes[pid] for pid in self.run_order
                if self.processes[pid].status == RUNNABLE]

    def run(self, max_slices=1_000_000, until=None):
        """Drive all runnable processes until none is left, the predicate
        holds, or the slice budget runs out."""
        slices = 0
        while slices < max_slices:
            batch = self.runnable()
            if not batch:
                return "stalled" if self._armed and any(
                    p.status == BARRIER_WAIT for p in self.processes.values()
                ) else "idle"
            multi = len(batch) > 1
            for proc in batch:
                if proc.status != RUNNABLE:
                    continue  # parked or finished by a barrier this sweep
                self.step += 1
                executor.execute(self, proc,
                                 MULTI_SLICE if multi else SOLO_SLICE, multi)
                slices += 1
                if until is not None and until():
                    return "until"
                if slices >= max_slices:
                    break
        return "budget"

    def run_process(self, proc, max_slices=1_000_000):
        """Run until proc stops being runnable; other processes keep their
        turns so barriers can make progress."""
        def done():
            return proc.status != RUNNABLE
        if proc.status != RUNNABLE:
            return proc.status
        self.run(max_slices=max_slices, until=done)
        return proc.status

    def run_alone(self, proc, max_slices=1_000_000):
        """Run one process without giving anyone else a turn. For probes,
        test cases and evals that must not advance the rest of the image."""
        saved = self.run_order
        self.run_order = [proc.pid]
        try:
            return self.run_process(proc, max_slices)
        finally:
            spawned = [p for p in self.run_order if p != proc.pid]
            self.run_order = saved + spawned

    # -- activation requests ---------------------------------------------------

    def request_activation(self, targets=None, push=(), remove=(),
                           level="method"):
        """Schedule a scoped stack change. targets=None means every process
        plus the default stack for future spawns. Returns the request id."""
        if level not in _LEVELS:
            raise TxnError(f"unknown consistency level {level!r}")
        push = tuple(push)
        remove = tuple(remove)
        registry = self.world.registry
        for t in push:
            if t.tag not in registry.transactions:
                raise TxnError(f"transaction {t.tag!r} is not registered")

        global_too = targets is None
        if global_too:
            targets = [self.processes[pid] for pid in self.run_order
                       if self.processes[pid].status != TERMINATED]

        # eager hierarchy validation: reject before anything changes
        for proc in targets:
            self._check_hierarchy(self._future_stack(proc.activation_stack,
                                                     push, remove))
        if global_too:
            new_global = self._future_stack(self.world.global_stack, push, remove)
            self._check_hierarchy(new_global)

        rid = self._next_rid
        self._next_rid += 1
        request = ActivationRequest(rid=rid, push=push, remove=remove,
                                    level=level)
        self.emit("activation-requested", rid=rid, level=level,
                  push=[t.tag for t in push], remove=[t.tag for t in remove],
                  targets=[p.pid for p in targets],
                  scope="all" if global_too else "listed")

        if global_too:
            self.world.global_stack = self._future_stack(
                self.world.global_stack, push, remove)

        waiting = []
        immediate = []
        for proc in targets:
            if proc.status == TERMINATED:
                continue
            if not self._affects(proc, push, remove):
                continue
            if proc.status == RUNNABLE:
                waiting.append(proc)
            else:
                immediate.append(proc)

        for proc in immediate:
            self._apply_stack_change(proc, request)
            request.applied.add(proc.pid)

        if waiting:
            request.barrier = ActivationBarrier(
                members={p.pid for p in waiting})
            self._armed[rid] = request
            for proc in waiting:
                hooked = False
                if level == "reentrant":
                    frame = self._bottom_most_involved(proc, request)
                    if frame is not None:
                        if frame.hooks is None:
                            frame.hooks = []
                        frame.hooks.append(request)
                        hooked = True
                if not hooked:
                    proc.pending.append(request)
                if proc.atomic_depth > 0 and proc.pid not in request.deferred_logged:
                    request.deferred_logged.add(proc.pid)
                    self.emit("activation-deferred", pid=proc.pid, rid=rid,
                              reason="atomic-region")
                elif level == "manual" and proc.pid not in request.deferred_logged:
                    request.deferred_logged.add(proc.pid)
                    self.emit("activation-deferred", pid=proc.pid, rid=rid,
                              reason="manual")
        return rid

    def _future_stack(self, stack, push, remove):
        out = [t for t in stack if t not in remove]
        for t in push:
            if t not in out:
                out.append(t)
        return out

    def _check_hierarchy(self, stack):
        for cls in self.world.all_classes():
            for _ in superclass_chain(cls, stack):
                pass  # raises HierarchyViolation on a cycle

    def _affects(self, proc, push, remove):
        stack = proc.activation_stack
        return any(t not in stack for t in push) or any(t in stack for t in remove)

    # -- safe points -----------------------------------------------------------

    def safe_point(self, proc, include_manual=False):
        """Process proc's pending requests at a legal boundary. Returns
        "parked" if the process ended up waiting on a barrier."""
        if proc.atomic_depth > 0:
            return None
        i = 0
        while i < len(proc.pending):
            request = proc.pending[i]
            if request.level == "manual" and not include_manual:
                i += 1
                continue
            proc.pending.pop(i)
            if proc.pid in request.applied:
                continue
            if request.barrier is None or request.barrier.fired:
                self._apply_stack_change(proc, request)
                request.applied.add(proc.pid)
                continue
            if self._arrive(proc, request, stash=None) == "parked":
                return "parked"
        return None

    def hook_fired(self, proc, request, stash):
        """A hooked frame returned: this is the reentrant boundary."""
        if proc.pid in request.applied:
            return None
        if proc.atomic_depth > 0:
            proc.pending.append(request)
            if proc.pid not in request.deferred_logged:
                request.deferred_logged.add(proc.pid)
                self.emit("activation-deferred", pid=proc.pid,
                          rid=request.rid, reason="atomic-region")
            return None
        if request.barrier is None or request.barrier.fired:
            self._apply_stack_change(proc, request)
            request.applied.add(proc.pid)
            return None
        return self._arrive(proc, request, stash)

    def _arrive(self, proc, request, stash):
        barrier = request.barrier
        barrier.arrived.add(proc.pid)
        if barrier.complete():
            self._fire(request)
            return None
        proc.status = BARRIER_WAIT
        proc.parked_return = stash
        self.emit("barrier-entered", pid=proc.pid, rid=request.rid,
                  waiting_for=sorted(barrier.members - barrier.arrived))
        return "parked"

    def _fire(self, request):
        barrier = request.barrier
        barrier.fired = True
        self._armed.pop(request.rid, None)
        self.emit("barrier-fired", rid=request.rid,
                  members=sorted(barrier.arrived))
        for pid in sorted(barrier.arrived):
            proc = self.processes.get(pid)
            if proc is None or proc.status == TERMINATED:
                continue
            self._apply_stack_change(proc, request)
            request.applied.add(pid)
            if proc.status == BARRIER_WAIT:
                self._unpark(proc)

    def _unpark(self, proc):
        proc.status = RUNNABLE
        stash = proc.parked_return
        proc.parked_return = None
        if stash is not None:
            frame, value = stash
            if frame is None:
                proc.status = TERMINATED
                proc.result = value
                self.process_finished(proc)
            else:
                frame.ostack.append(value)

    def _apply_stack_change(self, proc, request):
        registry = self.world.registry
        stack = list(proc.activation_stack)
        for t in request.remove:
            if t in stack:
                stack.remove(t)
        for t in request.push:
            if t not in stack and t.tag in registry.transactions:
                stack.append(t)
        proc.set_stack(stack)
        for frame in proc.frames():
            wrapper = frame.wrapper
            if wrapper is not None and wrapper[0] == "withtxn":
                deltas = wrapper[2]
                for t in request.remove:
                    deltas.append(("-", t))
                for t in request.push:
                    deltas.append(("+", t))
        self.emit("activation-applied", pid=proc.pid, rid=request.rid,
                  level=request.level, stack=proc.stack_tags())

    def apply_requests_quiescent(self, proc):
        """Apply whatever is pending on a process that is not mid-slice.
        Arrivals are registered without changing the process status; a
        barrier that is still short stays armed."""
        keep = []
        for request in proc.pending:
            if proc.pid in request.applied:
                continue
            barrier = request.barrier
            if barrier is not None and not barrier.fired \
                    and proc.pid in barrier.members:
                barrier.arrived.add(proc.pid)
                if barrier.complete():
                    self._fire(request)
                else:
                    keep.append(request)
            else:
                self._apply_stack_change(proc, request)
                request.applied.add(proc.pid)
        proc.pending[:] = keep

    # -- merge/abort support -----------------------------------------------------

    def remove_txn_everywhere(self, txn):
        for pid in self.run_order:
            proc = self.processes[pid]
            if txn in proc.activation_stack:
                stack = [t for t in proc.activation_stack if t is not txn]
                proc.set_stack(stack)
                self.emit("stack-pruned", pid=pid, tag=txn.tag,
                          stack=proc.stack_tags())
        if txn in self.world.global_stack:
            self.world.global_stack = [t for t in self.world.global_stack
                                       if t is not txn]

    # -- reentrant involvement ---------------------------------------------------

    def _bottom_most_involved(self, proc, request):
        ops = request.push + request.remove
        best = None
        for frame in proc.frames():  # top -> bottom
            method = frame.method
            if method is None:
                continue
            if self._method_involved(method, ops, proc.activation_stack):
                best = frame
        return best

    def _method_involved(self, method, ops, stack):
        defcls = method.defining_class
        if defcls is None:
            return False
        selector = method.selector
        fields = method.field_names
        try:
            chain = superclass_chain(defcls, stack)
        except HierarchyViolation:
            return True
        for k in chain:
            for txn in ops:
                ch = txn.class_changes.get(k.ident)
                if ch is None:
                    continue
                if k is defcls and selector in ch.method_changes:
                    return True
                if fields and (fields & (set(ch.field_adds) | ch.field_removes)):
                    return True
                if ch.superclass_change is not NO_CHANGE:
                    return True
        return False
