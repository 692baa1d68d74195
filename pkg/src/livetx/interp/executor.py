"""The instruction machine.

One flat loop per scheduler slice; user code never recurses into Python, so
processes can be interleaved and parked at any send boundary or loop back
edge. Methods resolve at call time against the process's activation stack;
a frame keeps whatever method it started with.
"""

from __future__ import annotations

from livetx.errors import (
    BLOCK_CANNOT_RETURN, DOES_NOT_UNDERSTAND, NON_BOOLEAN_RECEIVER, LiveError,
)
from livetx.interp.process import (
    ERROR, TERMINATED, BlockClosure, Frame, Process,
)
from livetx.kernel import DELETED, NO_CHANGE, REMOVED, ClassObject, Instance

_ARITH = {"+", "-", "*", "/", "//", "\\\\", "<", "<=", ">", ">=", "=", "~="}

# sentinel a builtin handler returns after parking its own process
PARKED = object()

# cache-miss sentinel; resolution results (including None) are memoized per
# process while (world.meta_epoch, proc.stack_token) stand still
_MISS = object()


class BlockCall:
    """Returned by builtin handlers that need a block evaluated; the block's
    value flows to the original sender (optionally through `post`)."""

    __slots__ = ("closure", "args", "post")

    def __init__(self, closure, args=(), post=None):
        self.closure = closure
        self.args = args
        self.post = post


class Yield:
    """Returned by builtin handlers that end the slice (wait:)."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


# ---------------------------------------------------------------------------
# Tight resolution loops over a top-first transaction tuple. Semantics match
# kernel.resolve_method / kernel.resolve_field; the property suites compare
# both against the replay oracle.

def resolve_method_fast(cls, selector, rev):
    k = cls
    depth = 0
    while k is not None:
        entry = k.methods.get(selector)
        if entry is not None:
            versions = entry.versions
            m = None
            mtag = None
            for t in rev:
                v = versions.get(t.tag)
                if v is not None:
                    m = v
                    mtag = t.tag
                    break
            if m is None:
                v = versions.get("base")
                if v is not None:
                    return v, "base"
            elif m is not REMOVED:
                return m, mtag
            # removal marker: dispatch to the effective superclass immediately
        sup = k.base_superclass
        for t in rev:
            ch = t.class_changes.get(k.ident)
            if ch is not None and ch.superclass_change is not NO_CHANGE:
                sup = ch.superclass_change
                break
        k = sup
        depth += 1
        if depth > 256:
            raise LiveError("hierarchy-violation",
                            f"superclass chain of {cls.name} does not terminate")
    return None


def resolve_field_alias(defcls, name, rev):
    """Alias for the declared field, or None meaning the single cell of
    (defcls.name, name)."""
    k = defcls
    depth = 0
    while k is not None:
        decided = 0
        alias = None
        for t in rev:
            ch = t.class_changes.get(k.ident)
            if ch is None:
                continue
            alias = ch.field_adds.get(name)
            if alias is not None:
                decided = 1
                break
            if name in ch.field_removes:
                decided = 2
                break
        if decided == 1:
            return alias
        if decided == 0:
            alias = k.base_fields.get(name)
            if alias is not None:
                return alias
        sup = k.base_superclass
        for t in rev:
            ch = t.class_changes.get(k.ident)
            if ch is not None and ch.superclass_change is not NO_CHANGE:
                sup = ch.superclass_change
                break
        k = sup
        depth += 1
        if depth > 256:
            raise LiveError("hierarchy-violation",
                            f"superclass chain of {defcls.name} does not terminate")
    return None


def _thaw(template):
    return [_thaw(x) if isinstance(x, tuple) else x for x in template]


# ---------------------------------------------------------------------------
# Frame plumbing

def push_method_frame(proc, method, receiver, args):
    frame = Frame(method.code, receiver, method, sender=proc.top)
    frame.temps = list(args) + [None] * method.ntemps
    proc.top = frame
    return frame


def push_block_frame(proc, closure, args, post=None):
    proto = closure.proto
    if len(args) != proto.nparams:
        raise LiveError("primitive-failed",
                        f"block expects {proto.nparams} arguments, got {len(args)}")
    home = closure.home
    if not home.alive:
        # the defining method returned; running the block is still legal,
        # only ^ returns from it are not
        pass
    frame = Frame(proto.code, home.receiver, home.method, home=home,
                  lexical=closure.lexical, sender=proc.top, is_block=True)
    frame.temps = list(args) + [None] * proto.ntemps
    frame.post = post
    proc.top = frame
    return frame


def pop_frame(scheduler, proc, value, unwind=False, collected_hooks=None):
    """Pop proc.top delivering value to the sender.

    Returns "parked" when a barrier stalled the return, "done" when the root
    frame popped, None otherwise. During unwinds hooks are collected for the
    caller instead of fired in place.
    """
    frame = proc.top
    frame.alive = False
    if frame.post is not None and not unwind:
        value = frame.post(value)
    wrapper = frame.wrapper
    if wrapper is not None:
        if wrapper[0] == "withtxn":
            _restore_scoped_stack(scheduler, proc, wrapper)
        elif wrapper[0] == "atomic":
            proc.atomic_depth -= 1
            if proc.atomic_depth == 0 and collected_hooks is not None:
                collected_hooks.append(("atomic-exit", None))
    if frame.hooks:
        hooks = frame.hooks
        for i, request in enumerate(hooks):
            if proc.pid in request.applied:
                continue
            if collected_hooks is not None:
                collected_hooks.append(("hook", request))
            else:
                outcome = scheduler.hook_fired(proc, request, (frame.sender, value))
                if outcome == "parked":
                    # remaining hooks retry at the next safe point; their
                    # frame is gone so they apply without further delay
                    for later in hooks[i + 1:]:
                        if proc.pid not in later.applied:
                            proc.pending.append(later)
                    proc.top = frame.sender
                    return "parked"
    proc.top = frame.sender
    if frame.sender is None:
        proc.status = TERMINATED
        proc.result = value
        scheduler.process_finished(proc)
        return "done"
    frame.sender.ostack.append(value)
    if wrapper is not None and wrapper[0] == "atomic" and proc.atomic_depth == 0 \
            and collected_hooks is None:
        # outermost atomic region exit: a safe point where even manual-level
        # requests apply
        if scheduler.safe_point(proc, include_manual=True) == "parked":
            return "parked"
    return None


def _restore_scoped_stack(scheduler, proc, wrapper):
    _, entry, deltas = wrapper
    stack = [t for t in entry if t.tag in scheduler.world.registry.transactions]
    for op, txn in deltas:
        if op == "+":
            if txn not in stack and txn.tag in scheduler.world.registry.transactions:
                stack.append(txn)
        else:
            if txn in stack:
                stack.remove(txn)
    proc.set_stack(stack)


def unwind_to_home(scheduler, proc, home, value):
    """Non-local return: pop everything above and including home, then
    deliver value to home's sender. Hooks fire after the unwind settles."""
    collected = []
    while proc.top is not None:
        frame = proc.top
        is_home = frame is home
        result = pop_frame(scheduler, proc, value if is_home else None,
                           unwind=not is_home, collected_hooks=collected)
        if is_home:
            return collected, result
    return collected, None


def unwind_all(scheduler, proc):
    collected = []
    while proc.top is not None:
        pop = proc.top
        pop.alive = False
        if pop.wrapper is not None:
            if pop.wrapper[0] == "withtxn":
                _restore_scoped_stack(scheduler, proc, pop.wrapper)
            elif pop.wrapper[0] == "atomic":
                proc.atomic_depth -= 1
        if pop.hooks:
            for request in pop.hooks:
                if proc.pid not in request.applied:
                    collected.append(("hook", request))
        proc.top = pop.sender
    return collected


# ---------------------------------------------------------------------------
# The main loop

def execute(scheduler, proc, limit, multi):
    """Run proc until a yield point (multi), the instruction budget, a park,
    termination or an error. Returns the reason."""
    world = scheduler.world
    registry_txns = world.registry.transactions
    storage = world.storage
    cells = storage.cells
    singles = storage.singles
    overlay = proc.overlay
    log = scheduler
    log_dispatch = scheduler.log_dispatch
    typed_builtins = world.typed_builtins
    generic_builtins = world.generic_builtins
    class_side = world.class_side_builtins

    frame = proc.top
    if frame is None:
        proc.status = TERMINATED
        return "done"
    code = frame.code
    pc = frame.pc
    ostack = frame.ostack
    temps = frame.temps
    executed = 0
    boundary_seen = False

    def sync():
        frame.pc = pc

    try:
        while True:
            op, a, b = code[pc]
            executed += 1

            if op == 3:  # PUSH_TEMP
                if a == 0:
                    ostack.append(temps[b])
                else:
                    f = frame.lexical
                    for _ in range(a - 1):
                        f = f.lexical
                    ostack.append(f.temps[b])
                pc += 1

            elif op == 1:  # PUSH_LIT
                ostack.append(a)
                pc += 1

            elif op == 2:  # PUSH_SELF
                ostack.append(frame.receiver)
                pc += 1

            elif op == 5:  # PUSH_FIELD
                rcv = frame.receiver
                defcls = frame.method.defining_class
                if proc.cache_meta != world.meta_epoch \
                        or proc.cache_stack != proc.stack_token:
                    proc.mcache.clear()
                    proc.fcache.clear()
                    proc.cache_meta = world.meta_epoch
                    proc.cache_stack = proc.stack_token
                fkey = (defcls, a)
                alias = proc.fcache.get(fkey, _MISS)
                if alias is _MISS:
                    alias = resolve_field_alias(defcls, a, proc.rev_txns)
                    proc.fcache[fkey] = alias
                if alias is not None:
                    key = (rcv.iid, alias)
                    if overlay is not None and key in overlay:
                        ostack.append(overlay[key])
                    else:
                        ostack.append(cells.get(key))
                else:
                    key = (defcls.name, a)
                    if overlay is not None and ("single", key) in overlay:
                        ostack.append(overlay[("single", key)])
                    else:
                        ostack.append(singles.get(key))
                pc += 1

            elif op == 6:  # STORE_FIELD
                rcv = frame.receiver
                defcls = frame.method.defining_class
                if proc.cache_meta != world.meta_epoch \
                        or proc.cache_stack != proc.stack_token:
                    proc.mcache.clear()
                    proc.fcache.clear()
                    proc.cache_meta = world.meta_epoch
                    proc.cache_stack = proc.stack_token
                fkey = (defcls, a)
                alias = proc.fcache.get(fkey, _MISS)
                if alias is _MISS:
                    alias = resolve_field_alias(defcls, a, proc.rev_txns)
                    proc.fcache[fkey] = alias
                value = ostack.pop()
                if overlay is not None:
                    if alias is not None:
                        overlay[(rcv.iid, alias)] = value
                    else:
                        overlay[("single", (defcls.name, a))] = value
                elif alias is not None:
                    cells[(rcv.iid, alias)] = value
                    storage.journal_len += 1
                else:
                    singles[(defcls.name, a)] = value
                    storage.journal_len += 1
                pc += 1

            elif op == 9 or op == 10:  # SEND / SUPER_SEND
                # slices end only at boundaries like this one, so between
                # slices every process sits at a legal stack-change point
                if boundary_seen and (multi or executed >= limit):
                    sync()
                    proc.instr_count += executed
                    return "yield" if multi else "budget"
                boundary_seen = True
                if proc.pending and proc.atomic_depth == 0:
                    sync()
                    if scheduler.safe_point(proc) == "parked":
                        proc.instr_count += executed
                        return "parked"
                argc = b
                selector = a

                if op == 9:
                    if argc == 1:
                        rcv = ostack[-2]
                        trcv = rcv.__class__
                        if (trcv is int or trcv is float) and selector in _ARITH:
                            arg = ostack[-1]
                            targ = arg.__class__
                            if targ is int or targ is float:
                                ostack.pop()
                                try:
                                    if selector == "+":
                                        ostack[-1] = rcv + arg
                                    elif selector == "-":
                                        ostack[-1] = rcv - arg
                                    elif selector == "*":
                                        ostack[-1] = rcv * arg
                                    elif selector == "<":
                                        ostack[-1] = rcv < arg
                                    elif selector == ">":
                                        ostack[-1] = rcv > arg
                                    elif selector == "<=":
                                        ostack[-1] = rcv <= arg
                                    elif selector == ">=":
                                        ostack[-1] = rcv >= arg
                                    elif selector == "=":
                                        ostack[-1] = rcv == arg
                                    elif selector == "~=":
                                        ostack[-1] = rcv != arg
                                    elif selector == "/":
                                        ostack[-1] = rcv / arg
                                    elif selector == "//":
                                        ostack[-1] = rcv // arg
                                    else:  # \\
                                        ostack[-1] = rcv % arg
                                except ZeroDivisionError:
                                    raise LiveError("primitive-failed", "division by zero",
                                                    selector=selector) from None
                                pc += 1
                                continue
                        elif trcv is list:
                            if selector == "at:":
                                idx = ostack.pop()
                                if idx.__class__ is int and 1 <= idx <= len(rcv):
                                    ostack[-1] = rcv[idx - 1]
                                    pc += 1
                                    continue
                                raise LiveError("primitive-failed",
                                                f"array index {idx!r} out of bounds",
                                                selector="at:")
                        elif trcv is BlockClosure and selector == "value:":
                            arg = ostack.pop()
                            ostack.pop()
                            frame.pc = pc + 1
                            frame = push_block_frame(proc, rcv, (arg,))
                            code = frame.code
                            pc = frame.pc
                            ostack = frame.ostack
                            temps = frame.temps
                            continue
                        if trcv is BlockClosure and selector == "inTransactions:":
                            arg = ostack.pop()
                            ostack.pop()
                            frame.pc = pc + 1
                            frame = _push_scoped_block(scheduler, proc, rcv, arg)
                            code = frame.code
                            pc = frame.pc
                            ostack = frame.ostack
                            temps = frame.temps
                            continue
                        if trcv is Process and selector == "atomicDo:":
                            arg = ostack.pop()
                            ostack.pop()
                            if arg.__class__ is not BlockClosure:
                                raise LiveError("primitive-failed",
                                                "atomicDo: needs a block argument")
                            frame.pc = pc + 1
                            frame = push_block_frame(proc, arg, ())
                            frame.wrapper = ("atomic",)
                            proc.atomic_depth += 1
                            code = frame.code
                            pc = frame.pc
                            ostack = frame.ostack
                            temps = frame.temps
                            continue
                    elif argc == 2 and ostack[-3].__class__ is list and selector == "at:put:":
                        value = ostack.pop()
                        idx = ostack.pop()
                        rcv = ostack[-1]
                        if idx.__class__ is int and 1 <= idx <= len(rcv):
                            rcv[idx - 1] = value
                            ostack[-1] = value
                            pc += 1
                            continue
                        raise LiveError("primitive-failed",
                                        f"array index {idx!r} out of bounds",
                                        selector="at:put:")
                    elif argc == 0:
                        rcv = ostack[-1]
                        trcv = rcv.__class__
                        if trcv is list and selector == "size":
                            ostack[-1] = len(rcv)
                            pc += 1
                            continue
                        if trcv is BlockClosure and selector == "value":
                            ostack.pop()
                            frame.pc = pc + 1
                            frame = push_block_frame(proc, rcv, ())
                            code = frame.code
                            pc = frame.pc
                            ostack = frame.ostack
                            temps = frame.temps
                            continue
                    if argc == 3 and ostack[-4].__class__ is BlockClosure \
                            and selector == "value:value:value:":
                        args = ostack[-3:]
                        del ostack[-3:]
                        rcv = ostack.pop()
                        frame.pc = pc + 1
                        frame = push_block_frame(proc, rcv, tuple(args))
                        code = frame.code
                        pc = frame.pc
                        ostack = frame.ostack
                        temps = frame.temps
                        continue
                    if argc == 2 and ostack[-3].__class__ is BlockClosure \
                            and selector == "value:value:":
                        args = ostack[-2:]
                        del ostack[-2:]
                        rcv = ostack.pop()
                        frame.pc = pc + 1
                        frame = push_block_frame(proc, rcv, tuple(args))
                        code = frame.code
                        pc = frame.pc
                        ostack = frame.ostack
                        temps = frame.temps
                        continue

                # general dispatch
                rcv = ostack[-argc - 1] if argc else ostack[-1]
                trcv = rcv.__class__
                if trcv is Instance:
                    rcls = rcv.cls
                elif trcv is ClassObject:
                    rcls = None
                else:
                    rcls = world.type_classes.get(trcv)

                if proc.cache_meta != world.meta_epoch \
                        or proc.cache_stack != proc.stack_token:
                    proc.mcache.clear()
                    proc.fcache.clear()
                    proc.cache_meta = world.meta_epoch
                    proc.cache_stack = proc.stack_token
                mcache = proc.mcache
                hit = None
                if op == 10:
                    defcls = frame.method.defining_class
                    mkey = (defcls, selector, 0)
                    hit = mcache.get(mkey, _MISS)
                    if hit is _MISS:
                        start = defcls.base_superclass
                        for t in proc.rev_txns:
                            ch = t.class_changes.get(defcls.ident)
                            if ch is not None and ch.superclass_change is not NO_CHANGE:
                                start = ch.superclass_change
                                break
                        hit = None
                        if start is not None:
                            hit = resolve_method_fast(start, selector, proc.rev_txns)
                        mcache[mkey] = hit
                elif rcls is not None:
                    mkey = (rcls, selector)
                    hit = mcache.get(mkey, _MISS)
                    if hit is _MISS:
                        hit = resolve_method_fast(rcls, selector, proc.rev_txns)
                        mcache[mkey] = hit

                if hit is not None:
                    method, tag = hit
                    if log_dispatch:
                        log.emit("dispatch", pid=proc.pid, selector=selector,
                                 receiver_class=rcls.name if rcls else "?",
                                 version=tag)
                    args = tuple(ostack[len(ostack) - argc:]) if argc else ()
                    if argc:
                        del ostack[-argc:]
                    ostack.pop()
                    if len(args) != method.nparams:
                        raise LiveError("primitive-failed",
                                        f"{selector} expects {method.nparams} arguments",
                                        selector=selector)
                    frame.pc = pc + 1
                    frame = push_method_frame(proc, method, rcv, args)
                    code = frame.code
                    pc = frame.pc
                    ostack = frame.ostack
                    temps = frame.temps
                    continue

                # builtin fallback, then does-not-understand
                args = tuple(ostack[len(ostack) - argc:]) if argc else ()
                if argc:
                    del ostack[-argc:]
                ostack.pop()
                handler = None
                if trcv is ClassObject:
                    handler = class_side.get(selector)
                if handler is None:
                    handler = typed_builtins.get((trcv, selector))
                if handler is None:
                    handler = generic_builtins.get(selector)
                if handler is None:
                    raise LiveError(
                        DOES_NOT_UNDERSTAND,
                        f"{_describe(world, rcv)} does not understand #{selector}",
                        selector=selector,
                        receiver_class=rcls.name if rcls else _describe(world, rcv),
                        nil_state=rcv is None)
                frame.pc = pc + 1
                result = handler(scheduler, proc, rcv, args)
                if result.__class__ is BlockCall:
                    frame = push_block_frame(proc, result.closure, result.args,
                                             post=result.post)
                    code = frame.code
                    pc = frame.pc
                    ostack = frame.ostack
                    temps = frame.temps
                    continue
                if result.__class__ is Yield:
                    ostack.append(result.value)
                    pc += 1
                    frame.pc = pc
                    proc.instr_count += executed
                    return "yield"
                if result is PARKED:
                    proc.instr_count += executed
                    return "parked"
                ostack.append(result)
                pc += 1

            elif op == 4:  # STORE_TEMP
                if a == 0:
                    temps[b] = ostack.pop()
                else:
                    f = frame.lexical
                    for _ in range(a - 1):
                        f = f.lexical
                    f.temps[b] = ostack.pop()
                pc += 1

            elif op == 7:  # PUSH_GLOBAL
                value = None
                found = False
                for t in proc.rev_txns:
                    if a in t.env_delta:
                        value = t.env_delta[a]
                        found = True
                        break
                if found:
                    if value is DELETED:
                        raise LiveError("undefined-global",
                                        f"global {a!r} is deleted in this view")
                else:
                    value = world.env.base.get(a)
                    if value is None:
                        raise LiveError("undefined-global", f"global {a!r} is not bound")
                ostack.append(value)
                pc += 1

            elif op == 8:  # PUSH_PROC
                ostack.append(proc)
                pc += 1

            elif op == 12:  # POP
                ostack.pop()
                pc += 1

            elif op == 13:  # DUP
                ostack.append(ostack[-1])
                pc += 1

            elif op == 11:  # MAKE_BLOCK
                ostack.append(BlockClosure(a, frame.home, frame))
                pc += 1

            elif op == 18:  # JUMP
                pc = a

            elif op == 19:  # JUMP_IF_FALSE
                cond = ostack.pop()
                if cond is False:
                    pc = a
                elif cond is True:
                    pc += 1
                else:
                    raise LiveError(NON_BOOLEAN_RECEIVER,
                                    f"expected true or false, got {_describe(world, cond)}",
                                    nil_state=cond is None)

            elif op == 20:  # JUMP_IF_TRUE
                cond = ostack.pop()
                if cond is True:
                    pc = a
                elif cond is False:
                    pc += 1
                else:
                    raise LiveError(NON_BOOLEAN_RECEIVER,
                                    f"expected true or false, got {_describe(world, cond)}",
                                    nil_state=cond is None)

            elif op == 21:  # JUMP_BACK: loop back edge = yield + safe point
                if proc.pending and proc.atomic_depth == 0:
                    sync()
                    if scheduler.safe_point(proc) == "parked":
                        proc.instr_count += executed
                        return "parked"
                if boundary_seen and (multi or executed >= limit):
                    frame.pc = a
                    proc.instr_count += executed
                    return "yield" if multi else "budget"
                boundary_seen = True
                pc = a

            elif op == 14 or op == 15 or op == 16:
                # RETURN_TOP / RETURN_SELF / BLOCK_RETURN
                value = ostack.pop() if op != 15 else frame.receiver
                sync()
                outcome = pop_frame(scheduler, proc, value)
                proc.instr_count += executed
                executed = 0
                if outcome == "done":
                    return "done"
                if outcome == "parked":
                    return "parked"
                frame = proc.top
                code = frame.code
                pc = frame.pc
                ostack = frame.ostack
                temps = frame.temps

            elif op == 17:  # NONLOCAL_RETURN
                value = ostack.pop()
                home = frame.home
                if not home.alive or not _on_stack(proc, home):
                    raise LiveError(BLOCK_CANNOT_RETURN,
                                    "the defining method already returned")
                sync()
                collected, outcome = unwind_to_home(scheduler, proc, home, value)
                proc.instr_count += executed
                executed = 0
                parked = _run_collected(scheduler, proc, collected)
                if outcome == "done":
                    return "done"
                if outcome == "parked" or parked:
                    return "parked"
                frame = proc.top
                code = frame.code
                pc = frame.pc
                ostack = frame.ostack
                temps = frame.temps

            elif op == 22:  # PUSH_ARRAY_LIT
                ostack.append(_thaw(a))
                pc += 1

            else:
                raise LiveError("primitive-failed", f"bad opcode {op}")

    except LiveError as err:
        frame.pc = pc
        proc.instr_count += executed
        handle_error(scheduler, proc, err)
        return "error"


def _on_stack(proc, target):
    f = proc.top
    while f is not None:
        if f is target:
            return True
        f = f.sender
    return False


def _run_collected(scheduler, proc, collected):
    """Fire hooks gathered during an unwind once the stack has settled."""
    parked = False
    for i, (kind, request) in enumerate(collected):
        if kind == "atomic-exit":
            if proc.atomic_depth == 0:
                if scheduler.safe_point(proc, include_manual=True) == "parked":
                    parked = True
        elif proc.pid not in request.applied:
            if scheduler.hook_fired(proc, request, None) == "parked":
                for _, later in collected[i + 1:]:
                    if later is not None and proc.pid not in later.applied:
                        proc.pending.append(later)
                parked = True
                break
    return parked


def _push_scoped_block(scheduler, proc, closure, tags):
    if not isinstance(tags, list):
        raise LiveError("primitive-failed", "inTransactions: needs an array of tags")
    registry = scheduler.world.registry
    txns = []
    for tag in tags:
        txns.append(registry.resolve(str(tag)))
    entry = tuple(proc.activation_stack)
    frame = push_block_frame(proc, closure, ())
    frame.wrapper = ("withtxn", entry, [])
    stack = list(entry)
    for t in txns:
        if t not in stack:
            stack.append(t)
    proc.set_stack(stack)
    return frame


def handle_error(scheduler, proc, err: LiveError):
    """Unhandled error: record, unwind, suspend. Never crosses the process."""
    chain = proc.call_chain()
    scheduler.emit("error", pid=proc.pid, error_kind=err.kind,
                   message=err.message, selector=err.selector,
                   nil_state=err.nil_state, call_chain=chain[:8])
    collected = unwind_all(scheduler, proc)
    proc.error = err
    proc.status = ERROR
    scheduler.process_failed(proc, collected)


def _describe(world, value):
    if value is None:
        return "nil"
    if value.__class__ is Instance:
        return f"a {value.cls.name}"
    if value.__class__ is ClassObject:
        return f"class {value.name}"
    cls = world.type_classes.get(value.__class__)
    if cls is not None:
        return f"a {cls.name} ({value!r})"
    return repr(value)
