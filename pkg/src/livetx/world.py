"""The whole runtime in one object: classes, storage, transactions,
environment, scheduler.

A World owns the base model and the transaction registry; processes hang
off its scheduler. Everything observable funnels through here so the REPL,
the HTTP service and the test runner stay thin.
"""

from __future__ import annotations

import hashlib

from livetx import txn as txnmod
from livetx.errors import CompileError, TxnError
from livetx.interp import builtins as builtinsmod
from livetx.interp.executor import push_method_frame
from livetx.interp.process import Process
from livetx.interp.scheduler import Scheduler
from livetx.kernel import (
    BASE_TAG, REMOVED, Alias, ClassObject, FieldStorage, GlobalEnvironment,
    Instance, MethodEntry, env_resolve, superclass_chain,
)
from livetx.lang.compiler import compile_method
from livetx.lang.lexer import LexError
from livetx.lang.parser import (
    ParseError, parse_expression_source, parse_method_source, parse_program,
)
from livetx.txn import TransactionRegistry


class CompileView:
    """What the compiler is allowed to see: one owner class and one
    transaction stack. Field names resolve the way the runtime will."""

    def __init__(self, world, owner_class, stack):
        self.world = world
        self.owner_class = owner_class
        self.stack = list(stack)

    def field_binding(self, name):
        if self.owner_class is None:
            return None
        saw_removed = False
        for k in superclass_chain(self.owner_class, self.stack):
            decided = 0
            for t in reversed(self.stack):
                ch = t.class_changes.get(k.ident)
                if ch is None:
                    continue
                if name in ch.field_adds:
                    return ("ok", k.name)
                if name in ch.field_removes:
                    decided = 2
                    break
            if decided == 2:
                if name in k.base_fields:
                    # still compiles; at run time this falls through to the
                    # single cell of the defining class
                    return ("ok", k.name)
                saw_removed = True
                continue
            if name in k.base_fields:
                return ("ok", k.name)
        return ("deleted",) if saw_removed else None

    def global_exists(self, name):
        return env_resolve(self.world.env, name, self.stack) is not None


class LoadReport:
    def __init__(self):
        self.classes = []
        self.methods = []
        self.values = []
        self.errors = []

    @property
    def ok(self):
        return not self.errors


class World:
    def __init__(self):
        self.env = GlobalEnvironment()
        self.storage = FieldStorage()
        self.registry = TransactionRegistry()
        self.global_stack = []   # default activation stack for new processes
        self._classes = {}       # ident -> ClassObject; identity is forever
        self._next_iid = 1
        self._next_gen = 0
        # bumped by anything that can change method or field resolution;
        # processes key their dispatch memos on it
        self.meta_epoch = 0
        builtinsmod.install(self)
        self.scheduler = Scheduler(self)
        self._install_prelude()

    # -- plumbing the transaction layer expects --------------------------------

    def track_class(self, cls):
        self._classes[cls.ident] = cls
        return cls

    def all_classes(self):
        return list(self._classes.values())

    def next_generation(self):
        self._next_gen += 1
        return self._next_gen

    def touch(self):
        self.meta_epoch += 1

    def new_instance(self, cls):
        inst = Instance(self._next_iid, cls)
        self._next_iid += 1
        return inst

    def class_of(self, value):
        t = value.__class__
        if t is Instance:
            return value.cls
        if t is ClassObject:
            return self.builtin_classes["Class"]
        return self.type_classes.get(t)

    def deactivate_everywhere(self, txn):
        self.scheduler.remove_txn_everywhere(txn)

    def log_txn_event(self, kind, txn, **payload):
        self.scheduler.emit(kind, tag=txn.tag, label=txn.label, **payload)

    # -- transaction lifecycle ---------------------------------------------------

    def txn_create(self, label=""):
        txn = self.registry.create(label)
        self.log_txn_event("txn-created", txn)
        return txn

    def txn_stage(self, tag):
        txn = self.registry.stage(self.registry.resolve(tag).tag)
        self.log_txn_event("txn-staged", txn,
                           staged=[t.tag for t in self.registry.staged_order])
        return txn

    def txn_unstage(self, tag):
        txn = self.registry.unstage(self.registry.resolve(tag).tag)
        self.log_txn_event("txn-unstaged", txn,
                           staged=[t.tag for t in self.registry.staged_order])
        return txn

    def txn_activate(self, tags, targets=None, level="method"):
        push = [self.registry.resolve(t) for t in tags]
        return self.scheduler.request_activation(targets=targets, push=push,
                                                 level=level)

    def txn_deactivate(self, tags, targets=None, level="method"):
        remove = [self.registry.resolve(t) for t in tags]
        return self.scheduler.request_activation(targets=targets, remove=remove,
                                                 level=level)

    def txn_merge(self, tag, target="base"):
        txn = self.registry.resolve(tag)
        txnmod.merge(self, txn.tag, target=target)

    def txn_abort(self, tag):
        txn = self.registry.resolve(tag)
        txnmod.abort(self, txn.tag)

    # -- compiling and accepting ---------------------------------------------------

    def compile_expression(self, source, stack, filename="<eval>"):
        try:
            ast = parse_expression_source(source, filename)
        except (ParseError, LexError) as err:
            raise CompileError([err.diagnostic]) from None
        view = CompileView(self, None, stack)
        return compile_method(ast, view, source, filename)

    def accept_method(self, source, stack=None, target="staged",
                      filename="<accept>"):
        """Compile a method chunk and record it. target is "staged" (the
        staged-order top captures it) or "base"."""
        stack = self._accept_stack(stack, target)
        try:
            ast = parse_method_source(source, filename)
        except (ParseError, LexError) as err:
            raise CompileError([err.diagnostic]) from None
        return self._accept_ast(ast, source, stack, target, filename)

    def _accept_stack(self, stack, target):
        if stack is not None:
            return list(stack)
        if target == "base":
            return []
        return list(self.registry.staged_order)

    def _accept_ast(self, ast, source, stack, target, filename):
        cls = env_resolve(self.env, ast.owner, stack)
        if not isinstance(cls, ClassObject):
            raise TxnError(f"no class named {ast.owner!r} in this view")
        view = CompileView(self, cls, stack)
        compiled = compile_method(ast, view, source, filename)
        if target == "base":
            entry = cls.methods.get(ast.selector)
            if entry is None:
                entry = cls.methods[ast.selector] = MethodEntry()
            entry.versions[BASE_TAG] = compiled
            self.touch()
            tag = BASE_TAG
        else:
            top = self.registry.staged_top()
            if top is None:
                raise TxnError("no staged transaction to capture the change")
            txnmod.record_method_set(self, top.tag, cls, ast.selector, compiled)
            tag = top.tag
        self.scheduler.emit("method-accepted", klass=cls.name,
                            selector=ast.selector, target=tag)
        return cls, ast.selector

    def remove_method(self, class_name, selector, stack=None, target="staged"):
        stack = self._accept_stack(stack, target)
        cls = env_resolve(self.env, class_name, stack)
        if not isinstance(cls, ClassObject):
            raise TxnError(f"no class named {class_name!r} in this view")
        if target == "base":
            entry = cls.methods.get(selector)
            if entry is not None:
                entry.versions.pop(BASE_TAG, None)
                if not entry.versions:
                    del cls.methods[selector]
            self.touch()
            tag = BASE_TAG
        else:
            top = self.registry.staged_top()
            if top is None:
                raise TxnError("no staged transaction to capture the change")
            txnmod.record_method_remove(self, top.tag, cls, selector)
            tag = top.tag
        self.scheduler.emit("method-removed", klass=cls.name,
                            selector=selector, target=tag)
        return cls

    # -- class definitions ----------------------------------------------------------

    def define_class(self, ast, target="base", stack=None):
        """Apply a class directive: create the class, or diff an existing
        definition's field list and superclass."""
        stack = self._accept_stack(stack, target)
        sup_name = ast.superclass or "Object"
        superclass = env_resolve(self.env, sup_name, stack)
        if not isinstance(superclass, ClassObject):
            raise TxnError(f"unknown superclass {sup_name!r}")
        existing = env_resolve(self.env, ast.name, stack)
        if existing is not None and not isinstance(existing, ClassObject):
            raise TxnError(f"{ast.name!r} is bound to something that is not a class")

        if existing is None:
            if target == "base":
                cls = ClassObject(ast.name, superclass, tuple(ast.fields))
                self.track_class(cls)
                self.env.base[ast.name] = cls
            else:
                top = self._require_top()
                cls = txnmod.record_class_add(self, top.tag, ast.name,
                                              superclass, tuple(ast.fields))
            self.scheduler.emit("class-added", klass=ast.name,
                                superclass=superclass.name,
                                fields=list(ast.fields),
                                target=BASE_TAG if target == "base" else
                                self.registry.staged_top().tag)
            return cls

        cls = existing
        if cls.builtin:
            raise TxnError(f"{cls.name} is a builtin and cannot be redefined")
        current = txnmod._local_field_names(cls, stack)
        wanted = list(ast.fields)
        removed = [n for n in current if n not in wanted]
        added = [n for n in wanted if n not in current]
        if target == "base":
            for name in removed:
                alias = cls.base_fields.pop(name, None)
                if alias is not None:
                    self.storage.drop_alias(alias)
            for name in added:
                cls.base_fields[name] = Alias(cls.ident, name,
                                              self.next_generation())
            if superclass is not cls.base_superclass:
                previous = cls.base_superclass
                cls.base_superclass = superclass
                try:
                    list(superclass_chain(cls, []))
                except Exception:
                    cls.base_superclass = previous
                    raise
            self.touch()
            tag = BASE_TAG
        else:
            top = self._require_top()
            for name in removed:
                txnmod.record_field_remove(self, top.tag, cls, name)
            for name in added:
                txnmod.record_field_add(self, top.tag, cls, name)
            from livetx.kernel import effective_superclass
            if superclass is not effective_superclass(cls, stack):
                txnmod.record_superclass_set(self, top.tag, cls, superclass)
            tag = top.tag
        self.scheduler.emit("class-updated", klass=cls.name,
                            superclass=superclass.name, fields=wanted,
                            added=added, removed=removed, target=tag)
        return cls

    def _require_top(self):
        top = self.registry.staged_top()
        if top is None:
            raise TxnError("no staged transaction to capture the change")
        return top

    # -- loading and evaluating --------------------------------------------------------

    def load_program(self, text, filename="<load>", target="base", stack=None):
        """Process a chunked source file: class directives, methods, and
        expression chunks in order."""
        program = parse_program(text, filename)
        if not program.ok:
            raise CompileError(program.diagnostics)
        report = LoadReport()
        for chunk in program.chunks:
            if chunk.kind == "classdef":
                cls = self.define_class(chunk.ast, target=target, stack=stack)
                report.classes.append(cls.name)
            elif chunk.kind == "method":
                eff = self._accept_stack(stack, target)
                cls, selector = self._accept_ast(chunk.ast, chunk.text, eff,
                                                 target, filename)
                report.methods.append((cls.name, selector))
            else:
                proc = self.eval_expression(chunk.text, stack=stack,
                                            filename=filename)
                if proc.error is not None:
                    report.errors.append((chunk.line, proc.error))
                else:
                    report.values.append(proc.result)
        return report

    def eval_expression(self, source, stack=None, name="", filename="<eval>"):
        """Compile and run one expression in a fresh process. Returns the
        process; look at .result, .error and .status."""
        proc = self.spawn_expression(source, stack=stack, name=name,
                                     filename=filename)
        self.scheduler.run_alone(proc)
        return proc

    def spawn_expression(self, source, stack=None, name="", filename="<eval>",
                         overlay=None):
        stack = list(self.global_stack) if stack is None else list(stack)
        method = self.compile_expression(source, stack, filename)
        proc = Process(name=name, stack=stack, overlay=overlay)
        push_method_frame(proc, method, None, ())
        self.scheduler.register(proc)
        return proc

    # -- inspection ---------------------------------------------------------------------

    def class_named(self, name, stack=()):
        cls = env_resolve(self.env, name, list(stack))
        return cls if isinstance(cls, ClassObject) else None

    def format_value(self, value):
        return builtinsmod.print_string(self, value)

    def state_hash(self):
        """Digest of the durable model: classes, base methods and versions,
        environment, transaction records, and the write journal length.
        Event logs and counters stay out so replays can be compared; idents
        are replaced by creation rank so two worlds built by the same moves
        hash alike even though idents are minted process-wide."""
        rank = {ident: i for i, ident in enumerate(sorted(self._classes))}
        model = []
        for ident in sorted(self._classes):
            cls = self._classes[ident]
            methods = []
            for sel in sorted(cls.methods):
                versions = cls.methods[sel].versions
                methods.append((sel, sorted(
                    (tag, "<removed>" if m is REMOVED else m.source)
                    for tag, m in versions.items())))
            model.append((
                rank[ident], cls.name,
                rank.get(cls.base_superclass.ident)
                if cls.base_superclass else None,
                sorted((n, a.gen) for n, a in cls.base_fields.items()),
                methods,
            ))
        env = sorted(
            (name, rank.get(value.ident, -1)
             if isinstance(value, ClassObject) else "host")
            for name, value in self.env.base.items())
        txns = []
        for tag in sorted(self.registry.transactions):
            t = self.registry.transactions[tag]
            per_class = []
            for ident in sorted(t.class_changes):
                ch = t.class_changes[ident]
                per_class.append((
                    rank.get(ident, -1),
                    sorted((n, a.gen) for n, a in ch.field_adds.items()),
                    sorted(ch.field_removes),
                    ("keep" if ch.superclass_change is txnmod.NO_CHANGE
                     else rank.get(ch.superclass_change.ident, -1)
                     if ch.superclass_change else None),
                    sorted((sel, "<removed>" if m is REMOVED else m.source)
                           for sel, m in ch.method_changes.items()),
                ))
            env_delta = sorted(
                (name, "<deleted>" if not isinstance(v, ClassObject)
                 else rank.get(v.ident, -1))
                for name, v in t.env_delta.items())
            txns.append((tag, t.label, t.staged, per_class, env_delta))
        blob = repr((model, env, txns, self.storage.journal_len)).encode()
        return hashlib.sha256(blob).hexdigest()

    # -- boot -----------------------------------------------------------------------------

    def _install_prelude(self):
        program = parse_program(builtinsmod.PRELUDE_SOURCE, "<prelude>")
        assert program.ok, [d.format() for d in program.diagnostics]
        for chunk in program.chunks:
            assert chunk.kind == "method", chunk.kind
            cls = self.builtin_classes[chunk.ast.owner]
            view = CompileView(self, cls, [])
            compiled = compile_method(chunk.ast, view, chunk.text, "<prelude>")
            entry = cls.methods.get(chunk.ast.selector)
            if entry is None:
                entry = cls.methods[chunk.ast.selector] = MethodEntry()
            entry.versions[BASE_TAG] = compiled
