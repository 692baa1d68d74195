"""Compiles method ASTs to symbolic instructions.

Every field access compiles to a dynamic read/write by name; aliases are
resolved at run time against the activation stack, never at compile time.
Control-flow messages with literal block operands (ifTrue:, whileTrue:, and:,
or:) are inlined with jumps so loops carry an explicit back edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from livetx.errors import CompileError, Diagnostic
from livetx.lang.ast import (
    Assign, Block, Cascade, Lit, MethodAst, Name, Return, SelfRef, Send,
    SuperRef, ThisProcessRef,
)

# Opcodes. Instructions are (op, a, b) tuples.
PUSH_LIT = 1
PUSH_SELF = 2
PUSH_TEMP = 3        # a=hops, b=index
STORE_TEMP = 4       # pops
PUSH_FIELD = 5       # a=name
STORE_FIELD = 6      # a=name, pops
PUSH_GLOBAL = 7      # a=name
PUSH_PROC = 8
SEND = 9             # a=selector, b=argc
SUPER_SEND = 10
MAKE_BLOCK = 11      # a=BlockProto
POP = 12
DUP = 13
RETURN_TOP = 14
RETURN_SELF = 15
BLOCK_RETURN = 16
NONLOCAL_RETURN = 17
JUMP = 18            # a=absolute target
JUMP_IF_FALSE = 19   # a=absolute target, pops condition
JUMP_IF_TRUE = 20
JUMP_BACK = 21       # a=absolute target; loop back edge, yield + safe point
PUSH_ARRAY_LIT = 22  # a=tuple template, pushed as a fresh mutable array

OP_NAMES = {v: k for k, v in list(globals().items()) if k.isupper() and isinstance(v, int)}

_INLINED_LOOPS = {"whileTrue:", "whileFalse:", "whileTrue", "whileFalse"}


@dataclass
class BlockProto:
    nparams: int
    ntemps: int
    code: tuple = ()
    selector: str = ""   # owning method selector, for diagnostics


class CompiledMethod:
    """One immutable compiled version. Frames never re-resolve their method."""

    __slots__ = ("selector", "defining_class", "nparams", "ntemps", "code",
                 "source", "file", "line", "field_names", "bindings")

    def __init__(self, selector, defining_class, nparams, ntemps, code,
                 source, file, line, field_names, bindings):
        self.selector = selector
        self.defining_class = defining_class
        self.nparams = nparams
        self.ntemps = ntemps
        self.code = code
        self.source = source
        self.file = file
        self.line = line
        self.field_names = field_names
        self.bindings = bindings

    def __repr__(self):
        owner = self.defining_class.name if self.defining_class is not None else "<nowhere>"
        return f"<CompiledMethod {owner}>>{self.selector}>"


class _Scope:
    def __init__(self, parent=None, frame_boundary=False):
        self.parent = parent
        self.frame_boundary = frame_boundary
        self.names = {}
        self.nslots = 0 if frame_boundary or parent is None else None

    def declare(self, name):
        frame = self._frame()
        slot = frame.nslots
        frame.nslots += 1
        self.names[name] = slot
        return slot

    def _frame(self):
        scope = self
        while scope.nslots is None:
            scope = scope.parent
        return scope

    def lookup(self, name):
        scope, hops = self, 0
        while scope is not None:
            if name in scope.names:
                return hops, scope.names[name]
            if scope.frame_boundary:
                hops += 1
            scope = scope.parent
        return None


class Compiler:
    def __init__(self, view, filename="<input>"):
        self.view = view
        self.filename = filename
        self.field_names = set()
        self.bindings = {}
        self.diagnostics = []

    def fail(self, node, message):
        raise CompileError([Diagnostic(self.filename, node.line or 1, node.col or 1,
                                       "error", message)])

    def compile_method(self, ast: MethodAst, source_text="") -> CompiledMethod:
        scope = _Scope(frame_boundary=True)
        for p in ast.params:
            if scope.lookup(p):
                self.fail(ast, f"duplicate parameter name '{p}'")
            scope.declare(p)
        for t in ast.temps:
            if t in scope.names:
                self.fail(ast, f"duplicate temp name '{t}'")
            scope.declare(t)
        code = []
        for stmt in ast.body:
            if isinstance(stmt, Return):
                self.compile_expr(stmt.expr, scope, code, in_block=False)
                code.append((RETURN_TOP, None, None))
            else:
                self.compile_statement(stmt, scope, code, in_block=False)
        code.append((RETURN_SELF, None, None))
        scope_frame = scope._frame()
        return CompiledMethod(
            selector=ast.selector,
            defining_class=getattr(self.view, "owner_class", None),
            nparams=len(ast.params),
            ntemps=scope_frame.nslots - len(ast.params),
            code=tuple(code),
            source=source_text,
            file=self.filename,
            line=ast.line,
            field_names=frozenset(self.field_names),
            bindings=dict(self.bindings),
        )

    # -- statements / expressions ---------------------------------------

    def compile_statement(self, stmt, scope, code, in_block):
        if isinstance(stmt, Assign):
            self.compile_expr(stmt.expr, scope, code, in_block)
            self.emit_store(stmt, scope, code)
        else:
            self.compile_expr(stmt, scope, code, in_block)
            code.append((POP, None, None))

    def emit_store(self, node: Assign, scope, code):
        hit = scope.lookup(node.name)
        if hit is not None:
            code.append((STORE_TEMP, hit[0], hit[1]))
            return
        binding = self.view.field_binding(node.name)
        if binding is not None and binding[0] == "ok":
            self.field_names.add(node.name)
            self.bindings[node.name] = ("field", binding[1])
            code.append((STORE_FIELD, node.name, None))
            return
        if binding is not None and binding[0] == "deleted":
            self.fail(node, f"field '{node.name}' is deleted in this view")
        if self.view.global_exists(node.name):
            self.fail(node, f"cannot assign to global '{node.name}'")
        self.fail(node, f"unresolved identifier '{node.name}'")

    def compile_expr(self, node, scope, code, in_block):
        if isinstance(node, Lit):
            if isinstance(node.value, tuple):
                code.append((PUSH_ARRAY_LIT, node.value, None))
            else:
                code.append((PUSH_LIT, node.value, None))
        elif isinstance(node, Name):
            self.emit_load(node, scope, code)
        elif isinstance(node, SelfRef):
            code.append((PUSH_SELF, None, None))
        elif isinstance(node, ThisProcessRef):
            code.append((PUSH_PROC, None, None))
        elif isinstance(node, SuperRef):
            self.fail(node, "super must be the receiver of a message")
        elif isinstance(node, Assign):
            self.compile_expr(node.expr, scope, code, in_block)
            code.append((DUP, None, None))
            self.emit_store(node, scope, code)
        elif isinstance(node, Send):
            self.compile_send(node, scope, code, in_block)
        elif isinstance(node, Cascade):
            self.compile_cascade(node, scope, code, in_block)
        elif isinstance(node, Block):
            self.compile_block_literal(node, scope, code)
        elif isinstance(node, Return):
            self.fail(node, "^ is a statement, not an expression")
        else:
            self.fail(node, f"cannot compile {type(node).__name__}")

    def emit_load(self, node: Name, scope, code):
        hit = scope.lookup(node.id)
        if hit is not None:
            code.append((PUSH_TEMP, hit[0], hit[1]))
            return
        binding = self.view.field_binding(node.id)
        if binding is not None and binding[0] == "ok":
            self.field_names.add(node.id)
            self.bindings[node.id] = ("field", binding[1])
            code.append((PUSH_FIELD, node.id, None))
            return
        if binding is not None and binding[0] == "deleted":
            self.fail(node, f"field '{node.id}' is deleted in this view")
        if self.view.global_exists(node.id):
            self.bindings[node.id] = ("global",)
            code.append((PUSH_GLOBAL, node.id, None))
            return
        self.fail(node, f"unresolved identifier '{node.id}'")

    # -- sends ------------------------------------------------------------

    def compile_send(self, node: Send, scope, code, in_block):
        if self.try_inline(node, scope, code, in_block):
            return
        if node.selector in _INLINED_LOOPS:
            self.fail(node, f"{node.selector} needs literal block operands")
        if isinstance(node.receiver, SuperRef):
            code.append((PUSH_SELF, None, None))
            for arg in node.args:
                self.compile_expr(arg, scope, code, in_block)
            code.append((SUPER_SEND, node.selector, len(node.args)))
            return
        self.compile_expr(node.receiver, scope, code, in_block)
        for arg in node.args:
            self.compile_expr(arg, scope, code, in_block)
        code.append((SEND, node.selector, len(node.args)))

    def compile_cascade(self, node: Cascade, scope, code, in_block):
        head = node.head
        is_super = isinstance(head.receiver, SuperRef)
        if is_super:
            code.append((PUSH_SELF, None, None))
        else:
            self.compile_expr(head.receiver, scope, code, in_block)
        op = SUPER_SEND if is_super else SEND
        messages = [(head.selector, head.args)] + list(node.messages)
        for i, (selector, args) in enumerate(messages):
            last = i == len(messages) - 1
            if not last:
                code.append((DUP, None, None))
            for arg in args:
                self.compile_expr(arg, scope, code, in_block)
            code.append((op, selector, len(args)))
            if not last:
                code.append((POP, None, None))

    def compile_block_literal(self, node: Block, scope, code):
        inner = _Scope(parent=scope, frame_boundary=True)
        for p in node.params:
            if p in inner.names:
                self.fail(node, f"duplicate block parameter '{p}'")
            inner.declare(p)
        for t in node.temps:
            if t in inner.names:
                self.fail(node, f"duplicate temp name '{t}'")
            inner.declare(t)
        body = []
        self.compile_inline_body(node.body, inner, body, value_needed=True, in_block=True)
        body.append((BLOCK_RETURN, None, None))
        proto = BlockProto(nparams=len(node.params),
                           ntemps=inner._frame().nslots - len(node.params),
                           code=tuple(body))
        code.append((MAKE_BLOCK, proto, None))

    # -- inlined control flow ----------------------------------------------

    def try_inline(self, node: Send, scope, code, in_block) -> bool:
        sel = node.selector
        args = node.args

        def inlinable(x):
            return isinstance(x, Block) and not x.params

        if sel in ("whileTrue:", "whileFalse:") and inlinable(node.receiver) \
                and len(args) == 1 and inlinable(args[0]):
            self.inline_loop(node.receiver, args[0], sel.startswith("whileTrue"),
                             scope, code, in_block)
            return True
        if sel in ("whileTrue", "whileFalse") and not args and inlinable(node.receiver):
            self.inline_loop(node.receiver, None, sel == "whileTrue", scope, code, in_block)
            return True
        if sel == "ifTrue:" and len(args) == 1 and inlinable(args[0]):
            self.inline_if(node, args[0], None, scope, code, in_block)
            return True
        if sel == "ifFalse:" and len(args) == 1 and inlinable(args[0]):
            self.inline_if(node, None, args[0], scope, code, in_block)
            return True
        if sel == "ifTrue:ifFalse:" and len(args) == 2 and all(map(inlinable, args)):
            self.inline_if(node, args[0], args[1], scope, code, in_block)
            return True
        if sel == "ifFalse:ifTrue:" and len(args) == 2 and all(map(inlinable, args)):
            self.inline_if(node, args[1], args[0], scope, code, in_block)
            return True
        if sel in ("and:", "or:") and len(args) == 1 and inlinable(args[0]):
            self.inline_and_or(node, sel == "and:", scope, code, in_block)
            return True
        return False

    def inline_scope(self, block: Block, scope):
        # Inlined blocks share the enclosing frame; their temps become
        # hidden slots of that frame.
        inner = _Scope(parent=scope, frame_boundary=False)
        for t in block.temps:
            inner.declare(t)
        return inner

    def compile_inline_body(self, body, scope, code, value_needed, in_block):
        if not body:
            if value_needed:
                code.append((PUSH_LIT, None, None))
            return
        for i, stmt in enumerate(body):
            last = i == len(body) - 1
            if isinstance(stmt, Return):
                self.compile_expr(stmt.expr, scope, code, in_block=True)
                code.append((NONLOCAL_RETURN if in_block else RETURN_TOP, None, None))
                if last and value_needed:
                    code.append((PUSH_LIT, None, None))  # unreachable, keeps stack shape
            elif last and value_needed:
                self.compile_expr(stmt, scope, code, in_block)
            else:
                self.compile_statement(stmt, scope, code, in_block)

    def inline_block_value(self, block: Block, scope, code, value_needed, in_block):
        inner = self.inline_scope(block, scope)
        self.compile_inline_body(block.body, inner, code, value_needed, in_block)

    def inline_loop(self, cond: Block, body, while_true, scope, code, in_block):
        top = len(code)
        self.inline_block_value(cond, scope, code, value_needed=True, in_block=in_block)
        exit_jump = len(code)
        code.append((JUMP_IF_FALSE if while_true else JUMP_IF_TRUE, None, None))
        if body is not None:
            self.inline_block_value(body, scope, code, value_needed=False, in_block=in_block)
        code.append((JUMP_BACK, top, None))
        target = len(code)
        op = code[exit_jump][0]
        code[exit_jump] = (op, target, None)
        code.append((PUSH_LIT, None, None))  # loops evaluate to nil

    def inline_if(self, node: Send, true_block, false_block, scope, code, in_block):
        self.compile_expr(node.receiver, scope, code, in_block)
        first = len(code)
        code.append((JUMP_IF_FALSE, None, None))
        if true_block is not None:
            self.inline_block_value(true_block, scope, code, True, in_block)
        else:
            code.append((PUSH_LIT, None, None))
        skip = len(code)
        code.append((JUMP, None, None))
        else_target = len(code)
        if false_block is not None:
            self.inline_block_value(false_block, scope, code, True, in_block)
        else:
            code.append((PUSH_LIT, None, None))
        end = len(code)
        code[first] = (JUMP_IF_FALSE, else_target, None)
        code[skip] = (JUMP, end, None)

    def inline_and_or(self, node: Send, is_and, scope, code, in_block):
        self.compile_expr(node.receiver, scope, code, in_block)
        first = len(code)
        code.append((JUMP_IF_FALSE if is_and else JUMP_IF_TRUE, None, None))
        self.inline_block_value(node.args[0], scope, code, True, in_block)
        skip = len(code)
        code.append((JUMP, None, None))
        short_target = len(code)
        code.append((PUSH_LIT, False if is_and else True, None))
        end = len(code)
        code[first] = (code[first][0], short_target, None)
        code[skip] = (JUMP, end, None)


def compile_method(ast: MethodAst, view, source_text="", filename="<input>") -> CompiledMethod:
    return Compiler(view, filename).compile_method(ast, source_text)


def disassemble(method: CompiledMethod) -> str:
    """Debug helper: one instruction per line."""
    lines = []
    for i, (op, a, b) in enumerate(method.code):
        lines.append(f"{i:4d}  {OP_NAMES.get(op, op):<16} {a!r} {b!r}")
    return "\n".join(lines)
