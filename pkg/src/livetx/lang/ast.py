"""AST node types plus the canonical unparser used by round-trip tests."""

from __future__ import annotations

from dataclasses import dataclass, field


class Symbol(str):
    """Interned-ish selector/symbol value. A distinct type so #foo ~= 'foo'."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"#{str.__str__(self)}"


@dataclass(eq=False)
class Node:
    # Positions never participate in structural equality.
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


def _eq_fields(node):
    return tuple(
        getattr(node, f) for f in node.__dataclass_fields__ if f not in ("line", "col")
    )


class _Structural:
    """Equality and hashing on content, ignoring source positions."""

    def __eq__(self, other):
        return type(self) is type(other) and _eq_fields(self) == _eq_fields(other)

    def __hash__(self):
        return hash((type(self).__name__,) + _eq_fields(self))


@dataclass(eq=False)
class Lit(_Structural, Node):
    value: object = None  # int, float, str, Symbol, bool, None or tuple


@dataclass(eq=False)
class Name(_Structural, Node):
    id: str = ""


@dataclass(eq=False)
class SelfRef(_Structural, Node):
    pass


@dataclass(eq=False)
class SuperRef(_Structural, Node):
    pass


@dataclass(eq=False)
class ThisProcessRef(_Structural, Node):
    pass


@dataclass(eq=False)
class Assign(_Structural, Node):
    name: str = ""
    expr: Node = None


@dataclass(eq=False)
class Send(_Structural, Node):
    receiver: Node = None
    selector: str = ""
    args: tuple = ()


@dataclass(eq=False)
class Cascade(_Structural, Node):
    head: Send = None
    # extra messages all go to head.receiver: ((selector, args), ...)
    messages: tuple = ()


@dataclass(eq=False)
class Block(_Structural, Node):
    params: tuple = ()
    temps: tuple = ()
    body: tuple = ()


@dataclass(eq=False)
class Return(_Structural, Node):
    expr: Node = None


@dataclass(eq=False)
class MethodAst(_Structural, Node):
    owner: str = ""
    selector: str = ""
    params: tuple = ()
    temps: tuple = ()
    body: tuple = ()


@dataclass(eq=False)
class ClassDef(_Structural, Node):
    name: str = ""
    superclass: str = "Object"
    fields: tuple = ()


# ---------------------------------------------------------------------------
# Unparsing. Precedence levels: cascade < keyword < binary < unary < atom.

_CASCADE, _KEYWORD, _BINARY, _UNARY, _ATOM = range(5)


def _selector_kind(selector: str) -> int:
    if selector.endswith(":"):
        return _KEYWORD
    if selector[:1].isalpha() or selector[:1] == "_":
        return _UNARY
    return _BINARY


def _prec(node) -> int:
    if isinstance(node, Cascade):
        return _CASCADE
    if isinstance(node, Send):
        return _selector_kind(node.selector)
    if isinstance(node, Assign):
        return _CASCADE  # assignments always get parens inside expressions
    return _ATOM


def _wrap(node, minimum: int) -> str:
    text = unparse_expr(node)
    return f"({text})" if _prec(node) < minimum else text


def _lit_text(value) -> str:
    if value is None:
        return "nil"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, Symbol):
        return f"#{str.__str__(value)}"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, tuple):
        return "#(" + " ".join(_array_el(v) for v in value) + ")"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _array_el(value) -> str:
    if isinstance(value, tuple):
        return "(" + " ".join(_array_el(v) for v in value) + ")"
    if isinstance(value, Symbol):
        return str.__str__(value)
    return _lit_text(value)


def _message_text(selector: str, args: tuple, wrap_min_unary=True) -> str:
    kind = _selector_kind(selector)
    if kind == _UNARY:
        return selector
    if kind == _BINARY:
        return f"{selector} {_wrap(args[0], _UNARY)}"
    parts = selector.split(":")[:-1]
    out = []
    for part, arg in zip(parts, args):
        out.append(f"{part}: {_wrap(arg, _BINARY)}")
    return " ".join(out)


def unparse_expr(node) -> str:
    if isinstance(node, Lit):
        return _lit_text(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, SelfRef):
        return "self"
    if isinstance(node, SuperRef):
        return "super"
    if isinstance(node, ThisProcessRef):
        return "thisProcess"
    if isinstance(node, Assign):
        return f"{node.name} := {unparse_expr(node.expr)}"
    if isinstance(node, Send):
        kind = _selector_kind(node.selector)
        recv_min = _UNARY if kind == _UNARY else (_UNARY if kind == _BINARY else _BINARY)
        recv = _wrap(node.receiver, recv_min)
        return f"{recv} {_message_text(node.selector, node.args)}"
    if isinstance(node, Cascade):
        head = unparse_expr(node.head)
        rest = "; ".join(_message_text(s, a) for s, a in node.messages)
        return f"{head}; {rest}"
    if isinstance(node, Block):
        inner = []
        if node.params:
            inner.append(" ".join(f":{p}" for p in node.params) + " |")
        if node.temps:
            inner.append("| " + " ".join(node.temps) + " |")
        inner.append(unparse_body(node.body, sep=". "))
        return "[" + " ".join(s for s in inner if s) + "]"
    raise TypeError(f"cannot unparse {node!r}")


def unparse_statement(node) -> str:
    if isinstance(node, Return):
        return f"^ {unparse_expr(node.expr)}"
    return unparse_expr(node)


def unparse_body(body, sep=".\n  ") -> str:
    return sep.join(unparse_statement(s) for s in body)


def selector_pattern(selector: str, params: tuple) -> str:
    kind = _selector_kind(selector)
    if kind == _UNARY:
        return selector
    if kind == _BINARY:
        return f"{selector} {params[0]}"
    parts = selector.split(":")[:-1]
    return " ".join(f"{part}: {param}" for part, param in zip(parts, params))


def unparse_method(method: MethodAst) -> str:
    lines = [f"{method.owner} >> {selector_pattern(method.selector, method.params)}"]
    if method.temps:
        lines.append("  | " + " ".join(method.temps) + " |")
    for stmt in method.body:
        lines.append("  " + unparse_statement(stmt))
    return "\n".join(lines)


def unparse_classdef(cd: ClassDef) -> str:
    text = f"class {cd.name} extends {cd.superclass}"
    if cd.fields:
        text += " fields: (" + " ".join(cd.fields) + ")"
    return text
