"""Change scripts: a line-oriented format for moving a whole change set
between images as one transaction.

A script is a sequence of directives, one per line:

    txn <label>                          first directive, names the transaction
    method <Class> >> <chunk first line> method body follows, closed by a ! line
    remove-method <Class> <selector>
    add-field <Class> <name>
    remove-field <Class> <name>
    superclass <Class> <Superclass>
    add-class <Name> <Superclass> (<field names>)
    remove-class <Name>
    rename-class <Old> <New>

Blank lines and lines starting with # are skipped outside method bodies.
Importing a script either produces one staged transaction holding every
directive, or nothing at all: any parse or apply error aborts the lot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import CompileError, TxnError
from ..kernel import ClassObject, Alias, env_resolve
from ..lang.lexer import LexError
from ..lang.parser import ParseError, parse_method_source
from .. import txn as txnmod


class ScriptError(Exception):
    """A change script that cannot be read. Nothing was created."""

    def __init__(self, filename, line, message):
        self.filename = filename
        self.line = line
        super().__init__(f"{filename}:{line}: {message}")


@dataclass
class Directive:
    op: str
    args: tuple
    line: int
    # method directives carry the full chunk source
    source: str = ""


@dataclass
class ChangeScript:
    label: str
    directives: list[Directive] = field(default_factory=list)
    filename: str = "<script>"


_SIMPLE_OPS = {
    # op -> argument count after the keyword
    "remove-method": 2,
    "add-field": 2,
    "remove-field": 2,
    "superclass": 2,
    "remove-class": 1,
    "rename-class": 2,
}


def parse_script(text: str, filename: str = "<script>") -> ChangeScript:
    """Read the directive list. Syntax errors raise ScriptError; method
    chunks are parsed here too, so a bad body rejects the whole script."""
    lines = text.splitlines()
    label = None
    directives = []
    i = 0
    n = len(lines)
    while i < n:
        raw = lines[i]
        line_no = i + 1
        i += 1
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        op = parts[0]
        if label is None:
            if op != "txn":
                raise ScriptError(filename, line_no,
                                  "script must start with 'txn <label>'")
            label = stripped[len("txn"):].strip()
            if not label:
                raise ScriptError(filename, line_no, "empty transaction label")
            continue
        if op == "txn":
            raise ScriptError(filename, line_no,
                              "only one txn directive per script")
        if op == "method":
            header = stripped[len("method"):].strip()
            if ">>" not in header:
                raise ScriptError(filename, line_no,
                                  "method directive needs 'Class >> pattern'")
            body = []
            while i < n and lines[i].strip() != "!":
                body.append(lines[i])
                i += 1
            if i >= n:
                raise ScriptError(filename, line_no,
                                  "method body not closed by a ! line")
            i += 1  # consume the !
            chunk = "\n".join([header] + body)
            try:
                parse_method_source(chunk, filename, line=line_no)
            except (ParseError, LexError) as err:
                raise ScriptError(filename, line_no,
                                  f"bad method chunk: {err.diagnostic.message}")
            directives.append(Directive("method", (), line_no, source=chunk))
            continue
        if op == "add-class":
            rest = stripped[len("add-class"):].strip()
            if "(" not in rest or not rest.endswith(")"):
                raise ScriptError(filename, line_no,
                                  "add-class needs 'Name Super (fields)'")
            head, _, fields_part = rest.partition("(")
            names = head.split()
            if len(names) != 2:
                raise ScriptError(filename, line_no,
                                  "add-class needs 'Name Super (fields)'")
            fields = tuple(fields_part[:-1].split())
            directives.append(
                Directive("add-class", (names[0], names[1], fields), line_no))
            continue
        want = _SIMPLE_OPS.get(op)
        if want is None:
            raise ScriptError(filename, line_no, f"unknown directive {op!r}")
        args = parts[1:]
        if op == "remove-method" and len(args) == 3 and args[1] == ">>":
            args = [args[0], args[2]]
        if len(args) != want:
            raise ScriptError(filename, line_no,
                              f"{op} takes {want} arguments, got {len(args)}")
        directives.append(Directive(op, tuple(args), line_no))
    if label is None:
        raise ScriptError(filename, 1, "empty script")
    return ChangeScript(label, directives, filename)


def _class_in_view(world, name, stack):
    cls = env_resolve(world.env, name, stack)
    if not isinstance(cls, ClassObject):
        raise TxnError(f"no class named {name!r} in this view")
    return cls


def import_script(world, text: str, filename: str = "<script>"):
    """Create and stage one transaction holding every directive of the
    script. On any error the transaction is aborted and nothing remains."""
    script = parse_script(text, filename)
    txn = world.txn_create(script.label)
    world.txn_stage(txn.tag)
    d = None
    try:
        for d in script.directives:
            _apply_staged(world, txn.tag, d, filename)
    except (TxnError, CompileError) as err:
        world.txn_abort(txn.tag)
        raise ScriptError(filename, _err_line(d), str(err)) from err
    return txn


def import_script_file(world, path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return import_script(world, text, filename=str(path))


def _err_line(directive):
    return directive.line if directive is not None else 1


def _apply_staged(world, tag, d, filename):
    # every lookup runs under the staged view so directives see the
    # classes and fields added by the ones before them
    stack = list(world.registry.staged_order)
    if d.op == "method":
        world.accept_method(d.source, target="staged", filename=filename)
    elif d.op == "remove-method":
        world.remove_method(d.args[0], d.args[1], target="staged")
    elif d.op == "add-field":
        cls = _class_in_view(world, d.args[0], stack)
        txnmod.record_field_add(world, tag, cls, d.args[1])
    elif d.op == "remove-field":
        cls = _class_in_view(world, d.args[0], stack)
        txnmod.record_field_remove(world, tag, cls, d.args[1])
    elif d.op == "superclass":
        cls = _class_in_view(world, d.args[0], stack)
        sup = _class_in_view(world, d.args[1], stack)
        txnmod.record_superclass_set(world, tag, cls, sup)
    elif d.op == "add-class":
        name, sup_name, fields = d.args
        sup = _class_in_view(world, sup_name, stack)
        txnmod.record_class_add(world, tag, name, sup, fields)
    elif d.op == "remove-class":
        txnmod.record_class_remove(world, tag, d.args[0])
    elif d.op == "rename-class":
        txnmod.record_class_rename(world, tag, d.args[0], d.args[1])
    else:  # pragma: no cover - parse_script only emits the ops above
        raise TxnError(f"unknown directive {d.op!r}")


def apply_to_base(world, script: ChangeScript, after_each=None):
    """Replay a script's directives straight onto the base image, no
    transaction anywhere. This is the unsafe path scripts exist to avoid;
    it is kept for comparing outcomes. after_each(directive) runs between
    directives so callers can interleave other work."""
    for d in script.directives:
        _apply_base(world, d, script.filename)
        if after_each is not None:
            after_each(d)


def _apply_base(world, d, filename):
    if d.op == "method":
        world.accept_method(d.source, target="base", filename=filename)
    elif d.op == "remove-method":
        world.remove_method(d.args[0], d.args[1], target="base")
    elif d.op == "add-field":
        cls = _class_in_view(world, d.args[0], ())
        if d.args[1] not in cls.base_fields:
            cls.base_fields[d.args[1]] = Alias(cls.ident, d.args[1], 0)
            world.touch()
    elif d.op == "remove-field":
        cls = _class_in_view(world, d.args[0], ())
        alias = cls.base_fields.pop(d.args[1], None)
        if alias is not None:
            # base removal destroys the cells, there is no way back
            world.storage.drop_alias(alias)
            world.touch()
    elif d.op == "superclass":
        cls = _class_in_view(world, d.args[0], ())
        cls.base_superclass = _class_in_view(world, d.args[1], ())
        world.touch()
    elif d.op == "add-class":
        name, sup_name, fields = d.args
        sup = _class_in_view(world, sup_name, ())
        cls = ClassObject(name, sup, tuple(fields))
        world.track_class(cls)
        world.env.bind(name, cls)
        world.touch()
    elif d.op == "remove-class":
        world.env.unbind(d.args[0])
        world.touch()
    elif d.op == "rename-class":
        cls = _class_in_view(world, d.args[0], ())
        world.env.unbind(d.args[0])
        cls.name = d.args[1]
        world.env.bind(d.args[1], cls)
        world.touch()
