"""Builtin classes and primitive handlers.

Dispatch consults the kernel first, so a transaction can shadow almost any
builtin selector with a real method. Only arithmetic, block evaluation,
array indexing, atomicDo: and inTransactions: are sealed in the executor.

Handlers take (scheduler, proc, receiver, args) and return a plain value,
a BlockCall (evaluate this block, value flows to the sender), a Yield, or
the PARKED sentinel. Failures raise LiveError.
"""

from __future__ import annotations

from livetx.errors import ASSERTION_FAILED, NON_BOOLEAN_RECEIVER, LiveError
from livetx.interp.executor import PARKED, BlockCall, Yield
from livetx.interp.process import BlockClosure, HostRandom, Process
from livetx.kernel import ClassObject, Instance
from livetx.lang.ast import Symbol


class TranscriptStream:
    """Host-side output sink bound to the `Transcript` global."""

    def __init__(self):
        self.chunks = []

    def write(self, text):
        self.chunks.append(text)

    def take(self):
        text = "".join(self.chunks)
        self.chunks.clear()
        return text

    def __repr__(self):
        return "<Transcript>"


BUILTIN_CLASS_NAMES = [
    # (name, superclass name or None)
    ("Object", None),
    ("Class", "Object"),
    ("Number", "Object"),
    ("Integer", "Number"),
    ("Float", "Number"),
    ("String", "Object"),
    ("Symbol", "Object"),
    ("Boolean", "Object"),
    ("UndefinedObject", "Object"),
    ("Array", "Object"),
    ("Block", "Object"),
    ("Process", "Object"),
    ("Random", "Object"),
    ("Transcript", "Object"),
]


def print_string(world, value):
    t = value.__class__
    if value is None:
        return "nil"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if t is int or t is float:
        return str(value)
    if t is Symbol:
        return "#" + str(value)
    if t is str:
        return "'" + value.replace("'", "''") + "'"
    if t is list:
        return "#(" + " ".join(print_string(world, x) for x in value) + ")"
    if t is Instance:
        name = value.cls.name
        article = "an" if name[:1] in "AEIOU" else "a"
        return f"{article} {name}"
    if t is ClassObject:
        return value.name
    if t is BlockClosure:
        return "a Block"
    if t is Process:
        return f"a Process({value.pid})"
    if t is HostRandom:
        return "a Random"
    if t is TranscriptStream:
        return "Transcript"
    return repr(value)


def display_string(world, value):
    if value.__class__ is str:
        return value
    if value.__class__ is Symbol:
        return str(value)
    return print_string(world, value)


def _as_bool(value):
    if value is True or value is False:
        return value
    raise LiveError(NON_BOOLEAN_RECEIVER,
                    "expected true or false",
                    nil_state=value is None)


# --- typed handlers -------------------------------------------------------

def _num_abs(sch, proc, rcv, args):
    return abs(rcv)


def _num_negated(sch, proc, rcv, args):
    return -rcv


def _num_min(sch, proc, rcv, args):
    other = args[0]
    if other.__class__ not in (int, float):
        raise LiveError("primitive-failed", "min: needs a number", selector="min:")
    return rcv if rcv <= other else other


def _num_max(sch, proc, rcv, args):
    other = args[0]
    if other.__class__ not in (int, float):
        raise LiveError("primitive-failed", "max: needs a number", selector="max:")
    return rcv if rcv >= other else other


def _num_as_float(sch, proc, rcv, args):
    return float(rcv)


def _num_as_integer(sch, proc, rcv, args):
    return int(rcv)


def _num_sqrt(sch, proc, rcv, args):
    if rcv < 0:
        raise LiveError("primitive-failed", "sqrt of a negative number", selector="sqrt")
    return float(rcv) ** 0.5


def _num_floor(sch, proc, rcv, args):
    import math
    return math.floor(rcv)


def _num_rem(sch, proc, rcv, args):
    other = args[0]
    if other == 0:
        raise LiveError("primitive-failed", "division by zero", selector="rem:")
    return rcv - other * int(rcv / other)


def _num_between(sch, proc, rcv, args):
    lo, hi = args
    return bool(lo <= rcv <= hi)


def _num_is_zero(sch, proc, rcv, args):
    return rcv == 0


def _str_size(sch, proc, rcv, args):
    return len(rcv)


def _str_at(sch, proc, rcv, args):
    idx = args[0]
    if idx.__class__ is not int or not 1 <= idx <= len(rcv):
        raise LiveError("primitive-failed", f"string index {idx!r} out of bounds",
                        selector="at:")
    return rcv[idx - 1]


def _str_comma(sch, proc, rcv, args):
    other = args[0]
    if other.__class__ is str:
        return rcv + other
    return rcv + display_string(sch.world, other)


def _str_as_symbol(sch, proc, rcv, args):
    return Symbol(rcv)


def _sym_as_string(sch, proc, rcv, args):
    return str(rcv)


def _bool_not(sch, proc, rcv, args):
    return not rcv


def _bool_amp(sch, proc, rcv, args):
    return rcv and _as_bool(args[0])


def _bool_pipe(sch, proc, rcv, args):
    return rcv or _as_bool(args[0])


def _bool_and(sch, proc, rcv, args):
    # non-inlined and: - the argument arrived as a closure
    arg = args[0]
    if rcv is False:
        return False
    if arg.__class__ is BlockClosure:
        return BlockCall(arg, (), post=_as_bool)
    return _as_bool(arg)


def _bool_or(sch, proc, rcv, args):
    arg = args[0]
    if rcv is True:
        return True
    if arg.__class__ is BlockClosure:
        return BlockCall(arg, (), post=_as_bool)
    return _as_bool(arg)


def _bool_xor(sch, proc, rcv, args):
    return rcv != _as_bool(args[0])


def _array_first(sch, proc, rcv, args):
    if not rcv:
        raise LiveError("primitive-failed", "first of an empty array", selector="first")
    return rcv[0]


def _array_last(sch, proc, rcv, args):
    if not rcv:
        raise LiveError("primitive-failed", "last of an empty array", selector="last")
    return rcv[-1]


def _array_is_empty(sch, proc, rcv, args):
    return len(rcv) == 0


def _array_not_empty(sch, proc, rcv, args):
    return len(rcv) > 0


def _array_includes(sch, proc, rcv, args):
    return args[0] in rcv


def _array_copy(sch, proc, rcv, args):
    return list(rcv)


def _array_comma(sch, proc, rcv, args):
    other = args[0]
    if other.__class__ is not list:
        raise LiveError("primitive-failed", ", needs another array", selector=",")
    return rcv + other


def _array_index_of(sch, proc, rcv, args):
    try:
        return rcv.index(args[0]) + 1
    except ValueError:
        return 0


def _random_next(sch, proc, rcv, args):
    return rcv.next_float()


def _random_next_int(sch, proc, rcv, args):
    bound = args[0]
    if bound.__class__ is not int or bound < 1:
        raise LiveError("primitive-failed", "nextInt: needs a positive integer",
                        selector="nextInt:")
    return rcv.next_int(bound) + 1


def _process_name(sch, proc, rcv, args):
    return rcv.name


def _process_pid(sch, proc, rcv, args):
    return rcv.pid


def _process_ticks(sch, proc, rcv, args):
    return rcv.tick_count


def _process_transactions(sch, proc, rcv, args):
    return [Symbol(t.tag) for t in rcv.activation_stack]


def _process_update(sch, proc, rcv, args):
    # the explicit refresh point for manual-level changes; only meaningful
    # on the running process itself
    if rcv is not proc:
        sch.apply_requests_quiescent(rcv)
        return rcv
    if sch.safe_point(proc, include_manual=True) == "parked":
        proc.parked_return = (proc.top, rcv)
        return PARKED
    return rcv


def _transcript_show(sch, proc, rcv, args):
    rcv.write(display_string(sch.world, args[0]))
    return rcv


def _transcript_cr(sch, proc, rcv, args):
    rcv.write("\n")
    return rcv


# --- generic handlers -----------------------------------------------------

def _print_string(sch, proc, rcv, args):
    return print_string(sch.world, rcv)


def _display_string(sch, proc, rcv, args):
    return display_string(sch.world, rcv)


def _is_nil(sch, proc, rcv, args):
    return rcv is None


def _not_nil(sch, proc, rcv, args):
    return rcv is not None


def _if_nil(sch, proc, rcv, args):
    arg = args[0]
    if rcv is None:
        if arg.__class__ is BlockClosure:
            return BlockCall(arg, ())
        return arg
    return rcv


def _if_not_nil(sch, proc, rcv, args):
    arg = args[0]
    if rcv is None:
        return None
    if arg.__class__ is BlockClosure:
        return BlockCall(arg, (rcv,) if arg.proto.nparams == 1 else ())
    return arg


def _identity(sch, proc, rcv, args):
    return rcv is args[0] or (rcv.__class__ in (int, float, str, Symbol, bool)
                              and rcv.__class__ is args[0].__class__
                              and rcv == args[0])


def _not_identity(sch, proc, rcv, args):
    return not _identity(sch, proc, rcv, args)


def _equals(sch, proc, rcv, args):
    other = args[0]
    if rcv.__class__ in (int, float) and other.__class__ in (int, float):
        return rcv == other
    return _identity(sch, proc, rcv, args)


def _not_equals(sch, proc, rcv, args):
    return not _equals(sch, proc, rcv, args)


def _class_of_handler(sch, proc, rcv, args):
    cls = sch.world.class_of(rcv)
    if cls is None:
        raise LiveError("primitive-failed", "receiver has no class")
    return cls


def _class_name_of(sch, proc, rcv, args):
    cls = sch.world.class_of(rcv)
    return cls.name if cls is not None else rcv.__class__.__name__


def _responds_to(sch, proc, rcv, args):
    from livetx.interp.executor import resolve_method_fast
    cls = sch.world.class_of(rcv)
    if cls is None:
        return False
    selector = str(args[0])
    return resolve_method_fast(cls, selector, proc.rev_txns) is not None


def _error(sch, proc, rcv, args):
    raise LiveError("user-error", display_string(sch.world, args[0]))


def _check_true(value):
    if value is not True:
        raise LiveError(ASSERTION_FAILED, "assertion failed")
    return value


def _check_false(value):
    if value is not False:
        raise LiveError(ASSERTION_FAILED, "deny: got true")
    return value


def _assert(sch, proc, rcv, args):
    arg = args[0]
    if arg.__class__ is BlockClosure:
        return BlockCall(arg, (), post=_check_true)
    _check_true(arg)
    return rcv


def _deny(sch, proc, rcv, args):
    arg = args[0]
    if arg.__class__ is BlockClosure:
        return BlockCall(arg, (), post=_check_false)
    _check_false(arg)
    return rcv


def _assert_equals(sch, proc, rcv, args):
    got, want = args
    if not _equals(sch, proc, got, (want,)):
        raise LiveError(ASSERTION_FAILED,
                        f"expected {print_string(sch.world, want)}, "
                        f"got {print_string(sch.world, got)}")
    return rcv


def _wait(sch, proc, rcv, args):
    # the demo clock: one tick per wait:, then give up the slice
    proc.tick_count += 1
    return Yield(rcv)


def _yield(sch, proc, rcv, args):
    return Yield(rcv)


def _halt(sch, proc, rcv, args):
    raise LiveError("user-error", "halt")


def _yourself(sch, proc, rcv, args):
    return rcv


# --- class-side handlers --------------------------------------------------

_UNINSTANTIABLE = {"Integer", "Float", "Number", "Boolean", "UndefinedObject",
                   "String", "Symbol", "Block", "Process", "Transcript",
                   "Class", "Object", "Array", "Random"}


def _class_new(sch, proc, rcv, args):
    if rcv.name == "Array":
        return []
    if rcv.builtin and rcv.name in _UNINSTANTIABLE:
        raise LiveError("primitive-failed", f"cannot instantiate {rcv.name}",
                        selector="new")
    return sch.world.new_instance(rcv)


def _class_new_sized(sch, proc, rcv, args):
    if rcv.name != "Array":
        raise LiveError("primitive-failed", "new: is only for Array", selector="new:")
    n = args[0]
    if n.__class__ is not int or n < 0:
        raise LiveError("primitive-failed", "new: needs a non-negative size",
                        selector="new:")
    return [None] * n


def _class_name(sch, proc, rcv, args):
    return rcv.name


def _class_print(sch, proc, rcv, args):
    return rcv.name


def _class_seed(sch, proc, rcv, args):
    if rcv.name != "Random":
        raise LiveError("primitive-failed", "seed: is only for Random", selector="seed:")
    n = args[0]
    if n.__class__ is not int:
        raise LiveError("primitive-failed", "seed: needs an integer", selector="seed:")
    return HostRandom(n)


CLASS_SIDE = {
    "new": _class_new,
    "new:": _class_new_sized,
    "name": _class_name,
    "printString": _class_print,
    "seed:": _class_seed,
}

GENERIC = {
    "printString": _print_string,
    "displayString": _display_string,
    "asString": _display_string,
    "isNil": _is_nil,
    "notNil": _not_nil,
    "ifNil:": _if_nil,
    "ifNotNil:": _if_not_nil,
    "==": _identity,
    "~~": _not_identity,
    "=": _equals,
    "~=": _not_equals,
    "class": _class_of_handler,
    "className": _class_name_of,
    "respondsTo:": _responds_to,
    "error:": _error,
    "assert:": _assert,
    "deny:": _deny,
    "assert:equals:": _assert_equals,
    "wait:": _wait,
    "yield": _yield,
    "halt": _halt,
    "yourself": _yourself,
}


def _typed_table():
    table = {}
    for pytype in (int, float):
        table[(pytype, "abs")] = _num_abs
        table[(pytype, "negated")] = _num_negated
        table[(pytype, "min:")] = _num_min
        table[(pytype, "max:")] = _num_max
        table[(pytype, "asFloat")] = _num_as_float
        table[(pytype, "asInteger")] = _num_as_integer
        table[(pytype, "sqrt")] = _num_sqrt
        table[(pytype, "floor")] = _num_floor
        table[(pytype, "rem:")] = _num_rem
        table[(pytype, "between:and:")] = _num_between
        table[(pytype, "isZero")] = _num_is_zero
    table.update({
        (str, "size"): _str_size,
        (str, "at:"): _str_at,
        (str, ","): _str_comma,
        (str, "asSymbol"): _str_as_symbol,
        (Symbol, "asString"): _sym_as_string,
        (Symbol, ","): _str_comma,
        (bool, "not"): _bool_not,
        (bool, "&"): _bool_amp,
        (bool, "|"): _bool_pipe,
        (bool, "and:"): _bool_and,
        (bool, "or:"): _bool_or,
        (bool, "xor:"): _bool_xor,
        (list, "first"): _array_first,
        (list, "last"): _array_last,
        (list, "isEmpty"): _array_is_empty,
        (list, "notEmpty"): _array_not_empty,
        (list, "includes:"): _array_includes,
        (list, "copy"): _array_copy,
        (list, ","): _array_comma,
        (list, "indexOf:"): _array_index_of,
        (HostRandom, "next"): _random_next,
        (HostRandom, "nextInt:"): _random_next_int,
        (Process, "name"): _process_name,
        (Process, "pid"): _process_pid,
        (Process, "ticks"): _process_ticks,
        (Process, "activeTransactions"): _process_transactions,
        (Process, "update"): _process_update,
        (TranscriptStream, "show:"): _transcript_show,
        (TranscriptStream, "cr"): _transcript_cr,
    })
    return table


# Iteration protocols live in the language so every trip through a loop body
# crosses a real send boundary.
PRELUDE_SOURCE = """
Array >> do: aBlock
    | i n |
    i := 1.
    n := self size.
    [i <= n] whileTrue: [aBlock value: (self at: i). i := i + 1]
!
Array >> collect: aBlock
    | out i n |
    n := self size.
    out := Array new: n.
    i := 1.
    [i <= n] whileTrue: [
        out at: i put: (aBlock value: (self at: i)).
        i := i + 1].
    ^out
!
Array >> inject: start into: aBlock
    | acc |
    acc := start.
    self do: [:each | acc := aBlock value: acc value: each].
    ^acc
!
Integer >> to: stop do: aBlock
    | i |
    i := self.
    [i <= stop] whileTrue: [aBlock value: i. i := i + 1].
    ^self
!
Integer >> timesRepeat: aBlock
    | i |
    i := 1.
    [i <= self] whileTrue: [aBlock value. i := i + 1].
    ^self
"""


def install(world):
    """Create the builtin classes, bind them in the base environment and
    hang the handler tables off the world."""
    classes = {}
    for name, sup in BUILTIN_CLASS_NAMES:
        cls = ClassObject(name, classes[sup] if sup else None, (), builtin=True)
        classes[name] = cls
        world.track_class(cls)
        world.env.base[name] = cls

    world.builtin_classes = classes
    world.type_classes = {
        bool: classes["Boolean"],
        int: classes["Integer"],
        float: classes["Float"],
        str: classes["String"],
        Symbol: classes["Symbol"],
        type(None): classes["UndefinedObject"],
        list: classes["Array"],
        BlockClosure: classes["Block"],
        Process: classes["Process"],
        HostRandom: classes["Random"],
        TranscriptStream: classes["Transcript"],
    }
    world.typed_builtins = _typed_table()
    world.generic_builtins = dict(GENERIC)
    world.class_side_builtins = dict(CLASS_SIDE)
    world.transcript = TranscriptStream()
    world.env.base["Transcript"] = world.transcript
