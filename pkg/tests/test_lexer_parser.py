"""Lexer and parser behavior, including unparse round-trips."""

import pytest

from livetx.lang import ast as A
from livetx.lang import lexer as lx
from livetx.lang.parser import (
    ParseError, parse_expression_source, parse_method_source, parse_program,
    split_chunks,
)


def toks(text):
    return [(t.type, t.value) for t in lx.tokenize(text) if t.type != lx.EOF]


def test_basic_tokens():
    assert toks("x := 3 + 4.") == [
        (lx.NAME, "x"), (lx.ASSIGN, ":="), (lx.INT, 3),
        (lx.BINOP, "+"), (lx.INT, 4), (lx.DOT, "."),
    ]


def test_keyword_vs_assign():
    assert toks("at: 1 put: 2")[0] == (lx.KEYWORD, "at:")
    # name directly followed by := is an assignment, not a keyword
    assert toks("x := 1")[:2] == [(lx.NAME, "x"), (lx.ASSIGN, ":=")]


def test_string_and_comment():
    assert toks("'it''s' \"a comment\" 5") == [(lx.STRING, "it's"), (lx.INT, 5)]


def test_symbols_and_literal_arrays():
    got = toks("#foo #at:put: #+ #(1 2)")
    assert got[0] == (lx.SYMBOL, "foo")
    assert got[1] == (lx.SYMBOL, "at:put:")
    assert got[2] == (lx.SYMBOL, "+")
    assert got[3][0] == lx.HASHPAREN


def test_negative_number_positions():
    # a minus after an operand is subtraction, elsewhere it may sign a literal
    assert toks("-4")[0] == (lx.INT, -4)
    assert toks("3 -4") == [(lx.INT, 3), (lx.BINOP, "-"), (lx.INT, 4)]
    assert toks("foo: -4")[1] == (lx.INT, -4)
    assert toks("(3) - 4")[3] == (lx.BINOP, "-")


def test_float_tokens():
    assert toks("1.5 + 2.25") == [(lx.FLOAT, 1.5), (lx.BINOP, "+"), (lx.FLOAT, 2.25)]
    # a trailing period is a statement dot, not a decimal point
    assert toks("5.") == [(lx.INT, 5), (lx.DOT, ".")]


def test_chunk_splitting_keeps_line_numbers():
    chunks = split_chunks("a\n!\nb\nc\n!\n\nd\n")
    assert [(c.text, c.line) for c in chunks] == [("a", 1), ("b\nc", 3), ("\nd\n", 6)]


def test_classify_and_parse_program():
    program = parse_program(
        "class Point fields: (x y)\n!\nPoint >> x\n    ^x\n!\n3 + 4")
    assert program.ok
    assert [c.kind for c in program.chunks] == ["classdef", "method", "expression"]
    cd = program.chunks[0].ast
    assert cd.name == "Point" and cd.fields == ("x", "y")
    assert cd.superclass == "Object"


def test_classdef_with_superclass():
    program = parse_program("class Ball extends Thing fields: (x y vx vy)")
    assert program.chunks[0].ast.superclass == "Thing"


def test_bad_chunk_reports_diagnostic():
    program = parse_program("3 + + 4")
    assert not program.ok
    assert program.diagnostics and program.diagnostics[0].severity == "error"


def test_precedence_shape():
    ast = parse_expression_source("1 + 2 * 3 max: 4 factorial")
    # keyword send at top; receiver is the binary chain; arg gets the unary
    ret = ast.body[-1]
    send = ret.expr
    assert send.selector == "max:"
    assert send.receiver.selector == "*"
    assert send.receiver.receiver.selector == "+"
    assert send.args[0].selector == "factorial"


def test_cascade_structure():
    ast = parse_expression_source("x at: 1 put: 5; at: 2 put: 6; size")
    casc = ast.body[-1].expr
    assert isinstance(casc, A.Cascade)
    assert casc.head.selector == "at:put:"
    assert [s for s, _ in casc.messages] == ["at:put:", "size"]
    assert isinstance(casc.head.receiver, A.Name)


def test_block_params_and_temps():
    ast = parse_expression_source("[:a :b | | t | t := a + b. t]")
    block = ast.body[-1].expr
    assert block.params == ("a", "b")
    assert block.temps == ("t",)
    assert len(block.body) == 2


def test_nonlocal_return_inside_block():
    m = parse_method_source("C >> find\n    #(1 2) do: [:e | ^e].\n    ^nil")
    blk = m.body[0].args[0]
    assert isinstance(blk.body[0], A.Return)


def test_reserved_words_cannot_be_assigned():
    with pytest.raises((ParseError, lx.LexError)):
        parse_expression_source("self := 3")


def test_method_patterns():
    assert parse_method_source("C >> foo\n    ^1").selector == "foo"
    assert parse_method_source("C >> + other\n    ^other").selector == "+"
    m = parse_method_source("C >> at: k put: v\n    ^v")
    assert m.selector == "at:put:" and m.params == ("k", "v")


def test_literal_array_contents():
    ast = parse_expression_source("#(1 2.5 'hi' sym nested: (3 4) true nil)")
    value = ast.body[-1].expr.value
    assert value[0] == 1 and value[1] == 2.5 and value[2] == "hi"
    assert value[3] == A.Symbol("sym")
    assert value[4] == A.Symbol("nested:")
    assert value[5] == (3, 4)
    assert value[6] is True and value[7] is None


def round_trip(source):
    first = parse_expression_source(source)
    text = A.unparse_body(first.body)
    if first.temps:
        text = "| %s | %s" % (" ".join(first.temps), text)
    second = parse_expression_source(text)
    assert first == second, f"round trip drifted:\n{source!r}\n{text!r}"


@pytest.mark.parametrize("source", [
    "3 + 4 * 2",
    "x := y := 5",
    "| a b | a := 1. b := a + 2. b",
    "#(1 2 3) inject: 0 into: [:acc :e | acc + e]",
    "obj at: 1 put: 2; removeAll; yourself",
    "[:x | x * x] value: 9",
    "1 < 2 and: [2 < 3]",
    "o foo: 3 bar: (x baz: 4) + 5",
    "arr at: (i + 1) put: -7",
])
def test_expression_round_trip(source):
    round_trip(source)


FIGURE_ONE_METHODS = [
    """Simulation >> mainloop
  [running] whileTrue: [
    self ball step.
    self wait: 10]""",
    """Ball >> step
  self bounce; move; gravitate""",
    """Ball >> move
  self position: (self position + self speed)""",
    """Ball >> gravitate
  self speed y: (self speed y - Simulation gravity)""",
]


@pytest.mark.parametrize("source", FIGURE_ONE_METHODS)
def test_bouncing_ball_sources_round_trip(source):
    first = parse_method_source(source)
    text = A.unparse_method(first)
    second = parse_method_source(text)
    assert first == second


def test_bouncing_ball_cascade_shape():
    m = parse_method_source(FIGURE_ONE_METHODS[1])
    casc = m.body[0]
    assert isinstance(casc, A.Cascade)
    assert isinstance(casc.head.receiver, A.SelfRef)
    assert casc.head.selector == "bounce"
    assert [s for s, _ in casc.messages] == ["move", "gravitate"]
