"""End-to-end interpreter behavior: sends, blocks, errors, state access."""

import pytest

from livetx.errors import (
    ASSERTION_FAILED, BLOCK_CANNOT_RETURN, DOES_NOT_UNDERSTAND,
    NON_BOOLEAN_RECEIVER,
)
from livetx.kernel import SingleCell
from livetx.world import World


@pytest.fixture
def world():
    return World()


def ok(world, source, stack=None):
    proc = world.eval_expression(source, stack=stack)
    assert proc.error is None, f"unexpected error: {proc.error}"
    return proc.result


def err(world, source, stack=None):
    proc = world.eval_expression(source, stack=stack)
    assert proc.error is not None, f"expected an error, got {proc.result!r}"
    return proc.error


def test_arithmetic_and_precedence(world):
    assert ok(world, "2 + 3 * 4") == 20
    assert ok(world, "2 + (3 * 4)") == 14
    assert ok(world, "10 / 4") == 2.5
    assert ok(world, "10 // 4") == 2
    assert ok(world, "10 \\\\ 3") == 1
    assert ok(world, "2 < 3") is True
    assert ok(world, "3 = 3.0") is True


def test_temps_and_assignment_chains(world):
    assert ok(world, "| a b | a := b := 2. a + b") == 4


def test_blocks_close_over_temps(world):
    assert ok(world, "| n add | n := 10. add := [:k | n + k]. add value: 5") == 15


def test_block_arity_is_checked(world):
    assert err(world, "[:a | a] value").kind == "primitive-failed"


def test_prelude_loops(world):
    assert ok(world, "| s | s := 0. 1 to: 5 do: [:i | s := s + i]. s") == 15
    assert ok(world, "| s | s := 0. 3 timesRepeat: [s := s + 2]. s") == 6
    assert ok(world, "#(1 2 3) collect: [:e | e * e]") == [1, 4, 9]
    assert ok(world, "#(1 2 3 4) inject: 0 into: [:acc :e | acc + e]") == 10


def test_while_loop_runs(world):
    assert ok(world, "| i | i := 0. [i < 100] whileTrue: [i := i + 1]. i") == 100


def test_cascade_answers_last_message(world):
    assert ok(world, "| a | a := #(0 0). a at: 1 put: 5; at: 2 put: 7; last") == 7
    assert ok(world, "| a | a := #(0 0). (a at: 1 put: 5; yourself) first") == 5


def test_literal_arrays_are_fresh_per_evaluation(world):
    source = "| a | a := #(1 2). a at: 1 put: 99. a first"
    assert ok(world, source) == 99
    assert ok(world, source) == 99


def test_nonlocal_return_exits_method(world):
    world.load_program(
        "class Finder\n!\nFinder >> firstOver: limit in: arr\n"
        "    arr do: [:e | e > limit ifTrue: [^e]].\n    ^nil")
    assert ok(world, "Finder new firstOver: 2 in: #(1 2 3 4)") == 3
    assert ok(world, "Finder new firstOver: 9 in: #(1 2 3)") is None


def test_escaped_block_cannot_return(world):
    world.load_program(
        "class Escapee\n!\nEscapee >> maker\n    ^[^1]")
    assert err(world, "Escapee new maker value").kind == BLOCK_CANNOT_RETURN


def test_class_definition_and_field_access(world):
    world.load_program(
        "class Point fields: (x y)\n!\n"
        "Point >> x\n    ^x\n!\nPoint >> setX: ax y: ay\n    x := ax. y := ay\n!\n"
        "Point >> sum\n    ^x + y")
    assert ok(world, "| p | p := Point new. p setX: 3 y: 4. p sum") == 7
    # unwritten fields read nil
    assert ok(world, "Point new x") is None


def test_instances_know_their_class(world):
    world.load_program("class Thing")
    assert ok(world, "Thing new className") == "Thing"
    assert ok(world, "3 className") == "Integer"
    assert ok(world, "3.5 className") == "Float"
    assert ok(world, "'s' className") == "String"
    assert ok(world, "nil className") == "UndefinedObject"
    assert ok(world, "Thing className") == "Class"


def test_super_sends_skip_own_version(world):
    world.load_program(
        "class Top\n!\nTop >> describe\n    ^'top'\n!\n"
        "class Sub extends Top\n!\n"
        "Sub >> describe\n    ^'sub and ' , super describe")
    assert ok(world, "Sub new describe") == "sub and top"


def test_does_not_understand_carries_selector(world):
    world.load_program("class Mute")
    e = err(world, "Mute new shout")
    assert e.kind == DOES_NOT_UNDERSTAND
    assert e.selector == "shout"
    assert e.receiver_class == "Mute"


def test_sends_to_nil_flag_nil_state(world):
    e = err(world, "nil bogusMessage")
    assert e.kind == DOES_NOT_UNDERSTAND and e.nil_state


def test_error_suspends_process_and_keeps_chain(world):
    world.load_program(
        "class Deep\n!\nDeep >> outer\n    ^self inner\n!\n"
        "Deep >> inner\n    ^self error: 'boom'")
    proc = world.eval_expression("Deep new outer")
    assert proc.status == "error"
    assert proc.error.kind == "user-error" and proc.error.message == "boom"
    events = [e for e in world.scheduler.events if e["kind"] == "error"]
    chain = events[-1]["call_chain"]
    assert "inner" in chain and "outer" in chain


def test_assertions(world):
    ok(world, "self assert: 1 < 2")
    ok(world, "self assert: [1 < 2]")
    ok(world, "self assert: 3 equals: 3")
    ok(world, "self deny: false")
    assert err(world, "self assert: 1 > 2").kind == ASSERTION_FAILED
    assert err(world, "self assert: 3 equals: 4").kind == ASSERTION_FAILED
    assert err(world, "self deny: true").kind == ASSERTION_FAILED


def test_non_boolean_condition_is_an_error(world):
    assert err(world, "3 ifTrue: [1]").kind == NON_BOOLEAN_RECEIVER
    assert err(world, "[3] whileTrue: [1]").kind == NON_BOOLEAN_RECEIVER


def test_conditionals_and_logic(world):
    assert ok(world, "3 < 4 ifTrue: ['yes'] ifFalse: ['no']") == "yes"
    assert ok(world, "false and: [1 / 0]") is False
    assert ok(world, "true or: [1 / 0]") is True
    assert ok(world, "nil isNil") is True
    assert ok(world, "nil ifNil: [7]") == 7
    assert ok(world, "3 ifNil: [7]") == 3
    assert ok(world, "3 ifNotNil: [:v | v * 2]") == 6


def test_division_by_zero(world):
    assert err(world, "1 / 0").kind == "primitive-failed"


def test_string_and_symbol_behavior(world):
    assert ok(world, "'ab' , 'cd'") == "abcd"
    assert ok(world, "'abc' size") == 3
    assert ok(world, "'abc' at: 2") == "b"
    assert ok(world, "#name asString") == "name"
    assert ok(world, "'name' asSymbol == #name") is True
    assert ok(world, "3 printString") == "3"
    assert ok(world, "'hi' printString") == "'hi'"
    assert ok(world, "#(1 2) printString") == "#(1 2)"


def test_transcript_collects_output(world):
    ok(world, "Transcript show: 'hello'; cr")
    assert world.transcript.take() == "hello\n"
    assert world.transcript.take() == ""


def test_random_is_deterministic(world):
    a = ok(world, "| r | r := Random seed: 7. "
                  "#(0 0 0) collect: [:x | r nextInt: 100]")
    b = ok(world, "| r | r := Random seed: 7. "
                  "#(0 0 0) collect: [:x | r nextInt: 100]")
    assert a == b
    assert all(1 <= v <= 100 for v in a)


def test_undefined_global_errors(world):
    from livetx import txn as T
    # the reference compiles while the binding exists; the deletion bites at
    # run time under the deleting view
    world.load_program(
        "class Doomed\n!\nclass Maker\n!\nMaker >> make\n    ^Doomed new")
    txn = world.registry.create("killer")
    world.registry.stage(txn.tag)
    T.record_class_remove(world, txn.tag, "Doomed")
    world.registry.unstage(txn.tag)
    assert ok(world, "Maker new make className") == "Doomed"
    e = err(world, "Maker new make", stack=[txn])
    assert e.kind == "undefined-global"


def test_removed_field_write_lands_in_single_cell(world):
    from livetx import txn as T
    world.load_program(
        "class Box fields: (v)\n!\nBox >> put: x\n    v := x\n!\nBox >> get\n    ^v")
    box = world.class_named("Box")
    txn = world.registry.create("dropper")
    world.registry.stage(txn.tag)
    T.record_field_remove(world, txn.tag, box, "v")
    world.registry.unstage(txn.tag)
    assert ok(world, "| b | b := Box new. b put: 42. b get", stack=[txn]) == 42
    assert world.storage.singles.get(("Box", "v")) == 42
    # the base column never saw the write
    assert ok(world, "| b | b := Box new. b put: 1. b get") == 1


def test_wait_counts_ticks(world):
    proc = world.eval_expression("self wait: 10. self wait: 10. thisProcess ticks")
    assert proc.error is None
    assert proc.result == 2


def test_process_introspection(world):
    proc = world.eval_expression("thisProcess pid", name="probe")
    assert proc.result == proc.pid
    assert ok(world, "thisProcess activeTransactions") == []
