"""Change scripts: parsing, all-or-nothing import, and the base replay path."""

import pytest

from livetx.errors import TxnError
from livetx.kernel import SingleCell, resolve_field, visible_fields
from livetx.tools.scripts import (
    ScriptError, apply_to_base, import_script, parse_script,
)
from livetx.world import World


GOOD = """\
txn Shapes
add-class Shape Object (area)
method Shape >> area
    ^area
!
method Shape >> area: n
    area := n
!
add-class Circle Shape ()
# widen the base class afterwards
add-field Shape label
"""


def test_parse_reads_every_directive_kind():
    script = parse_script(
        "txn T\n"
        "method A >> go\n    ^1\n!\n"
        "remove-method A stop\n"
        "add-field A x\nremove-field A y\n"
        "superclass A B\n"
        "add-class D B (p q)\n"
        "remove-class D\n"
        "rename-class A A2\n")
    assert script.label == "T"
    assert [d.op for d in script.directives] == [
        "method", "remove-method", "add-field", "remove-field",
        "superclass", "add-class", "remove-class", "rename-class"]
    assert script.directives[5].args == ("D", "B", ("p", "q"))


def test_comments_and_blank_lines_are_skipped():
    script = parse_script("\n# note\ntxn T\n\n# more\nadd-field A x\n")
    assert len(script.directives) == 1


@pytest.mark.parametrize("text, fragment", [
    ("add-field A x\n", "must start with"),
    ("txn T\ntxn U\n", "only one txn"),
    ("txn T\nfrobnicate A\n", "unknown directive"),
    ("txn T\nadd-field A\n", "takes 2 arguments"),
    ("txn T\nmethod A go\n    ^1\n!\n", "needs 'Class >> pattern'"),
    ("txn T\nmethod A >> go\n    ^1\n", "not closed"),
    ("txn T\nmethod A >> go\n    ^1 +\n!\n", "bad method chunk"),
    ("txn T\nadd-class D B\n", "add-class needs"),
    ("txn \n", "empty transaction label"),
    ("", "empty script"),
])
def test_parse_rejects_malformed_scripts(text, fragment):
    with pytest.raises(ScriptError) as exc:
        parse_script(text)
    assert fragment in str(exc.value)


def test_import_stages_one_transaction_with_everything():
    world = World()
    txn = import_script(world, GOOD, "shapes.txns")
    assert world.registry.staged_order == [txn]
    assert txn.label == "Shapes"
    view = [txn]
    shape = world.class_named("Shape", view)
    circle = world.class_named("Circle", view)
    assert shape is not None and circle is not None
    assert set(visible_fields(circle, view)) == {"area", "label"}
    proc = world.eval_expression(
        "| c | c := Circle new. c area: 9. ^c area", view)
    world.scheduler.run_process(proc)
    assert proc.error is None and proc.result == 9
    # nothing leaked into the base image
    assert world.class_named("Shape", ()) is None


def test_later_directives_see_earlier_ones():
    world = World()
    txn = import_script(
        world,
        "txn Chain\n"
        "add-class Holder Object (v)\n"
        "method Holder >> v\n    ^v\n!\n"
        "add-field Holder w\n"
        "method Holder >> sum\n    ^1\n!\n")
    changes = txn.class_changes
    assert len(changes) == 1
    (only,) = changes.values()
    assert set(only.method_changes) == {"v", "sum"}
    assert set(only.field_adds) == {"w"}


def test_unknown_class_aborts_and_names_it():
    world = World()
    before = dict(world.registry.transactions)
    with pytest.raises(ScriptError) as exc:
        import_script(world, "txn Bad\nadd-field Nothing x\n")
    assert "Nothing" in str(exc.value)
    assert world.registry.transactions == before
    assert world.registry.staged_order == []


def test_error_midway_discards_earlier_directives():
    world = World()
    with pytest.raises(ScriptError):
        import_script(
            world,
            "txn Partial\n"
            "add-class Keeper Object ()\n"
            "add-field Missing x\n")
    assert world.class_named("Keeper", ()) is None
    assert world.registry.staged_order == []
    assert world.registry.transactions == {}


def test_builtin_structure_edits_are_refused():
    world = World()
    with pytest.raises(ScriptError):
        import_script(world, "txn Nope\nadd-field Integer cache\n")
    assert world.registry.transactions == {}


def test_apply_to_base_is_the_unscoped_path():
    world = World()
    report = world.load_program(
        "class Holder extends Object fields: (v)\n!\n"
        "Holder >> v\n    ^v\n!\n"
        "Holder >> v: n\n    v := n\n!\n")
    assert report.ok
    holder = world.class_named("Holder")
    inst = world.new_instance(holder)
    world.storage.write(inst, resolve_field(holder, "v", ()), 41)

    script = parse_script(
        "txn Unsafe\n"
        "remove-field Holder v\n"
        "method Holder >> v\n    ^0\n!\n")
    seen = []
    apply_to_base(world, script, after_each=lambda d: seen.append(d.op))
    assert seen == ["remove-field", "method"]
    assert world.registry.transactions == {}
    # the base removal destroyed the cell; reads fall to the shared cell
    assert "v" not in holder.base_fields
    assert world.storage.read(inst, SingleCell("Holder", "v")) is None


def test_remove_method_accepts_arrow_form():
    script = parse_script("txn T\nremove-method A >> go\n")
    assert script.directives[0].args == ("A", "go")
