"""Field visibility under stacked transactions: the add/remove/shadow matrix."""

import pytest

from livetx import txn as T
from livetx.errors import HierarchyViolation
from livetx.kernel import (
    Alias, ClassObject, InstanceCell, SingleCell, resolve_field, visible_fields,
)
from livetx.world import World


def fresh_class(world, name="C", fields=("a", "b"), superclass=None):
    cls = ClassObject(name, superclass or world.class_named("Object"), fields)
    world.track_class(cls)
    world.env.bind(name, cls)
    return cls


def recorded(world, label, *ops):
    """Create a transaction, stage it, apply (op, cls, name) records, unstage."""
    txn = world.registry.create(label)
    world.registry.stage(txn.tag)
    for op, cls, name in ops:
        if op == "add":
            T.record_field_add(world, txn.tag, cls, name)
        else:
            T.record_field_remove(world, txn.tag, cls, name)
    world.registry.unstage(txn.tag)
    return txn


@pytest.fixture
def figure():
    world = World()
    c = fresh_class(world)
    t1 = recorded(world, "one", ("remove", c, "a"), ("add", c, "c"))
    t2 = recorded(world, "two", ("add", c, "a"), ("remove", c, "c"))
    t3 = recorded(world, "three", ("remove", c, "a"))
    return world, c, t1, t2, t3


def test_base_view(figure):
    _, c, *_ = figure
    # aliases are identities; the empty view exposes the creation aliases
    assert visible_fields(c, ()) == {
        "a": c.base_fields["a"], "b": c.base_fields["b"]}


def test_single_removal_and_addition(figure):
    _, c, t1, _, _ = figure
    view = visible_fields(c, (t1,))
    assert set(view) == {"b", "c"}
    assert view["b"].gen == 0
    assert view["c"].gen > 0
    # the removed name falls through to the shared per-class cell
    assert resolve_field(c, "a", (t1,)) == SingleCell("C", "a")


def test_stacked_readd_wins(figure):
    _, c, t1, t2, _ = figure
    view = visible_fields(c, (t1, t2))
    assert set(view) == {"a", "b"}
    assert view["a"] == t2.class_changes[c.ident].field_adds["a"]
    assert view["a"].gen > 0
    assert resolve_field(c, "c", (t1, t2)) == SingleCell("C", "c")


def test_broken_dependency_shadows_base(figure):
    # with only the re-adding transaction active, its fresh alias shadows the
    # base declaration instead of exposing old data
    world, c, _, t2, _ = figure
    inst = world.new_instance(c)
    base_alias = c.base_fields["a"]
    world.storage.write(inst, InstanceCell(base_alias), 42)
    key = resolve_field(c, "a", (t2,))
    assert isinstance(key, InstanceCell) and key.alias != base_alias
    assert world.storage.read(inst, key) is None
    # the deletion of the never-added name has no effect on anything visible
    assert set(visible_fields(c, (t2,))) == {"a", "b"}


def test_removal_of_shadowed_field_hides_all(figure):
    _, c, t1, t2, t3 = figure
    assert set(visible_fields(c, (t1, t2, t3))) == {"b"}
    assert resolve_field(c, "a", (t1, t2, t3)) == SingleCell("C", "a")


def test_add_then_remove_same_transaction_leaves_only_removal():
    world = World()
    c = fresh_class(world)
    txn = recorded(world, "both", ("add", c, "d"), ("remove", c, "d"))
    changes = txn.class_changes[c.ident]
    assert changes.field_adds == {}
    assert changes.field_removes == {"d"}


def test_add_then_remove_hides_base_field():
    world = World()
    c = fresh_class(world)
    txn = recorded(world, "both", ("add", c, "a"), ("remove", c, "a"))
    assert set(visible_fields(c, (txn,))) == {"b"}


def test_remove_then_add_keeps_only_add():
    world = World()
    c = fresh_class(world)
    txn = recorded(world, "flip", ("remove", c, "a"), ("add", c, "a"))
    changes = txn.class_changes[c.ident]
    assert set(changes.field_adds) == {"a"}
    assert changes.field_removes == set()


def test_readd_within_transaction_is_idempotent():
    world = World()
    c = fresh_class(world)
    txn = world.registry.create("again")
    world.registry.stage(txn.tag)
    first = T.record_field_add(world, txn.tag, c, "x")
    second = T.record_field_add(world, txn.tag, c, "x")
    assert first is second


def test_fresh_generations_never_repeat():
    world = World()
    c = fresh_class(world)
    t1 = recorded(world, "one", ("add", c, "x"))
    t2 = recorded(world, "two", ("add", c, "x"))
    a1 = t1.class_changes[c.ident].field_adds["x"]
    a2 = t2.class_changes[c.ident].field_adds["x"]
    assert a1 != a2 and a1.gen != a2.gen


def test_unwritten_cells_read_nil():
    world = World()
    c = fresh_class(world)
    inst = world.new_instance(c)
    assert world.storage.read(inst, InstanceCell(c.base_fields["a"])) is None
    assert world.storage.read(inst, SingleCell("C", "zzz")) is None


def test_values_survive_view_changes():
    # a value written under one view stays put while other views come and go
    world = World()
    c = fresh_class(world)
    inst = world.new_instance(c)
    base_key = InstanceCell(c.base_fields["a"])
    world.storage.write(inst, base_key, 42)
    t1 = recorded(world, "one", ("remove", c, "a"))
    fall_through = resolve_field(c, "a", (t1,))
    world.storage.write(inst, fall_through, "shadow-value")
    assert world.storage.read(inst, base_key) == 42
    assert world.storage.read(inst, fall_through) == "shadow-value"
    assert resolve_field(c, "a", ()) == base_key


def test_resolution_starts_at_defining_class():
    world = World()
    top = fresh_class(world, "Top", ("shared",))
    sub = fresh_class(world, "Sub", ("own",), superclass=top)
    key = resolve_field(sub, "shared", ())
    assert key == InstanceCell(top.base_fields["shared"])
    # removing on the subclass has no effect: Sub never declared the name
    t1 = recorded(world, "one", ("remove", sub, "shared"))
    assert resolve_field(sub, "shared", (t1,)) == key
    # removing on the declaring class drops it to the single cell of the start
    t2 = recorded(world, "two", ("remove", top, "shared"))
    assert resolve_field(sub, "shared", (t2,)) == SingleCell("Sub", "shared")
    assert resolve_field(top, "shared", (t2,)) == SingleCell("Top", "shared")


def test_superclass_change_redirects_resolution():
    world = World()
    left = fresh_class(world, "Left", ("x",))
    right = fresh_class(world, "Right", ("x",))
    sub = fresh_class(world, "Sub", (), superclass=left)
    txn = world.registry.create("swap")
    world.registry.stage(txn.tag)
    T.record_superclass_set(world, txn.tag, sub, right)
    world.registry.unstage(txn.tag)
    base_key = resolve_field(sub, "x", ())
    moved_key = resolve_field(sub, "x", (txn,))
    assert base_key == InstanceCell(left.base_fields["x"])
    assert moved_key == InstanceCell(right.base_fields["x"])


def test_hierarchy_cycle_is_rejected():
    world = World()
    a = fresh_class(world, "A", ())
    b = fresh_class(world, "B", (), superclass=a)
    txn = world.registry.create("loop")
    world.registry.stage(txn.tag)
    T.record_superclass_set(world, txn.tag, a, b)
    world.registry.unstage(txn.tag)
    with pytest.raises(HierarchyViolation):
        resolve_field(b, "nowhere", (txn,))


def test_builtin_classes_take_no_field_changes():
    world = World()
    number = world.class_named("Integer")
    txn = world.registry.create("bad")
    world.registry.stage(txn.tag)
    with pytest.raises(T.TxnError):
        T.record_field_add(world, txn.tag, number, "extra")
    with pytest.raises(T.TxnError):
        T.record_field_remove(world, txn.tag, number, "extra")
