"""Method lookup across the class chain and the activation stack."""

import pytest

from livetx import txn as T
from livetx.errors import HierarchyViolation
from livetx.kernel import (
    BASE_TAG, REMOVED, ClassObject, MethodEntry, resolve_method, visible_methods,
)
from livetx.world import World


class FakeMethod:
    def __init__(self, note):
        self.note = note
        self.defining_class = None

    def __repr__(self):
        return f"<m {self.note}>"


def put(cls, selector, tag, method):
    entry = cls.methods.get(selector)
    if entry is None:
        entry = cls.methods[selector] = MethodEntry()
    entry.versions[tag] = method
    if method is not REMOVED:
        method.defining_class = cls
    return method


def linked(world, *names):
    prev = world.class_named("Object")
    out = []
    for name in names:
        cls = ClassObject(name, prev)
        world.track_class(cls)
        world.env.bind(name, cls)
        out.append(cls)
        prev = cls
    return out


def txn_for(world, label):
    txn = world.registry.create(label)
    return txn


def test_base_dispatch_walks_chain():
    world = World()
    top, sub = linked(world, "Top", "Sub")
    m = put(top, "go", BASE_TAG, FakeMethod("top-go"))
    assert resolve_method(sub, "go", ()) == (m, BASE_TAG)
    assert resolve_method(sub, "missing", ()) is None


def test_topmost_transaction_version_wins():
    world = World()
    (cls,) = linked(world, "C")
    base = put(cls, "go", BASE_TAG, FakeMethod("base"))
    t1, t2 = txn_for(world, "one"), txn_for(world, "two")
    v1 = put(cls, "go", t1.tag, FakeMethod("v1"))
    v2 = put(cls, "go", t2.tag, FakeMethod("v2"))
    assert resolve_method(cls, "go", ()) == (base, BASE_TAG)
    assert resolve_method(cls, "go", (t1,)) == (v1, t1.tag)
    assert resolve_method(cls, "go", (t1, t2)) == (v2, t2.tag)
    assert resolve_method(cls, "go", (t2, t1)) == (v1, t1.tag)


def test_inactive_transactions_are_invisible():
    world = World()
    (cls,) = linked(world, "C")
    put(cls, "go", txn_for(world, "one").tag, FakeMethod("v1"))
    # the version exists on the entry, but no stack member claims it
    assert resolve_method(cls, "go", ()) is None


def test_removal_dispatches_to_superclass_immediately():
    world = World()
    top, sub = linked(world, "Top", "Sub")
    above = put(top, "go", BASE_TAG, FakeMethod("top"))
    put(sub, "go", BASE_TAG, FakeMethod("sub"))
    t1 = txn_for(world, "one")
    put(sub, "go", t1.tag, REMOVED)
    assert resolve_method(sub, "go", (t1,)) == (above, BASE_TAG)


def test_removal_shadows_lower_transaction_version():
    world = World()
    (cls,) = linked(world, "C")
    t1, t2 = txn_for(world, "one"), txn_for(world, "two")
    put(cls, "go", t1.tag, FakeMethod("v1"))
    put(cls, "go", t2.tag, REMOVED)
    assert resolve_method(cls, "go", (t1, t2)) is None


def test_new_selector_only_in_transaction():
    world = World()
    (cls,) = linked(world, "C")
    t1 = txn_for(world, "one")
    fresh = put(cls, "gravitate", t1.tag, FakeMethod("new"))
    assert resolve_method(cls, "gravitate", ()) is None
    assert resolve_method(cls, "gravitate", (t1,)) == (fresh, t1.tag)


def test_superclass_change_redirects_dispatch():
    world = World()
    left = ClassObject("Left", world.class_named("Object"))
    right = ClassObject("Right", world.class_named("Object"))
    sub = ClassObject("Sub", left)
    for c in (left, right, sub):
        world.track_class(c)
        world.env.bind(c.name, c)
    lm = put(left, "go", BASE_TAG, FakeMethod("left"))
    rm = put(right, "go", BASE_TAG, FakeMethod("right"))
    txn = world.registry.create("swap")
    world.registry.stage(txn.tag)
    T.record_superclass_set(world, txn.tag, sub, right)
    world.registry.unstage(txn.tag)
    assert resolve_method(sub, "go", ()) == (lm, BASE_TAG)
    assert resolve_method(sub, "go", (txn,)) == (rm, BASE_TAG)


def test_start_parameter_supports_super_sends():
    world = World()
    top, mid, sub = linked(world, "Top", "Mid", "Sub")
    tm = put(top, "go", BASE_TAG, FakeMethod("top"))
    put(mid, "go", BASE_TAG, FakeMethod("mid"))
    put(sub, "go", BASE_TAG, FakeMethod("sub"))
    assert resolve_method(sub, "go", (), start=top) == (tm, BASE_TAG)


def test_cycle_raises_instead_of_looping():
    world = World()
    a, b = linked(world, "A", "B")
    txn = world.registry.create("loop")
    world.registry.stage(txn.tag)
    T.record_superclass_set(world, txn.tag, a, b)
    world.registry.unstage(txn.tag)
    with pytest.raises(HierarchyViolation):
        resolve_method(b, "anything", (txn,))


def test_visible_methods_reports_owner_and_tag():
    world = World()
    top, sub = linked(world, "Top", "Sub")
    put(top, "go", BASE_TAG, FakeMethod("top"))
    t1 = txn_for(world, "one")
    put(sub, "go", t1.tag, FakeMethod("override"))
    put(sub, "stop", BASE_TAG, FakeMethod("stop"))
    base_view = visible_methods(sub, ())
    assert base_view["go"] == ("Top", BASE_TAG)
    live_view = visible_methods(sub, (t1,))
    assert live_view["go"] == ("Sub", t1.tag)
    assert live_view["stop"] == ("Sub", BASE_TAG)
