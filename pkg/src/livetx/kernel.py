"""Object model and lookup across activation stacks.

Method and field lookup run in two dimensions: up the effective superclass
chain, and top-down through the process's activation stack at each level.
Field state lives out of the instances in a FieldStorage keyed by aliases so
that no activation, deactivation or shadowing ever destroys a written value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from livetx.errors import HierarchyViolation

BASE_TAG = "base"


class _Marker:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


REMOVED = _Marker("<removed>")    # method removal marker inside MethodEntry versions
DELETED = _Marker("<deleted>")    # environment deletion marker inside env deltas
NO_CHANGE = _Marker("<no-change>")


@dataclass(frozen=True, slots=True, eq=False)
class Alias:
    """Identity of one declared field: (class identity, name, generation).

    Minted once and compared by identity; two adds never share an alias.
    Generation 0 marks a base declaration; every transaction-level add mints
    a fresh positive generation, so re-adding a removed field silently starts
    an empty storage column (the old values stay in the old column).
    """

    class_id: int
    name: str
    gen: int


class ClassObject:
    """A class. Identity is forever; environment bindings come and go."""

    _next_ident = 1

    def __init__(self, name, superclass=None, field_names=(), builtin=False):
        self.ident = ClassObject._next_ident
        ClassObject._next_ident += 1
        self.name = name
        self.base_superclass = superclass
        self.base_fields = {n: Alias(self.ident, n, 0) for n in field_names}
        self.methods = {}  # selector -> MethodEntry
        self.builtin = builtin

    def __repr__(self):
        return f"<class {self.name}>"


class MethodEntry:
    """All versions of one selector on one class, keyed by transaction tag."""

    __slots__ = ("versions",)

    def __init__(self):
        self.versions = {}  # tag -> CompiledMethod | REMOVED

    def __repr__(self):
        return f"<MethodEntry {list(self.versions)}>"


class Instance:
    __slots__ = ("iid", "cls")

    def __init__(self, iid, cls):
        self.iid = iid
        self.cls = cls

    def __repr__(self):
        return f"<a {self.cls.name} #{self.iid}>"


@dataclass
class InstanceCell:
    alias: Alias


@dataclass
class SingleCell:
    class_name: str
    field_name: str


class FieldStorage:
    """Out-of-instance field state.

    instance cells are keyed (instance id, alias); single cells, the shared
    fallback for names that resolve to no declared field, are keyed by the
    defining class's name plus the field name. Unwritten cells read nil.
    """

    def __init__(self):
        self.cells = {}    # (iid, Alias) -> value
        self.singles = {}  # (class name, field name) -> value
        self.journal_len = 0

    def read(self, instance, key, overlay=None):
        if isinstance(key, InstanceCell):
            k = (instance.iid, key.alias)
            if overlay is not None and k in overlay:
                return overlay[k]
            return self.cells.get(k)
        k = (key.class_name, key.field_name)
        if overlay is not None and ("single", k) in overlay:
            return overlay[("single", k)]
        return self.singles.get(k)

    def write(self, instance, key, value, overlay=None):
        if isinstance(key, InstanceCell):
            k = (instance.iid, key.alias)
            if overlay is not None:
                overlay[k] = value
                return
            self.cells[k] = value
        else:
            k = (key.class_name, key.field_name)
            if overlay is not None:
                overlay[("single", k)] = value
                return
            self.singles[k] = value
        self.journal_len += 1

    def drop_alias(self, alias):
        """Used by merge/abort only; cells never die from (de)activation."""
        dead = [k for k in self.cells if k[1] == alias]
        for k in dead:
            del self.cells[k]

    def drop_instance(self, iid):
        dead = [k for k in self.cells if k[0] == iid]
        for k in dead:
            del self.cells[k]


class GlobalEnvironment:
    def __init__(self):
        self.base = {}  # name -> ClassObject

    def bind(self, name, cls):
        self.base[name] = cls

    def unbind(self, name):
        self.base.pop(name, None)


# ---------------------------------------------------------------------------
# Resolution. Stacks are sequences of EditTransaction objects, bottom first.

def env_resolve(env: GlobalEnvironment, name: str, stack):
    """Composed environment lookup: topmost delta wins, else base, else None."""
    for txn in reversed(stack):
        if name in txn.env_delta:
            value = txn.env_delta[name]
            return None if value is DELETED else value
    return env.base.get(name)


def effective_superclass(cls: ClassObject, stack):
    for txn in reversed(stack):
        changes = txn.class_changes.get(cls.ident)
        if changes is not None and changes.superclass_change is not NO_CHANGE:
            return changes.superclass_change
    return cls.base_superclass


def superclass_chain(cls: ClassObject, stack):
    """Yield cls and its effective ancestors; reject cycles lazily."""
    seen = set()
    k = cls
    while k is not None:
        if k.ident in seen:
            raise HierarchyViolation(
                f"superclass chain of {cls.name} revisits {k.name} under this view")
        seen.add(k.ident)
        yield k
        k = effective_superclass(k, stack)


def resolve_method(cls: ClassObject, selector: str, stack, start=None):
    """Two-dimensional dispatch. Returns (CompiledMethod, tag) or None.

    At each class: scan the stack top-down; a version wins, a removal marker
    forces dispatch to the effective superclass immediately, and the base
    entry is the fallback when no active transaction speaks for the selector.
    """
    seen = set()
    k = cls if start is None else start
    while k is not None:
        if k.ident in seen:
            raise HierarchyViolation(
                f"superclass chain of {cls.name} revisits {k.name} under this view")
        seen.add(k.ident)
        entry = k.methods.get(selector)
        if entry is not None:
            versions = entry.versions
            removed_here = False
            for txn in reversed(stack):
                m = versions.get(txn.tag)
                if m is None:
                    continue
                if m is REMOVED:
                    removed_here = True
                break
            else:
                m = None
            if m is not None and not removed_here:
                return m, _owning_tag(versions, m, stack)
            if not removed_here:
                base = versions.get(BASE_TAG)
                if base is not None:
                    return base, BASE_TAG
        k = effective_superclass(k, stack)
    return None


def _owning_tag(versions, method, stack):
    for txn in reversed(stack):
        if versions.get(txn.tag) is method:
            return txn.tag
    return BASE_TAG


def resolve_field(start_class: ClassObject, name: str, stack):
    """Resolve a field name from the executing method's defining class.

    Per class: the topmost transaction holding an add or remove for the name
    decides. An add yields that alias's instance cell. A remove aborts the
    scan at this class and restarts the full top-down scan at the effective
    superclass. With no transaction record, a base declaration wins. A chain
    that exhausts without a declaration falls back to the single cell keyed
    by the start class.
    """
    seen = set()
    k = start_class
    while k is not None:
        if k.ident in seen:
            raise HierarchyViolation(
                f"superclass chain of {start_class.name} revisits {k.name} under this view")
        seen.add(k.ident)
        decided = None
        for txn in reversed(stack):
            changes = txn.class_changes.get(k.ident)
            if changes is None:
                continue
            alias = changes.field_adds.get(name)
            if alias is not None:
                decided = ("add", alias)
                break
            if name in changes.field_removes:
                decided = ("remove", None)
                break
        if decided is None:
            alias = k.base_fields.get(name)
            if alias is not None:
                return InstanceCell(alias)
        elif decided[0] == "add":
            return InstanceCell(decided[1])
        # removed here, or not declared here: continue up the chain
        k = effective_superclass(k, stack)
    return SingleCell(start_class.name, name)


def declared_field_names(cls: ClassObject, stack, include_removed=False):
    """Names ever declared along the chain under this view.

    With include_removed, names whose only traces are base declarations or
    transaction adds anywhere on the chain also count even when a removal
    currently hides them; this is the compile-time name set.
    """
    names = []
    for k in superclass_chain(cls, stack):
        for n in k.base_fields:
            if n not in names:
                names.append(n)
        for txn in stack:
            changes = txn.class_changes.get(k.ident)
            if changes is None:
                continue
            for n in changes.field_adds:
                if n not in names:
                    names.append(n)
            if include_removed:
                for n in changes.field_removes:
                    if n not in names:
                        names.append(n)
    return names


def visible_fields(cls: ClassObject, stack):
    """Mapping of field name -> alias for every name that resolves to a
    declared field when starting at cls. Names falling through to single
    cells are not visible."""
    out = {}
    for name in declared_field_names(cls, stack, include_removed=True):
        key = resolve_field(cls, name, stack)
        if isinstance(key, InstanceCell):
            out[name] = key.alias
    return out


def visible_methods(cls: ClassObject, stack):
    """Mapping selector -> (defining class name, tag) for the composed view."""
    out = {}
    for k in superclass_chain(cls, stack):
        for selector in k.methods:
            if selector in out:
                continue
            hit = resolve_method(cls, selector, stack)
            if hit is not None:
                method, tag = hit
                owner = method.defining_class.name if method.defining_class else k.name
                out[selector] = (owner, tag)
    return dict(sorted(out.items()))
