"""Edit transactions: staged change sets over classes, methods and globals.

A transaction records at most one action per meta-object (last action wins).
Activation is a per-process stack concern and lives in the interpreter; this
module owns the records themselves plus merge, abort and validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from livetx.errors import HierarchyViolation, StaleTagError, TxnError
from livetx.kernel import (
    BASE_TAG, DELETED, NO_CHANGE, REMOVED, Alias, ClassObject, MethodEntry,
    env_resolve, effective_superclass,
)


@dataclass
class ClassChanges:
    cls: ClassObject
    field_adds: dict = field(default_factory=dict)      # name -> Alias
    field_removes: set = field(default_factory=set)
    method_changes: dict = field(default_factory=dict)  # selector -> method | REMOVED
    superclass_change: object = NO_CHANGE


class EditTransaction:
    def __init__(self, tag, label):
        self.tag = tag
        self.label = label
        self.staged = False
        self.class_changes = {}     # class ident -> ClassChanges
        self.env_delta = {}         # name -> ClassObject | DELETED
        self.minted_aliases = []    # every alias this transaction ever created

    def changes_for(self, cls: ClassObject) -> ClassChanges:
        changes = self.class_changes.get(cls.ident)
        if changes is None:
            changes = ClassChanges(cls)
            self.class_changes[cls.ident] = changes
        return changes

    def is_empty(self) -> bool:
        return not self.class_changes and not self.env_delta

    def summary(self) -> dict:
        methods = sum(len(c.method_changes) for c in self.class_changes.values())
        fields = sum(len(c.field_adds) + len(c.field_removes)
                     for c in self.class_changes.values())
        supers = sum(1 for c in self.class_changes.values()
                     if c.superclass_change is not NO_CHANGE)
        return {"tag": self.tag, "label": self.label, "staged": self.staged,
                "methods": methods, "fields": fields, "superclasses": supers,
                "globals": len(self.env_delta)}

    def __repr__(self):
        return f"<txn {self.tag} {self.label!r}>"


class TransactionRegistry:
    def __init__(self):
        self.transactions = {}    # tag -> EditTransaction
        self.staged_order = []    # bottom -> top
        self.global_activation = []  # applied to newly spawned processes
        self._counter = 0

    def create(self, label) -> EditTransaction:
        self._counter += 1
        tag = f"t{self._counter}"
        assert tag != BASE_TAG
        txn = EditTransaction(tag, label)
        self.transactions[tag] = txn
        return txn

    def get(self, tag) -> EditTransaction:
        txn = self.transactions.get(tag)
        if txn is None:
            raise StaleTagError(f"no transaction tagged {tag!r}")
        return txn

    def resolve(self, tag_or_label) -> EditTransaction:
        """Accept a tag, or a label when it is unambiguous."""
        if tag_or_label in self.transactions:
            return self.transactions[tag_or_label]
        hits = [t for t in self.transactions.values() if t.label == tag_or_label]
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise TxnError(f"label {tag_or_label!r} is ambiguous")
        raise StaleTagError(f"no transaction tagged or labeled {tag_or_label!r}")

    def stage(self, tag):
        txn = self.get(tag)
        if txn.staged:
            raise TxnError(f"{tag} is already staged")
        txn.staged = True
        self.staged_order.append(txn)
        return txn

    def unstage(self, tag):
        txn = self.get(tag)
        if not txn.staged:
            raise TxnError(f"{tag} is not staged")
        txn.staged = False
        self.staged_order.remove(txn)
        return txn

    def staged_top(self) -> EditTransaction | None:
        return self.staged_order[-1] if self.staged_order else None

    def require_staged_top(self, tag) -> EditTransaction:
        txn = self.get(tag)
        top = self.staged_top()
        if not txn.staged or txn is not top:
            raise TxnError(f"{tag} is not the staged-order top; "
                           "changes are captured by the topmost staged transaction")
        return txn

    def drop(self, txn):
        if txn.staged:
            txn.staged = False
            self.staged_order.remove(txn)
        if txn in self.global_activation:
            self.global_activation.remove(txn)
        del self.transactions[txn.tag]


# ---------------------------------------------------------------------------
# Recording. world supplies env, storage, registry and an alias generation
# counter; callers resolve class names to objects beforehand.

def record_method_set(world, tag, cls, selector, compiled):
    txn = world.registry.require_staged_top(tag)
    world.touch()
    txn.changes_for(cls).method_changes[selector] = compiled
    entry = cls.methods.get(selector)
    if entry is None:
        entry = cls.methods[selector] = MethodEntry()
    entry.versions[tag] = compiled
    return txn


def record_method_remove(world, tag, cls, selector):
    txn = world.registry.require_staged_top(tag)
    world.touch()
    txn.changes_for(cls).method_changes[selector] = REMOVED
    entry = cls.methods.get(selector)
    if entry is None:
        entry = cls.methods[selector] = MethodEntry()
    entry.versions[tag] = REMOVED
    return txn


def record_field_add(world, tag, cls, name):
    txn = world.registry.require_staged_top(tag)
    world.touch()
    if cls.builtin:
        raise TxnError(f"{cls.name} is a builtin; its instances carry no fields")
    changes = txn.changes_for(cls)
    existing = changes.field_adds.get(name)
    if existing is not None:
        return existing  # re-adding an added field keeps the alias and values
    changes.field_removes.discard(name)
    alias = Alias(cls.ident, name, world.next_generation())
    changes.field_adds[name] = alias
    txn.minted_aliases.append(alias)
    return alias


def record_field_remove(world, tag, cls, name):
    txn = world.registry.require_staged_top(tag)
    world.touch()
    if cls.builtin:
        raise TxnError(f"{cls.name} is a builtin; its instances carry no fields")
    changes = txn.changes_for(cls)
    # Add and delete are mutually exclusive per transaction: the final action
    # alone is recorded, so a remove overwrites a pending add outright.
    changes.field_adds.pop(name, None)
    changes.field_removes.add(name)
    return txn


def record_superclass_set(world, tag, cls, new_superclass):
    txn = world.registry.require_staged_top(tag)
    world.touch()
    if cls.builtin:
        raise TxnError(f"{cls.name} is a builtin; its place in the hierarchy is fixed")
    txn.changes_for(cls).superclass_change = new_superclass
    return txn


def record_class_add(world, tag, name, superclass, field_names):
    txn = world.registry.require_staged_top(tag)
    if env_resolve(world.env, name, world.registry.staged_order) is not None:
        raise TxnError(f"class name {name!r} is already bound in the capture view")
    cls = ClassObject(name, superclass, field_names)
    world.track_class(cls)
    txn.env_delta[name] = cls
    return cls


def record_class_remove(world, tag, name):
    txn = world.registry.require_staged_top(tag)
    if env_resolve(world.env, name, world.registry.staged_order) is None:
        raise TxnError(f"no class named {name!r} in the capture view")
    txn.env_delta[name] = DELETED
    return txn


def record_class_rename(world, tag, old, new):
    txn = world.registry.require_staged_top(tag)
    cls = env_resolve(world.env, old, world.registry.staged_order)
    if cls is None:
        raise TxnError(f"no class named {old!r} in the capture view")
    if getattr(cls, "builtin", False):
        raise TxnError(f"{old} is a builtin binding and cannot be renamed")
    if env_resolve(world.env, new, world.registry.staged_order) is not None:
        raise TxnError(f"class name {new!r} is already bound in the capture view")
    # Identity is preserved; only bindings move. Instances never notice.
    txn.env_delta[old] = DELETED
    txn.env_delta[new] = cls
    return cls


# ---------------------------------------------------------------------------
# Validation

@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _composed_class_names(world, stack):
    names = dict(world.env.base)
    for txn in stack:
        for name, value in txn.env_delta.items():
            if value is DELETED:
                names.pop(name, None)
            else:
                names[name] = value
    # globals may bind non-class values (streams); those have no hierarchy
    return {n: v for n, v in names.items() if isinstance(v, ClassObject)}


def validate(world, stack) -> ValidationReport:
    """Check the composed view: hierarchy must stay acyclic; field shadowing
    is legal under the relaxed invariant but reported as a note."""
    report = ValidationReport(ok=True)
    for name, cls in sorted(_composed_class_names(world, stack).items()):
        seen = set()
        chain = []
        k = cls
        while k is not None:
            if k.ident in seen:
                report.ok = False
                report.violations.append(
                    f"hierarchy: chain of {name} revisits {k.name}")
                break
            seen.add(k.ident)
            chain.append(k)
            k = effective_superclass(k, stack)
        declared = {}
        for k in chain:
            for fname in _local_field_names(k, stack):
                if fname in declared:
                    report.notes.append(
                        f"shadowing: {declared[fname]}.{fname} hides {k.name}.{fname}")
                else:
                    declared[fname] = k.name
    return report


def _local_field_names(cls, stack):
    """Field names cls itself declares under the view, shadowed or not."""
    names = []
    removed = set()
    for txn in reversed(stack):
        changes = txn.class_changes.get(cls.ident)
        if changes is None:
            continue
        for n in changes.field_adds:
            if n not in names and n not in removed:
                names.append(n)
        removed |= changes.field_removes - set(names)
    for n in cls.base_fields:
        if n not in names and n not in removed:
            names.append(n)
    return names


# ---------------------------------------------------------------------------
# Merge and abort

def merge(world, tag, target="base"):
    world.touch()
    if target == "base":
        _merge_to_base(world, tag)
    else:
        _merge_below(world, tag, target)


def _merge_to_base(world, tag):
    txn = world.registry.get(tag)
    _check_merged_base(world, txn)
    # Past this point nothing can fail: deactivate everywhere, then mutate.
    world.deactivate_everywhere(txn)
    env = world.env
    for name, value in txn.env_delta.items():
        if value is DELETED:
            env.unbind(name)
        else:
            env.bind(name, value)
    for changes in txn.class_changes.values():
        cls = changes.cls
        if changes.superclass_change is not NO_CHANGE:
            cls.base_superclass = changes.superclass_change
        for name in changes.field_removes:
            old = cls.base_fields.pop(name, None)
            if old is not None:
                world.storage.drop_alias(old)  # single cells survive
        for name, alias in changes.field_adds.items():
            old = cls.base_fields.get(name)
            if old is not None:
                world.storage.drop_alias(old)
            cls.base_fields[name] = alias
        for selector, version in changes.method_changes.items():
            entry = cls.methods.get(selector)
            if entry is None:
                continue
            if version is REMOVED:
                entry.versions.pop(BASE_TAG, None)
            else:
                entry.versions[BASE_TAG] = version
            entry.versions.pop(tag, None)
            if not entry.versions:
                del cls.methods[selector]
    kept = {a for c in txn.class_changes.values() for a in c.field_adds.values()}
    for alias in txn.minted_aliases:
        if alias not in kept:
            world.storage.drop_alias(alias)
    world.registry.drop(txn)
    world.log_txn_event("txn-merged", txn, target="base")


def _check_merged_base(world, txn):
    """Reject the merge atomically if the merged base would break the strict
    field invariant or the hierarchy invariant."""

    def future_superclass(cls):
        changes = txn.class_changes.get(cls.ident)
        if changes is not None and changes.superclass_change is not NO_CHANGE:
            return changes.superclass_change
        return cls.base_superclass

    def future_fields(cls):
        changes = txn.class_changes.get(cls.ident)
        names = set(cls.base_fields)
        if changes is not None:
            names -= changes.field_removes
            names |= set(changes.field_adds)
        return names

    env_names = dict(world.env.base)
    for name, value in txn.env_delta.items():
        if value is DELETED:
            env_names.pop(name, None)
        else:
            env_names[name] = value
    classes = [v for v in env_names.values() if isinstance(v, ClassObject)]
    classes.extend(c.cls for c in txn.class_changes.values())
    checked = set()
    for cls in classes:
        if cls.ident in checked:
            continue
        checked.add(cls.ident)
        seen = set()
        declared = {}
        k = cls
        while k is not None:
            if k.ident in seen:
                raise TxnError(
                    f"merge rejected: hierarchy of {cls.name} would contain a cycle")
            seen.add(k.ident)
            for fname in future_fields(k):
                if fname in declared:
                    raise TxnError(
                        "merge rejected: field invariant violation, "
                        f"'{fname}' would appear on {declared[fname]} and {k.name} "
                        f"in the chain of {cls.name}")
                declared[fname] = k.name
            k = future_superclass(k)


def _merge_below(world, tag, target_tag):
    upper = world.registry.get(tag)
    lower = world.registry.get(target_tag)
    order = world.registry.staged_order
    if upper not in order or lower not in order \
            or order.index(upper) != order.index(lower) + 1:
        raise TxnError(f"{tag} must sit directly above {target_tag} in staged order")
    world.deactivate_everywhere(upper)
    for name, value in upper.env_delta.items():
        lower.env_delta[name] = value
    for ident, changes in upper.class_changes.items():
        dest = lower.changes_for(changes.cls)
        if changes.superclass_change is not NO_CHANGE:
            dest.superclass_change = changes.superclass_change
        for selector, version in changes.method_changes.items():
            dest.method_changes[selector] = version
            entry = changes.cls.methods[selector]
            entry.versions[lower.tag] = version
            entry.versions.pop(tag, None)
        for name, alias in changes.field_adds.items():
            old = dest.field_adds.get(name)
            if old is not None:
                world.storage.drop_alias(old)
            dest.field_removes.discard(name)
            dest.field_adds[name] = alias  # the upper alias is retained
        for name in changes.field_removes:
            old = dest.field_adds.pop(name, None)
            if old is not None:
                world.storage.drop_alias(old)
            dest.field_removes.add(name)
    lower.minted_aliases.extend(upper.minted_aliases)
    world.registry.drop(upper)
    world.log_txn_event("txn-merged", upper, target=target_tag)


def abort(world, tag):
    world.touch()
    txn = world.registry.get(tag)
    world.deactivate_everywhere(txn)
    for changes in txn.class_changes.values():
        cls = changes.cls
        for selector in changes.method_changes:
            entry = cls.methods.get(selector)
            if entry is None:
                continue
            entry.versions.pop(tag, None)
            if not entry.versions:
                del cls.methods[selector]
    for alias in txn.minted_aliases:
        world.storage.drop_alias(alias)
    world.registry.drop(txn)
    world.log_txn_event("txn-aborted", txn)
