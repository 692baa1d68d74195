"""Dispatch and field-access cost measurements.

Two variants, each swept over 0..9 active transactions:

  call   ten methods where method1 increments field1, method2 increments
         field1 and field2, and so on. Transaction k replaces method1
         with the body of method(k+1). Activating the first k transactions
         and sending method1 a million times is then the same workload as
         sending method(k+1) in a plain image, which is the baseline row.

  state  the class starts with one field; transaction k adds field(k+1)
         and replaces method1 so it increments every field visible so far.
         The baseline is the same as for call: a plain class doing the
         equivalent amount of field work with no transaction machinery.

Every timed section runs with the host garbage collector suspended and
dispatch event logging off. The slowdown column is the variant median
over the plain-image median for the same amount of work.
"""

from __future__ import annotations

import csv
import gc
import statistics
import time
from dataclasses import dataclass, field

from ..kernel import resolve_field, visible_fields
from ..world import World

FIELD_COUNT = 10
DEFAULT_ITERATIONS = 1_000_000
DEFAULT_TXNS = tuple(range(10))


@dataclass
class BenchRow:
    txn_count: int
    median_ms: float
    stddev_ms: float
    baseline_ms: float
    slowdown: float
    # field name -> final value, for checking the workload really ran
    effects: dict = field(default_factory=dict)


@dataclass
class BenchResult:
    variant: str
    iterations: int
    reps: int
    rows: list[BenchRow] = field(default_factory=list)

    def format_table(self) -> str:
        lines = [f"{'txns':>4}  {'median ms':>10}  {'stddev':>8}  "
                 f"{'plain ms':>10}  {'slowdown':>8}"]
        for r in self.rows:
            lines.append(f"{r.txn_count:>4}  {r.median_ms:>10.1f}  "
                         f"{r.stddev_ms:>8.2f}  {r.baseline_ms:>10.1f}  "
                         f"{r.slowdown:>8.2f}")
        return "\n".join(lines)


def _method_source(name, upto):
    body = ".\n    ".join(
        f"field{j} := field{j} + 1" for j in range(1, upto + 1))
    return f"Bench >> {name}\n    {body}"


def _class_source(field_count):
    names = " ".join(f"field{j}" for j in range(1, field_count + 1))
    return f"class Bench extends Object fields: ({names})"


def build_plain_world() -> World:
    """The no-transaction image: ten fields, ten methods, empty registry."""
    w = World()
    w.scheduler.log_dispatch = False
    chunks = [_class_source(FIELD_COUNT)]
    chunks += [_method_source(f"method{i}", i) for i in range(1, 11)]
    report = w.load_program("\n!\n".join(chunks) + "\n!\n", target="base")
    assert report.ok, report.errors
    return w


def build_call_world():
    """Ten methods in base; nine transactions, where activating the first
    k makes method1 behave like method(k+1)."""
    w = build_plain_world()
    txns = []
    for i in range(1, 10):
        t = w.txn_create(f"call-depth-{i}")
        w.txn_stage(t.tag)
        w.accept_method(_method_source("method1", i + 1), target="staged")
        w.txn_unstage(t.tag)
        txns.append(t)
    return w, txns


def build_state_world():
    """One base field; transaction k adds field(k+1) and widens method1
    to touch every field it can see."""
    w = World()
    w.scheduler.log_dispatch = False
    base = (_class_source(1) + "\n!\n" + _method_source("method1", 1)
            + "\n!\n")
    report = w.load_program(base, target="base")
    assert report.ok, report.errors
    from .. import txn as txnmod
    txns = []
    for i in range(1, 10):
        t = w.txn_create(f"state-depth-{i}")
        w.txn_stage(t.tag)
        cls = w.class_named("Bench", w.registry.staged_order)
        txnmod.record_field_add(w, t.tag, cls, f"field{i + 1}")
        w.accept_method(_method_source("method1", i + 1), target="staged")
        txns.append(t)
    for t in txns:
        w.txn_unstage(t.tag)
    return w, txns


def _zero_fields(world, inst, stack):
    cls = inst.cls
    for name in visible_fields(cls, stack):
        cell = resolve_field(cls, name, stack)
        world.storage.write(inst, cell, 0)


def _read_fields(world, inst, stack):
    cls = inst.cls
    out = {}
    for name in sorted(visible_fields(cls, stack)):
        cell = resolve_field(cls, name, stack)
        out[name] = world.storage.read(inst, cell)
    return out


_DRIVER = ("| i | i := 0. "
           "[i < {n}] whileTrue: [BenchSubject {sel}. i := i + 1]")


def _measure_once(world, selector, stack, iterations):
    """One timed run: fresh instance, zeroed fields, a tight send loop.
    Returns (seconds, field effects)."""
    cls = world.class_named("Bench", stack)
    inst = world.new_instance(cls)
    world.env.bind("BenchSubject", inst)
    _zero_fields(world, inst, stack)
    source = _DRIVER.format(n=iterations, sel=selector)
    proc = world.spawn_expression(source, stack=stack, name="bench")
    gc_was_on = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        t0 = time.perf_counter()
        world.scheduler.run_alone(proc)
        elapsed = time.perf_counter() - t0
    finally:
        if gc_was_on:
            gc.enable()
    if proc.error is not None:
        raise RuntimeError(f"benchmark run failed: {proc.error}")
    effects = _read_fields(world, inst, stack)
    world.scheduler.forget(proc)
    world.env.unbind("BenchSubject")
    return elapsed, effects


def expected_effects(txn_count, iterations):
    """With k transactions active, fields 1..k+1 each gain one increment
    per send; any other visible field stays zero."""
    out = {}
    for j in range(1, FIELD_COUNT + 1):
        name = f"field{j}"
        out[name] = iterations if j <= txn_count + 1 else 0
    return out


def run_variant(variant, txn_counts=DEFAULT_TXNS,
                iterations=DEFAULT_ITERATIONS, reps=1,
                on_progress=None) -> BenchResult:
    if variant == "call":
        world, txns = build_call_world()
    elif variant == "state":
        world, txns = build_state_world()
    else:
        raise ValueError(f"unknown variant {variant!r}")
    plain = build_plain_world()
    result = BenchResult(variant, iterations, reps)
    counts = sorted(txn_counts)
    times = {k: [] for k in counts}
    base_times = {k: [] for k in counts}
    effects = {}
    # discarded warm-up of the heaviest row in each image, so the first
    # recorded rep is not systematically slower than the rest
    deepest = counts[-1]
    _measure_once(world, "method1", [txns[i] for i in range(deepest)],
                  iterations)
    _measure_once(plain, f"method{deepest + 1}", (), iterations)
    # repetitions are interleaved across rows, each paired with its own
    # baseline, so a slow host phase shifts every row instead of biasing
    # whichever row it happens to land on
    for _ in range(reps):
        for k in counts:
            stack = [txns[i] for i in range(k)]
            secs, eff = _measure_once(world, "method1", stack, iterations)
            times[k].append(secs * 1000.0)
            effects[k] = eff
            secs, _ = _measure_once(plain, f"method{k + 1}", (), iterations)
            base_times[k].append(secs * 1000.0)
    for k in counts:
        median = statistics.median(times[k])
        base = statistics.median(base_times[k])
        stddev = statistics.stdev(times[k]) if reps > 1 else 0.0
        visible = {n: v for n, v in expected_effects(k, iterations).items()
                   if n in effects[k]}
        if effects[k] != visible:
            raise RuntimeError(
                f"{variant} row {k}: field effects {effects[k]} != {visible}")
        row = BenchRow(k, median, stddev, base, median / base, effects[k])
        result.rows.append(row)
        if on_progress is not None:
            on_progress(row)
    return result


def write_csv(result: BenchResult, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# variant={result.variant}\n")
        fh.write(f"# iterations={result.iterations} reps={result.reps}\n")
        fh.write("# host gc suspended and dispatch logging off "
                 "during timed sections\n")
        writer = csv.writer(fh)
        writer.writerow(["txn_count", "median_ms", "stddev_ms", "slowdown"])
        for r in result.rows:
            writer.writerow([r.txn_count, f"{r.median_ms:.3f}",
                             f"{r.stddev_ms:.3f}", f"{r.slowdown:.3f}"])


def parse_txn_counts(spec: str):
    """Accept "4", "0..6" and "0,3,9" forms."""
    spec = spec.strip()
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    if "," in spec:
        return tuple(int(p) for p in spec.split(","))
    return (int(spec),)
