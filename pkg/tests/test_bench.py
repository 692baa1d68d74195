"""Benchmark harness shapes at deliberately small iteration counts."""

import csv
import io

import pytest

from livetx.kernel import visible_fields
from livetx.tools.bench import (
    build_call_world, build_plain_world, build_state_world, expected_effects,
    parse_txn_counts, run_variant, write_csv,
)

N = 2000


def test_plain_world_has_ten_methods_and_no_transactions():
    world = build_plain_world()
    bench = world.class_named("Bench")
    assert len(visible_fields(bench, ())) == 10
    assert world.registry.transactions == {}
    for i in range(1, 11):
        assert bench.methods[f"method{i}"]


def test_call_world_stacks_rewrite_method1():
    from livetx.kernel import resolve_field
    world, txns = build_call_world()
    assert len(txns) == 9
    bench = world.class_named("Bench")
    inst = world.new_instance(bench)
    for name in visible_fields(bench, ()):
        world.storage.write(inst, resolve_field(bench, name, ()), 0)
    world.env.bind("Probe", inst)
    proc = world.eval_expression("Probe method1", txns[:3])
    world.scheduler.run_process(proc)
    assert proc.error is None
    # three active transactions make method1 act like method4
    reads = {n: world.storage.read(inst, resolve_field(bench, n, ()))
             for n in visible_fields(bench, ())}
    touched = {n for n, v in reads.items() if v}
    assert touched == {"field1", "field2", "field3", "field4"}


def test_state_world_adds_one_field_per_transaction():
    world, txns = build_state_world()
    bench = world.class_named("Bench")
    assert set(visible_fields(bench, ())) == {"field1"}
    assert set(visible_fields(bench, txns[:4])) == {
        "field1", "field2", "field3", "field4", "field5"}


def test_expected_effects_oracle():
    assert expected_effects(0, 5)["field1"] == 5
    assert expected_effects(0, 5)["field2"] == 0
    assert expected_effects(9, 7) == {f"field{j}": 7 for j in range(1, 11)}


@pytest.mark.parametrize("variant", ["call", "state"])
def test_variant_rows_check_out(variant):
    result = run_variant(variant, txn_counts=(0, 2), iterations=N)
    assert [r.txn_count for r in result.rows] == [0, 2]
    for row in result.rows:
        touched = {n: v for n, v in row.effects.items() if v}
        assert touched == {f"field{j}": N
                           for j in range(1, row.txn_count + 2)}
        assert row.median_ms > 0 and row.slowdown > 0


def test_state_work_grows_with_transaction_count():
    result = run_variant("state", txn_counts=(0, 9), iterations=N, reps=3)
    first, last = result.rows
    # ten field bumps per send against one; timing noise cannot hide that
    assert last.median_ms > first.median_ms


def test_csv_has_the_table_columns(tmp_path):
    result = run_variant("call", txn_counts=(0,), iterations=500)
    out = tmp_path / "table.csv"
    write_csv(result, out)
    text = out.read_text()
    comment_lines = [l for l in text.splitlines() if l.startswith("#")]
    assert any("gc suspended" in l for l in comment_lines)
    rows = list(csv.reader(io.StringIO(
        "\n".join(l for l in text.splitlines() if not l.startswith("#")))))
    assert rows[0] == ["txn_count", "median_ms", "stddev_ms", "slowdown"]
    assert len(rows) == 2 and rows[1][0] == "0"


def test_txn_count_specs():
    assert parse_txn_counts("4") == (4,)
    assert parse_txn_counts("0..3") == (0, 1, 2, 3)
    assert parse_txn_counts("0,5,9") == (0, 5, 9)


def test_unknown_variant_is_rejected():
    with pytest.raises(ValueError):
        run_variant("warp", txn_counts=(0,), iterations=10)
