"""Bundled demos: the bouncing ball, the epidemic, and their change scripts."""

import pytest

from livetx.demos import demo_source, script_source
from livetx.tools.demos import canonical_name, start_demo
from livetx.tools.scripts import apply_to_base, import_script, parse_script
from livetx.tools.testrun import run_tests
from livetx.world import World


def sim_errors(world, handle):
    return [e for e in world.scheduler.events
            if e["kind"] == "error" and e.get("pid") == handle.proc.pid]


def test_names_and_aliases():
    assert canonical_name("ball") == "bouncing-ball"
    assert canonical_name("disease") == "disease"
    with pytest.raises(ValueError):
        canonical_name("pinball")


def test_sources_are_bundled():
    assert "Ball >> bounce" in demo_source("ball")
    assert "Epidemic >> tick" in demo_source("disease")
    assert parse_script(script_source("gravity")).label == "Gravity"
    for name in ("infection", "recovery", "init"):
        parse_script(script_source(name))


def test_ball_flies_level_without_gravity():
    world = World()
    handle = start_demo(world, "ball")
    handle.advance(10)
    snap = handle.snapshot()
    assert snap["y"] == 80 and snap["vy"] == 0
    assert snap["x"] > 10
    assert not sim_errors(world, handle)
    handle.stop()
    assert handle.proc.status == "terminated"


def test_gravity_scoped_to_one_process():
    world = World()
    handle = start_demo(world, "ball")
    handle.advance(3)
    txn = import_script(world, script_source("gravity"), "gravity.txns")
    handle.advance(3)
    assert handle.snapshot()["vy"] == 0, "staged change must not leak"

    world.txn_activate([txn.tag], targets=[handle.proc], level="reentrant")
    handle.advance(5)
    active = handle.snapshot()
    assert active["vy"] < 0
    # a second ball world elsewhere still sees base behavior
    probe = world.eval_expression(
        "| b | b := Ball new. b setup. b step. ^b speed y", ())
    world.scheduler.run_process(probe)
    assert probe.error is None and probe.result == 0

    world.txn_deactivate([txn.tag], targets=[handle.proc], level="reentrant")
    handle.advance(3)
    vy_after = handle.snapshot()["vy"]
    handle.advance(3)
    assert handle.snapshot()["vy"] == vy_after, "gravity gone"
    assert not sim_errors(world, handle)
    handle.stop()


def test_snapshots_land_on_the_event_log():
    world = World()
    handle = start_demo(world, "ball")
    handle.advance(2)
    handle.snapshot()
    snaps = [e for e in world.scheduler.events if e["kind"] == "demo-snapshot"]
    assert snaps and snaps[-1]["name"] == "bouncing-ball"
    assert {"x", "y", "vx", "vy", "ticks"} <= set(snaps[-1])
    handle.stop()


def test_epidemic_is_deterministic_per_seed():
    world_a = World()
    a = start_demo(world_a, "disease", persons=30, seed=7, rate=200)
    a.advance(40)
    world_b = World()
    b = start_demo(world_b, "disease", persons=30, seed=7, rate=200)
    b.advance(40)
    sa, sb = a.snapshot(), b.snapshot()
    assert (sa["infected"], sa["clock"]) == (sb["infected"], sb["clock"])
    a.stop(), b.stop()


def test_zero_rate_stays_clean():
    world = World()
    handle = start_demo(world, "disease", persons=20, seed=3, rate=0)
    handle.advance(50)
    assert handle.snapshot()["infected"] == 0
    handle.stop()


def test_conversion_script_under_staged_view():
    world = World()
    handle = start_demo(world, "disease", persons=30, seed=7, rate=100)
    handle.advance(30)
    txn = import_script(world, script_source("infection"), "infection.txns")
    report = run_tests(world, pattern="InfectionLogic", view=[txn])
    assert report.ok and report.passed == 3
    # the suite travels with the transaction: the base view has no trace
    base_report = run_tests(world, pattern="InfectionLogic")
    assert base_report.results == []
    assert not sim_errors(world, handle)
    handle.stop()


def test_full_conversion_and_recovery_flow():
    world = World()
    handle = start_demo(world, "disease", persons=40, seed=11, rate=150)
    handle.advance(30)

    t_inf = import_script(world, script_source("infection"), "infection.txns")
    world.txn_activate([t_inf.tag], level="reentrant")
    handle.advance(30)
    world.txn_merge(t_inf.tag)
    handle.advance(10)

    t_rec = import_script(world, script_source("recovery"), "recovery.txns")
    assert run_tests(world, pattern="Recovery", view=[t_rec]).ok
    t_init = import_script(world, script_source("init"), "init.txns")
    world.txn_activate([t_rec.tag, t_init.tag], level="reentrant")
    handle.advance(10)
    world.txn_deactivate([t_init.tag], level="reentrant")
    handle.advance(120)

    snap = handle.snapshot()
    assert snap["clock"] == 200
    assert not sim_errors(world, handle)
    assert handle.proc.status == "runnable"
    handle.stop()


def test_direct_base_edit_breaks_the_running_simulation():
    world = World()
    handle = start_demo(world, "disease", persons=40, seed=11, rate=150)
    handle.advance(30)
    script = parse_script(script_source("infection"), "infection.txns")
    apply_to_base(world, script, after_each=lambda d: handle.advance(2))
    handle.advance(20)
    errs = sim_errors(world, handle)
    assert errs, "unscoped live edits should have broken the loop"
    assert any(e.get("nil_state") or
               e["error_kind"] == "does-not-understand" for e in errs)
