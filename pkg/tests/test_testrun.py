"""The in-image test runner: discovery, scoping, and image isolation."""

import pytest

from livetx.tools.scripts import import_script
from livetx.tools.testrun import run_tests
from livetx.world import World


PROGRAM = """\
class Stack extends Object fields: (items)
!
Stack >> init
    items := Array new: 0
!
Stack >> push: x
    | out |
    out := Array new: items size + 1.
    1 to: items size do: [:i | out at: i put: (items at: i)].
    out at: items size + 1 put: x.
    items := out
!
Stack >> size
    ^items size
!
class StackTest extends Object fields: (s)
!
StackTest >> setUp
    s := Stack new.
    s init
!
StackTest >> testStartsEmpty
    self assert: s size equals: 0
!
StackTest >> testPushGrows
    s push: 7.
    self assert: s size equals: 1
!
StackTest >> testBoom
    nil boom
!
StackTest >> testWrong
    self assert: 1 equals: 2
!
StackTest >> helperNotATest
    ^self
!
"""


@pytest.fixture
def world():
    w = World()
    report = w.load_program(PROGRAM)
    assert report.ok, report.errors
    return w


def test_discovery_and_outcomes(world):
    report = run_tests(world)
    by_sel = {r.selector: r for r in report.results}
    assert set(by_sel) == {"testStartsEmpty", "testPushGrows", "testBoom",
                           "testWrong"}
    assert by_sel["testStartsEmpty"].outcome == "pass"
    assert by_sel["testPushGrows"].outcome == "pass"
    assert by_sel["testBoom"].outcome == "error"
    assert "does-not-understand" in by_sel["testBoom"].detail
    assert by_sel["testWrong"].outcome == "fail"
    assert report.passed == 2 and report.failed == 1 and report.errored == 1
    assert not report.ok


def test_pattern_filters_by_selector_and_class(world):
    report = run_tests(world, pattern="Push")
    assert [r.selector for r in report.results] == ["testPushGrows"]
    report = run_tests(world, pattern="StackTest")
    assert len(report.results) == 4


def test_runs_leave_no_processes_and_do_not_move_the_image(world):
    h0 = world.state_hash()
    journal0 = world.storage.journal_len
    run_tests(world)
    assert world.state_hash() == h0
    assert world.storage.journal_len == journal0
    assert world.scheduler.processes == {}


def test_staged_view_flips_an_outcome(world):
    txn = import_script(
        world,
        "txn Pair Push\n"
        "method Stack >> push: x\n"
        "    | out |\n"
        "    out := Array new: items size + 2.\n"
        "    out at: items size + 1 put: x.\n"
        "    out at: items size + 2 put: x.\n"
        "    items := out\n"
        "!\n")
    base_report = run_tests(world, pattern="Push")
    assert base_report.ok
    staged_report = run_tests(world, pattern="Push", view=[txn])
    assert staged_report.failed == 1
    # tags are accepted in place of transaction objects
    again = run_tests(world, pattern="Push", view=[txn.tag])
    assert again.failed == 1


def test_test_classes_defined_inside_a_transaction_are_found(world):
    txn = import_script(
        world,
        "txn With Tests\n"
        "add-class ExtraTest Object ()\n"
        "method ExtraTest >> testTruth\n"
        "    self assert: true\n"
        "!\n")
    assert all(r.class_name != "ExtraTest"
               for r in run_tests(world).results)
    report = run_tests(world, view=[txn])
    assert any(r.class_name == "ExtraTest" and r.outcome == "pass"
               for r in report.results)


def test_report_lands_on_the_event_log(world):
    run_tests(world, pattern="Push")
    kinds = [e for e in world.scheduler.events if e["kind"] == "test-report"]
    assert kinds and kinds[-1]["total"] == 1 and kinds[-1]["passed"] == 1


def test_setup_failure_is_an_error_outcome(world):
    report = world.load_program(
        "class BadSetupTest extends Object fields: ()\n!\n"
        "BadSetupTest >> setUp\n    nil explode\n!\n"
        "BadSetupTest >> testNever\n    self assert: true\n!\n")
    assert report.ok
    rep = run_tests(world, pattern="Never")
    assert rep.results[0].outcome == "error"


def test_format_is_one_line_per_case(world):
    text = run_tests(world).format()
    lines = text.splitlines()
    assert len(lines) == 5
    assert lines[-1].startswith("4 run, 2 passed, 1 failed, 1 errors")
