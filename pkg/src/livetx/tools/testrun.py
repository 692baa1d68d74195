"""In-image test runner.

Test cases are ordinary classes whose names end in Test; every unary
selector starting with "test" is one case. Each case runs in its own
fresh process whose activation stack is the global stack plus the
requested extra transactions, so a staged change set can be exercised
before anything is activated for real. Field writes made by test
processes land in a per-process overlay and are thrown away with the
process: a test run never moves the image.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..errors import ASSERTION_FAILED
from ..kernel import ClassObject, env_resolve, visible_methods


@dataclass
class TestResult:
    class_name: str
    selector: str
    outcome: str  # "pass" | "fail" | "error"
    detail: str = ""


@dataclass
class TestReport:
    results: list[TestResult] = field(default_factory=list)
    seconds: float = 0.0
    steps: int = 0
    view: tuple = ()

    @property
    def passed(self):
        return sum(1 for r in self.results if r.outcome == "pass")

    @property
    def failed(self):
        return sum(1 for r in self.results if r.outcome == "fail")

    @property
    def errored(self):
        return sum(1 for r in self.results if r.outcome == "error")

    @property
    def ok(self):
        return self.failed == 0 and self.errored == 0

    def format(self) -> str:
        lines = []
        for r in self.results:
            mark = {"pass": "ok", "fail": "FAIL", "error": "ERROR"}[r.outcome]
            line = f"{mark:5} {r.class_name}>>{r.selector}"
            if r.detail:
                line += f"  ({r.detail})"
            lines.append(line)
        lines.append(f"{len(self.results)} run, {self.passed} passed, "
                     f"{self.failed} failed, {self.errored} errors "
                     f"in {self.seconds:.2f}s")
        return "\n".join(lines)


def _run_stack(world, view):
    stack = list(world.global_stack)
    for item in view:
        txn = world.registry.resolve(str(item)) if not hasattr(item, "tag") \
            else item
        if txn not in stack:
            stack.append(txn)
    return stack


def discover(world, stack, pattern=""):
    """Yield (class, sorted test selectors) for every visible *Test class."""
    names = set(world.env.base)
    for txn in stack:
        names.update(txn.env_delta)
    for name in sorted(names):
        if not name.endswith("Test"):
            continue
        cls = env_resolve(world.env, name, stack)
        if not isinstance(cls, ClassObject):
            continue
        selectors = [s for s in visible_methods(cls, stack)
                     if s.startswith("test") and ":" not in s]
        if pattern:
            selectors = [s for s in selectors
                         if pattern in s or pattern in name]
        if selectors:
            yield cls, sorted(selectors)


def run_tests(world, pattern="", view=()) -> TestReport:
    stack = _run_stack(world, view)
    report = TestReport(view=tuple(getattr(t, "tag", t) for t in view))
    started = time.perf_counter()
    step0 = world.scheduler.step
    for cls, selectors in discover(world, stack, pattern):
        vis = visible_methods(cls, stack)
        for sel in selectors:
            report.results.append(_run_one(world, cls, sel, stack, vis))
    report.seconds = time.perf_counter() - started
    report.steps = world.scheduler.step - step0
    world.scheduler.emit(
        "test-report", total=len(report.results), passed=report.passed,
        failed=report.failed, errored=report.errored,
        view=list(report.view))
    return report


def _run_one(world, cls, selector, stack, vis) -> TestResult:
    lines = [f"| t | t := {cls.name} new."]
    if "setUp" in vis:
        lines.append("t setUp.")
    lines.append(f"t {selector}.")
    if "tearDown" in vis:
        lines.append("t tearDown.")
    source = "\n".join(lines)
    # overlay={} keeps every field write local to this process
    proc = world.spawn_expression(source, stack=stack,
                                  name=f"{cls.name}>>{selector}", overlay={})
    try:
        status = world.scheduler.run_alone(proc)
        if proc.error is None:
            if status != "terminated":
                return TestResult(cls.name, selector, "error",
                                  f"did not finish: {status}")
            return TestResult(cls.name, selector, "pass")
        err = proc.error
        detail = err.message
        if err.kind == ASSERTION_FAILED:
            return TestResult(cls.name, selector, "fail", detail)
        return TestResult(cls.name, selector, "error",
                          f"{err.kind}: {detail}")
    finally:
        world.scheduler.forget(proc)
