"""Long-running demo simulations driven by the scheduler.

A demo is a bundled program plus one process running its mainloop. The
handle advances the simulation in wall-clock-free ticks (one wait: call
is one tick) and takes snapshots of the interesting state, which also
land on the event log as demo-snapshot events so remote viewers can
follow along.
"""

from __future__ import annotations

from ..demos import demo_source
from ..errors import LiveError
from ..kernel import resolve_field

DEMO_NAMES = ("bouncing-ball", "disease")

_ALIASES = {"ball": "bouncing-ball", "epidemic": "disease"}


def canonical_name(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in DEMO_NAMES:
        raise ValueError(f"unknown demo {name!r}; "
                         f"pick one of {', '.join(DEMO_NAMES)}")
    return name


class DemoHandle:
    """One running demo: the simulation instance, its process, and a
    snapshot routine. stop() asks the loop to finish and drains it."""

    def __init__(self, world, name, inst, proc, env_name):
        self.world = world
        self.name = name
        self.inst = inst
        self.proc = proc
        self.env_name = env_name

    @property
    def running(self):
        return self.proc.status == "runnable"

    def _read(self, inst, field_name):
        cell = resolve_field(inst.cls, field_name, self.proc.activation_stack)
        return self.world.storage.read(inst, cell)

    def advance(self, ticks=1, max_slices=200_000):
        """Run the scheduler until this demo's process has consumed the
        given number of wait: ticks (or stalled)."""
        target = self.proc.tick_count + ticks
        sch = self.world.scheduler
        budget = max_slices
        while self.proc.tick_count < target and budget > 0:
            if self.proc.status != "runnable":
                break
            outcome = sch.run(max_slices=1)
            budget -= 1
            if outcome in ("idle", "stalled"):
                break
        return self.proc.tick_count

    def snapshot(self):
        snap = self._snapshot_fields()
        snap["name"] = self.name
        snap["pid"] = self.proc.pid
        snap["ticks"] = self.proc.tick_count
        snap["status"] = self.proc.status
        self.world.scheduler.emit("demo-snapshot", **snap)
        return snap

    def _snapshot_fields(self):
        if self.name == "bouncing-ball":
            ball = self._read(self.inst, "ball")
            if ball is None:
                return {"x": None, "y": None}
            pos = self._read(ball, "position")
            speed = self._read(ball, "speed")
            return {
                "x": self._read(pos, "x"), "y": self._read(pos, "y"),
                "vx": self._read(speed, "x"), "vy": self._read(speed, "y"),
            }
        # representation of infection state is exactly what the demo's
        # change scripts rewrite, so ask the image instead of guessing
        counter = self.world.eval_expression(
            f"^{self.env_name} infectedCount", list(self.proc.activation_stack),
            name="demo-probe")
        count = None if counter.error else counter.result
        self.world.scheduler.forget(counter)
        return {
            "clock": self._read(self.inst, "clock"),
            "infected": count,
            "persons": len(self._read(self.inst, "persons") or ()),
        }

    def stop(self, max_slices=50_000):
        if self.proc.status not in ("runnable", "barrier-wait"):
            return
        cell = resolve_field(self.inst.cls, "running", self.proc.activation_stack)
        self.world.storage.write(self.inst, cell, False)
        self.world.scheduler.run(max_slices=max_slices)


def start_demo(world, name, persons=100, seed=42, rate=600) -> DemoHandle:
    name = canonical_name(name)
    if name == "bouncing-ball":
        report = world.load_program(demo_source("ball"), filename="ball.st",
                                    target="base")
        if not report.ok:
            raise LiveError("user-error", f"demo load failed: {report.errors}")
        env_name = "BallSimulation"
        setup = "Simulation new setup; yourself"
    else:
        report = world.load_program(demo_source("disease"),
                                    filename="disease.st", target="base")
        if not report.ok:
            raise LiveError("user-error", f"demo load failed: {report.errors}")
        env_name = "TheEpidemic"
        setup = (f"| e | e := Epidemic new. "
                 f"e setup: {persons} seed: {seed} rate: {rate}. ^e")
    proc = world.eval_expression(setup, None, name=f"{name}-setup")
    if proc.error is not None:
        raise LiveError("user-error",
                        f"demo setup failed: {proc.error.message}")
    inst = proc.result
    world.scheduler.forget(proc)
    world.env.bind(env_name, inst)
    loop = world.spawn_expression(f"{env_name} mainloop", None,
                                  name=f"{name}-mainloop")
    return DemoHandle(world, name, inst, loop, env_name)
