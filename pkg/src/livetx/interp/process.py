"""Processes, frames, closures and activation requests."""

from __future__ import annotations

from dataclasses import dataclass, field

RUNNABLE = "runnable"
BARRIER_WAIT = "barrier-wait"
ERROR = "error"
TERMINATED = "terminated"


class Frame:
    """One activation. The method reference is fixed at call time; activation
    changes never swap code under a running frame."""

    __slots__ = ("code", "pc", "ostack", "temps", "receiver", "method", "home",
                 "lexical", "sender", "hooks", "wrapper", "post", "alive",
                 "is_block")

    def __init__(self, code, receiver, method, home=None, lexical=None,
                 sender=None, is_block=False):
        self.code = code
        self.pc = 0
        self.ostack = []
        self.temps = []
        self.receiver = receiver
        self.method = method
        self.home = home or self
        self.lexical = lexical
        self.sender = sender
        self.hooks = None      # list of ActivationRequest, fired on return
        self.wrapper = None    # ("withtxn", entry_stack, deltas) | ("atomic",)
        self.post = None       # value transformer applied when the frame pops
        self.alive = True
        self.is_block = is_block

    def selector(self):
        return self.method.selector if self.method is not None else "?"

    def __repr__(self):
        kind = "block in " if self.is_block else ""
        return f"<frame {kind}{self.selector()}>"


class BlockClosure:
    """A block value: code plus captured frames. Full closure semantics."""

    __slots__ = ("proto", "home", "lexical")

    def __init__(self, proto, home, lexical):
        self.proto = proto
        self.home = home
        self.lexical = lexical

    @property
    def nparams(self):
        return self.proto.nparams

    def __repr__(self):
        return f"<block/{self.proto.nparams}>"


class HostRandom:
    """Deterministic 32-bit linear congruential generator, platform stable."""

    __slots__ = ("state",)

    M = 2 ** 32

    def __init__(self, seed):
        self.state = int(seed) % self.M

    def next_float(self):
        self.state = (1664525 * self.state + 1013904223) % self.M
        return self.state / self.M

    def next_int(self, bound):
        return int(self.next_float() * bound)

    def __repr__(self):
        return "<a Random>"


@dataclass
class ActivationBarrier:
    """Rendezvous for one multi-target request: every member defers at its
    safe point until all have arrived, then all stacks change in one step."""

    members: set = field(default_factory=set)   # pids still expected
    arrived: set = field(default_factory=set)
    fired: bool = False

    def complete(self):
        return not self.fired and self.members <= self.arrived


@dataclass
class ActivationRequest:
    rid: int
    push: tuple = ()     # EditTransaction objects, bottom first
    remove: tuple = ()
    level: str = "method"
    barrier: ActivationBarrier = None
    applied: set = field(default_factory=set)    # pids already switched
    deferred_logged: set = field(default_factory=set)

    def describe(self):
        return {"rid": self.rid, "level": self.level,
                "push": [t.tag for t in self.push],
                "remove": [t.tag for t in self.remove]}


class Process:
    _next_pid = 1

    def __init__(self, name="", stack=(), overlay=None):
        self.pid = Process._next_pid
        Process._next_pid += 1
        self.name = name or f"process-{self.pid}"
        self.status = RUNNABLE
        self.top = None
        self.activation_stack = list(stack)
        self.rev_txns = tuple(reversed(self.activation_stack))
        self.pending = []            # ActivationRequest queue, FIFO
        self.atomic_depth = 0
        self.parked_return = None    # (frame, value) stashed while barrier-waiting
        self.tick_count = 0          # wait: calls; demos step on this
        self.result = None
        self.error = None
        self.overlay = overlay       # ephemeral field storage for test runs
        self.instr_count = 0
        # dispatch/field resolution memos; valid while (world.meta_epoch,
        # stack_token) both stand still, see executor
        self.stack_token = 0
        self.mcache = {}
        self.fcache = {}
        self.cache_meta = -1
        self.cache_stack = -1

    def set_stack(self, txns):
        self.activation_stack = list(txns)
        self.rev_txns = tuple(reversed(self.activation_stack))
        self.stack_token += 1

    def stack_tags(self):
        return [t.tag for t in self.activation_stack]

    def frames(self):
        f = self.top
        while f is not None:
            yield f
            f = f.sender

    def call_chain(self):
        return [f.selector() for f in self.frames()]

    def __repr__(self):
        return f"<process {self.pid} {self.name} {self.status}>"
