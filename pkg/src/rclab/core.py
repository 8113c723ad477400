"""Execution model primitives: states, steps, failure models, traces.

Everything here is an immutable value.  A step function elsewhere maps
(state, label) -> (state, record) and never mutates its input, which is
what makes memoized search and bit-exact replay possible.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, NamedTuple, Optional, Tuple

# Distinguished "no value" marker.  Serialized as JSON null; never a legal
# proposal value.
BOTTOM = None


class _Uninit:
    """Marker for a private variable that has never been written.

    Reading one of these is a harness bug (the built-in machines write
    every private variable before reading it on every path), surfaced as
    UninitializedRead rather than silently treated as BOTTOM.
    """

    __slots__ = ()

    def __repr__(self):
        return "UNINIT"


UNINIT = _Uninit()

RUNNING = "running"
RETURNED = "returned"
HALTED = "halted"
FELL_OFF = "fell_off"  # reached end of program without returning

ORDINARY = "ordinary"
CRASH = "crash"
CRASH_ALL = "crash_all"


class RcError(Exception):
    """Base class for all library errors."""


class ConfigError(RcError):
    pass


class StepError(RcError):
    """A step label was applied in a state where it is not enabled."""


class ObjectTypeError(RcError):
    """An operation was applied to an object of the wrong type."""


class UninitializedRead(RcError):
    """A machine read a private variable before writing it."""


class GenericityViolation(RcError):
    """A process accessed a consensus base object again after crashing."""

    def __init__(self, instance, pid, attempt, prior_attempt):
        self.instance = instance
        self.pid = pid
        self.attempt = attempt
        self.prior_attempt = prior_attempt
        super().__init__(
            "p%d accessed %s in attempt %d after accessing it in attempt %d"
            % (pid, instance, attempt, prior_attempt)
        )


class StepLabel(NamedTuple):
    kind: str  # ORDINARY | CRASH | CRASH_ALL
    pid: Optional[int] = None

    def to_json(self):
        return {"kind": self.kind, "pid": self.pid}

    @staticmethod
    def from_json(d) -> "StepLabel":
        return StepLabel(d["kind"], d["pid"])

    def __str__(self):
        if self.kind == CRASH_ALL:
            return "crash_all"
        return "%s(%d)" % (self.kind, self.pid)


def ordinary(pid: int) -> StepLabel:
    return StepLabel(ORDINARY, pid)


def crash(pid: int) -> StepLabel:
    return StepLabel(CRASH, pid)


CRASH_ALL_LABEL = StepLabel(CRASH_ALL, None)


class FailureModel(NamedTuple):
    kind: str  # "none" | "simultaneous" | "independent"
    budget: int = 0


class Frame(NamedTuple):
    """Per-process local state.

    `proposal` never changes for the lifetime of an execution; a crash
    resets pc/locals and bumps `attempt`.  `steps` counts ordinary steps
    taken in the current attempt.  `armed_crash` is Assumption-1
    bookkeeping: true iff this process's previous step was its first
    access in the execution to some TAS object.
    """

    pid: int
    pc: str
    locals: Tuple[Tuple[str, Any], ...]
    proposal: Any
    attempt: int = 1
    status: str = RUNNING
    retval: Any = BOTTOM
    steps: int = 0
    armed_crash: bool = False

    def loc(self, name: str) -> Any:
        for k, v in self.locals:
            if k == name:
                if v is UNINIT:
                    raise UninitializedRead(
                        "p%d read uninitialized %r at %s" % (self.pid, name, self.pc)
                    )
                return v
        raise KeyError(name)

    def with_locals(self, updates: dict) -> Tuple[Tuple[str, Any], ...]:
        d = dict(self.locals)
        d.update(updates)
        return tuple(sorted(d.items()))


def locals_tuple(d: dict) -> Tuple[Tuple[str, Any], ...]:
    return tuple(sorted(d.items()))


class SystemState(NamedTuple):
    """Full snapshot: one frame per process plus every shared object.

    `objects` holds object values in a fixed per-experiment layout order,
    so two states are equal iff their canonical encodings are equal.
    `returns` accumulates (pid, attempt, value) for every return taken,
    across re-executions after crashes.
    """

    frames: Tuple[Frame, ...]
    objects: Tuple[Any, ...]
    failures: int = 0
    returns: Tuple[Tuple[int, int, Any], ...] = ()
    participants: frozenset = frozenset()
    tas_seen: frozenset = frozenset()
    cons_access: frozenset = frozenset()


class StepRecord(NamedTuple):
    index: int
    label: StepLabel
    op: str
    resp: Any

    def to_json(self):
        return {
            "step": self.index,
            "label": self.label.kind,
            "pid": self.label.pid,
            "op": self.op,
            "resp": self.resp,
        }

    @staticmethod
    def from_json(d) -> "StepRecord":
        return StepRecord(
            d["step"], StepLabel(d["label"], d["pid"]), d["op"], d["resp"]
        )


class Trace(NamedTuple):
    config: dict
    records: Tuple[StepRecord, ...]

    @property
    def labels(self):
        return [r.label for r in self.records]


def _jsonable(x):
    if isinstance(x, frozenset):
        return ["frozenset", sorted(_jsonable(e) for e in x)]
    if isinstance(x, tuple):
        return [_jsonable(e) for e in x]
    if x is UNINIT:
        return "?uninit"
    return x


def canonical(state: SystemState):
    """Canonical, JSON-able encoding of a state (fixed field order)."""
    return _jsonable(tuple(state))


def digest(state: SystemState) -> str:
    enc = json.dumps(canonical(state), separators=(",", ":"), sort_keys=False)
    return hashlib.sha256(enc.encode()).hexdigest()
