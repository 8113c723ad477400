"""Drives executions: scripted/random schedules, trace emission, and
bit-exact replay.  Traces are JSON lines: one header object carrying the
full configuration, then one record per step with fixed field names
step/label/pid/op/resp."""

from __future__ import annotations

import json
import random
from typing import List, NamedTuple, Optional, Tuple

from .config import ExperimentConfig
from .core import (
    CRASH_ALL_LABEL,
    RUNNING,
    RcError,
    StepLabel,
    StepRecord,
    SystemState,
    Trace,
    crash,
    digest,
    ordinary,
)
from .experiment import Experiment


class ScheduleError(RcError):
    def __init__(self, index, label, why="not enabled"):
        self.index = index
        self.label = label
        super().__init__("schedule step %d (%s): %s" % (index, label, why))


def run(exp: Experiment, labels) -> Tuple[Trace, SystemState]:
    """Apply a scripted schedule; every label must be enabled in turn."""
    state = exp.initial_state()
    records = []
    for i, lab in enumerate(labels):
        if lab not in exp.enabled_steps(state):
            raise ScheduleError(i, lab)
        state, rec = exp.apply_step(state, lab)
        records.append(rec._replace(index=i))
    return Trace(exp.config.to_dict(), tuple(records)), state


def random_run(exp: Experiment, rng: random.Random):
    """One execution choosing uniformly among enabled steps."""
    state = exp.initial_state()
    labels: List[StepLabel] = []
    while len(labels) <= exp.depth_limit:
        enabled = exp.enabled_steps(state)
        if not enabled:
            break
        lab = rng.choice(enabled)
        state, _ = exp.apply_step(state, lab)
        labels.append(lab)
    return labels, state


# -- serialization ----------------------------------------------------------


def dump_trace(trace: Trace, final_hash: Optional[str] = None) -> str:
    header = {"config": trace.config}
    if final_hash is not None:
        header["final_hash"] = final_hash
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(r.to_json(), sort_keys=True) for r in trace.records]
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path, final_hash: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        fh.write(dump_trace(trace, final_hash))


def parse_trace(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise RcError("empty trace")
    header = json.loads(lines[0])
    records = tuple(StepRecord.from_json(json.loads(ln)) for ln in lines[1:])
    return header, records


class ReplayResult(NamedTuple):
    final_hash: str
    header_hash: Optional[str]
    digests: Tuple[str, ...]  # one per intermediate state, initial included
    state: SystemState

    @property
    def matches_header(self):
        return self.header_hash is None or self.final_hash == self.header_hash


def replay(text: str) -> ReplayResult:
    """Re-execute a serialized trace and verify it bit-for-bit.

    Raises ScheduleError if a recorded step is not enabled, and RcError
    if a regenerated record differs from the recorded one.
    """
    header, records = parse_trace(text)
    exp = Experiment(ExperimentConfig.from_dict(header["config"]))
    state = exp.initial_state()
    digests = [digest(state)]
    for rec in records:
        if rec.label not in exp.enabled_steps(state):
            raise ScheduleError(rec.index, rec.label)
        state, fresh = exp.apply_step(state, rec.label)
        if fresh._replace(index=rec.index) != rec:
            raise RcError(
                "replay mismatch at step %d: %r != %r"
                % (rec.index, fresh._replace(index=rec.index), rec)
            )
        digests.append(digest(state))
    return ReplayResult(digests[-1], header.get("final_hash"), tuple(digests), state)


def replay_file(path) -> ReplayResult:
    with open(path) as fh:
        return replay(fh.read())


# -- directed-schedule construction -----------------------------------------


def run_plan(exp: Experiment, plan) -> List[StepLabel]:
    """Build a schedule from a high-level plan.

    Plan items:
      ("until_pc", pid, pc)   step pid until its frame sits at pc
      ("until_done", pid)     step pid until it is no longer running
      ("step", pid, count)    exactly count ordinary steps by pid
      ("crash", pid)          one independent crash of pid
      ("crash_all",)          one simultaneous crash
    """
    state = exp.initial_state()
    labels: List[StepLabel] = []

    def take(lab):
        nonlocal state
        if lab not in exp.enabled_steps(state):
            raise ScheduleError(len(labels), lab, "plan produced a disabled step")
        state, _ = exp.apply_step(state, lab)
        labels.append(lab)

    for item in plan:
        kind = item[0]
        if kind == "until_pc":
            _, pid, pc = item
            guard = 0
            while state.frames[pid - 1].pc != pc:
                if state.frames[pid - 1].status != RUNNING or guard > exp.depth_limit:
                    raise RcError("plan: p%d never reached %s" % (pid, pc))
                take(ordinary(pid))
                guard += 1
        elif kind == "until_done":
            _, pid = item
            guard = 0
            while state.frames[pid - 1].status == RUNNING:
                if guard > exp.depth_limit:
                    raise RcError("plan: p%d never finished" % pid)
                take(ordinary(pid))
                guard += 1
        elif kind == "step":
            _, pid, count = item
            for _i in range(count):
                take(ordinary(pid))
        elif kind == "crash":
            take(crash(item[1]))
        elif kind == "crash_all":
            take(CRASH_ALL_LABEL)
        else:
            raise RcError("unknown plan item %r" % (item,))
    return labels
