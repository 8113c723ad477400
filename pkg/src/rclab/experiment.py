"""Binds a configuration to a machine and implements the step semantics:
initial state construction, step enabledness (including the assumption-1
crash filter), and the pure state transition."""

from __future__ import annotations

import json

from .config import ExperimentConfig
from .core import (
    BOTTOM,
    CRASH,
    CRASH_ALL,
    CRASH_ALL_LABEL,
    FELL_OFF,
    HALTED,
    ORDINARY,
    RETURNED,
    RUNNING,
    Frame,
    GenericityViolation,
    StepError,
    StepLabel,
    StepRecord,
    SystemState,
    crash,
    locals_tuple,
    ordinary,
)
from .objects import Cons
from .programs import END, Ret, build_machine


class Experiment:
    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        self.machine = build_machine(
            config.program,
            config.n,
            f=config.f,
            cons=config.cons,
            choice=config.choice,
            scan_order=config.scan_order,
        )
        layout = self.machine.layout()
        self.names = [name for name, _ in layout]
        self.idx = {name: i for i, name in enumerate(self.names)}
        self.initial_objects = tuple(v for _, v in layout)
        self.bound = self.machine.bound()
        self.tas_names = frozenset(self.machine.tas_objects())
        self.a1 = config.adversary == "assumption1"
        self.rerun = config.mode == "rerun-after-crash"
        if config.depth is not None:
            self.depth_limit = config.depth
        else:
            # Assumption 1 bounds failures by the TAS object count instead
            # of the configured budget.
            fb = len(self.tas_names) if self.a1 else config.budget
            self.depth_limit = (fb + 1) * config.n * self.bound + fb

    # -- state construction -------------------------------------------------

    def initial_state(self) -> SystemState:
        frames = tuple(
            Frame(
                pid,
                self.machine.entry,
                locals_tuple(self.machine.init_locals(pid, prop)),
                prop,
            )
            for pid, prop in enumerate(self.config.proposals, start=1)
        )
        return SystemState(frames=frames, objects=self.initial_objects)

    def get_value(self, state: SystemState, name: str):
        return state.objects[self.idx[name]]

    # -- enabledness --------------------------------------------------------

    def _crashable(self, frame: Frame) -> bool:
        if frame.status == HALTED:
            return False
        if frame.status == RETURNED:
            return self.rerun
        return True  # running or fell off the end

    def enabled_steps(self, state: SystemState):
        labels = [ordinary(fr.pid) for fr in state.frames if fr.status == RUNNING]
        kind = self.config.failure
        if kind == "independent":
            if self.a1 or state.failures < self.config.budget:
                labels += [crash(fr.pid) for fr in state.frames if self._crashable(fr)]
        elif kind == "simultaneous":
            if state.failures < self.config.budget:
                labels.append(CRASH_ALL_LABEL)
        if self.a1:
            labels = self.assumption1_filter(state, labels)
        return labels

    def participation(self, state: SystemState) -> frozenset:
        """Pids that have taken at least one ordinary step so far."""
        return state.participants

    def assumption1_filter(self, state: SystemState, pending):
        """Crash steps are forced, not optional: the lowest-numbered
        participating process crashes exactly when its previous step was
        its first access in the execution to some TAS object; no other
        crash ever occurs.  The crasher is the lowest participant of the
        whole execution, so once a process has crashed, processes with
        smaller ids must never participate (their steps are pruned, since
        any extension containing one would violate the failure pattern
        retroactively)."""
        crashed = [fr.pid for fr in state.frames if fr.attempt > 1]
        low_crashed = min(crashed) if crashed else None
        forced = None
        if state.participants:
            low = min(state.participants)
            if state.frames[low - 1].armed_crash:
                forced = low
        out = []
        for lab in pending:
            if lab.kind == ORDINARY:
                if lab.pid == forced:
                    continue
                if low_crashed is not None and lab.pid < low_crashed:
                    continue
                out.append(lab)
            elif lab.kind == CRASH:
                if lab.pid == forced:
                    out.append(lab)
        return out

    # -- transition ---------------------------------------------------------

    def _reset_frame(self, frame: Frame) -> Frame:
        return Frame(
            frame.pid,
            self.machine.entry,
            locals_tuple(self.machine.init_locals(frame.pid, frame.proposal)),
            frame.proposal,
            attempt=frame.attempt + 1,
            status=RUNNING,
            retval=BOTTOM,
            steps=0,
            armed_crash=False,
        )

    def _instance_accesses(self, state: SystemState, instance: str):
        i = self.idx.get(instance)
        if i is not None and isinstance(state.objects[i], Cons):
            return state.objects[i].accessors
        return {(p, a) for inst, p, a in state.cons_access if inst == instance}

    def apply_step(self, state: SystemState, label: StepLabel):
        """Pure transition; returns (new state, record with index -1)."""
        if label.kind == ORDINARY:
            return self._ordinary(state, label)
        return self._crash(state, label)

    def _ordinary(self, state: SystemState, label: StepLabel):
        pid = label.pid
        frame = state.frames[pid - 1]
        if frame.status != RUNNING:
            raise StepError("p%d is %s and takes no ordinary steps" % (pid, frame.status))
        objs = state.objects
        outcome = self.machine.step(frame, lambda name: objs[self.idx[name]])

        if isinstance(outcome, Ret):
            status = RETURNED if self.rerun else HALTED
            new_frame = frame._replace(
                pc="done",
                status=status,
                retval=outcome.value,
                steps=frame.steps + 1,
                armed_crash=False,
            )
            new_state = state._replace(
                frames=_swap(state.frames, pid - 1, new_frame),
                returns=state.returns + ((pid, frame.attempt, outcome.value),),
                participants=state.participants | {pid} if self.a1 else state.participants,
            )
            record = StepRecord(-1, label, "%s return" % frame.pc, outcome.value)
            return new_state, record

        cons_access = state.cons_access
        if outcome.instance is not None:
            prior = self._instance_accesses(state, outcome.instance)
            if self.config.monitor:
                for p2, a2 in prior:
                    if p2 == pid:
                        raise GenericityViolation(outcome.instance, pid, frame.attempt, a2)
                if self.idx.get(outcome.instance) is None:
                    cons_access = cons_access | {(outcome.instance, pid, frame.attempt)}

        tas_seen = state.tas_seen
        armed = False
        if self.a1 and outcome.op in ("tas", "rtas"):
            armed = (pid, outcome.obj) not in tas_seen
            tas_seen = tas_seen | {(pid, outcome.obj)}

        new_objs = _swap(objs, self.idx[outcome.obj], outcome.new_value)
        fell = outcome.pc == END
        new_frame = frame._replace(
            pc=outcome.pc,
            locals=frame.with_locals(outcome.updates) if outcome.updates else frame.locals,
            status=FELL_OFF if fell else RUNNING,
            steps=frame.steps + 1,
            armed_crash=armed,
        )
        new_state = state._replace(
            frames=_swap(state.frames, pid - 1, new_frame),
            objects=new_objs,
            participants=state.participants | {pid} if self.a1 else state.participants,
            tas_seen=tas_seen,
            cons_access=cons_access,
        )
        op = "%s %s %s" % (frame.pc, outcome.op, outcome.obj)
        if outcome.args:
            op += " " + json.dumps(list(outcome.args))
        return new_state, StepRecord(-1, label, op, outcome.resp)

    def _crash(self, state: SystemState, label: StepLabel):
        kind = self.config.failure
        if label.kind == CRASH:
            if kind != "independent":
                raise StepError("independent crash under failure model %r" % kind)
            if not self.a1 and state.failures >= self.config.budget:
                raise StepError("failure budget exhausted")
            frame = state.frames[label.pid - 1]
            if not self._crashable(frame):
                raise StepError("p%d (%s) cannot crash" % (label.pid, frame.status))
            frames = _swap(state.frames, label.pid - 1, self._reset_frame(frame))
        elif label.kind == CRASH_ALL:
            if kind != "simultaneous":
                raise StepError("simultaneous crash under failure model %r" % kind)
            if state.failures >= self.config.budget:
                raise StepError("failure budget exhausted")
            frames = tuple(
                fr if fr.status == HALTED else self._reset_frame(fr)
                for fr in state.frames
            )
        else:
            raise StepError("unknown step label %r" % (label,))
        new_state = state._replace(frames=frames, failures=state.failures + 1)
        return new_state, StepRecord(-1, label, "crash", None)

    # -- hashing ------------------------------------------------------------

    def memo_key(self, state: SystemState):
        if not self.config.hash_ignores_attempt:
            return state
        frames = tuple(fr._replace(attempt=0) for fr in state.frames)
        returns = tuple((p, 0, v) for p, _a, v in state.returns)
        return state._replace(frames=frames, returns=returns)


def _swap(tup, i, value):
    return tup[:i] + (value,) + tup[i + 1 :]
