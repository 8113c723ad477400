"""Deterministic step machines for the built-in algorithms.

Each machine compiles one Decide procedure down to steps that perform at
most one shared-object access each; multi-register guards become
sequences of single-read steps with the condition evaluated on the local
copies.  Program counters carry stable line labels so traces can be
audited against the pseudo-code.

Built-in machines:
  fig1       two-process transformation wrapping a conventional
             consensus instance C; tolerates simultaneous crashes
  fig2       n-process transformation using f+1 consensus instances
             C[0..f]; tolerates up to f independent crashes
  fig3       two-process CAS protocol whose crash steps can decide
  cas-rc     bare CAS race, recoverable under either failure model
  tas-cons2  classic announce/TAS two-process consensus; conventional
             (crash-oblivious) building block for fig1/fig2
"""

from __future__ import annotations

from typing import Any, NamedTuple, Optional

from . import objects
from .core import BOTTOM, UNINIT, ConfigError, Frame

END = "end"


class Access(NamedTuple):
    """One shared-object access plus the resulting control transfer."""

    obj: str
    op: str
    args: tuple
    resp: Any
    new_value: Any
    pc: str
    updates: dict
    instance: Optional[str] = None  # consensus instance this step begins, if any


class Ret(NamedTuple):
    value: Any


def _read(get, name, pc, var, extra=None):
    new, resp = objects.apply(get(name), "read")
    upd = {var: resp}
    if extra:
        upd.update(extra)
    return Access(name, "read", (), resp, new, pc, upd)


def _write(get, name, val, pc, updates=None, instance=None):
    new, resp = objects.apply(get(name), "write", (val,))
    return Access(name, "write", (val,), resp, new, pc, updates or {}, instance)


class Machine:
    program_id = ""
    entry = ""

    def __init__(self, n: int):
        self.n = n

    def init_locals(self, pid: int, proposal) -> dict:
        raise NotImplementedError

    def layout(self) -> list:
        """Fixed [(name, initial value)] order for the object store."""
        raise NotImplementedError

    def step(self, frame: Frame, get):
        """One transition for `frame`; `get(name)` reads an object value."""
        raise NotImplementedError

    def bound(self) -> int:
        """Static upper bound on ordinary steps in a single attempt."""
        raise NotImplementedError

    def tas_objects(self) -> list:
        return [name for name, v in self.layout() if isinstance(v, objects.Tas)]

    # Machine-specific invariants, evaluated by the checker.
    def check_state(self, state, get) -> Optional[str]:
        return None

    def check_edge(self, pre_get, post_get) -> Optional[str]:
        return None


class Fig1Machine(Machine):
    """Two-process recoverable consensus from one conventional instance C.

    Announce in P[i], run C, record the outcome in D; on re-execution the
    state of P[1..2] and D determines a safe recovery branch.  Tolerates
    arbitrarily many simultaneous crashes.
    """

    program_id = "fig1"
    entry = "x:if"

    def __init__(self, cons="atomic", choice="p1"):
        super().__init__(2)
        if choice not in ("p1", "p2", "min", "max"):
            raise ConfigError("unknown tie-break choice %r" % choice)
        self.cons = cons
        self.choice = choice

    def init_locals(self, pid, proposal):
        return {"p_self": UNINIT, "p_other": UNINIT, "d": UNINIT}

    def layout(self):
        base = [
            ("P[1]", objects.Register()),
            ("P[2]", objects.Register()),
            ("D", objects.Register()),
        ]
        if self.cons == "atomic":
            base.append(("C", objects.Cons()))
        else:
            base += [
                ("C.A[1]", objects.Register()),
                ("C.A[2]", objects.Register()),
                ("C.T", objects.Tas()),
            ]
        return base

    def bound(self):
        # guard reads + announce + inner decide + record + return
        inner = 1 if self.cons == "atomic" else 3
        return 3 + inner + 2

    def _both_ways(self, frame):
        i = frame.pid
        p1 = frame.loc("p_self") if i == 1 else frame.loc("p_other")
        p2 = frame.loc("p_other") if i == 1 else frame.loc("p_self")
        return p1, p2

    def step(self, frame, get):
        i = frame.pid
        other = 3 - i
        pc = frame.pc
        if pc == "x:if":
            return _read(get, "P[%d]" % i, "x:if2", "p_self")
        if pc == "x:if2":
            new, resp = objects.apply(get("P[%d]" % other), "read")
            if frame.loc("p_self") is BOTTOM and resp is BOTTOM:
                nxt = "x:wP"
            else:
                nxt = "x:recD"
            return Access("P[%d]" % other, "read", (), resp, new, nxt, {"p_other": resp})
        if pc == "x:wP":
            nxt = "x:C" if self.cons == "atomic" else "x:C.wA"
            return _write(get, "P[%d]" % i, frame.proposal, nxt)
        if pc == "x:C":
            args = (i, frame.attempt, frame.proposal)
            new, resp = objects.apply(get("C"), "decide", args)
            return Access("C", "decide", args, resp, new, "x:wD", {"d": resp}, "C")
        if pc == "x:C.wA":
            return _write(get, "C.A[%d]" % i, frame.proposal, "x:C.tas", instance="C")
        if pc == "x:C.tas":
            new, resp = objects.apply(get("C.T"), "tas")
            if resp == 0:
                return Access("C.T", "tas", (), resp, new, "x:wD", {"d": frame.proposal})
            return Access("C.T", "tas", (), resp, new, "x:C.rA", {})
        if pc == "x:C.rA":
            return _read(get, "C.A[%d]" % other, "x:wD", "d")
        if pc == "x:wD":
            return _write(get, "D", frame.loc("d"), "x:retd")
        if pc == "x:retd":
            return Ret(frame.loc("d"))
        if pc == "x:recD":
            new, resp = objects.apply(get("D"), "read")
            if resp is not BOTTOM:
                return Access("D", "read", (), resp, new, "x:recDret", {"d": resp})
            p_self = frame.loc("p_self")
            p_other = frame.loc("p_other")
            if p_self is not BOTTOM and p_other is BOTTOM:
                nxt = "x:inbotObotret"
            elif p_self is BOTTOM and p_other is not BOTTOM:
                nxt = "x:ibotOnbotret"
            else:
                nxt = "x:inbotOnbotret"
            return Access("D", "read", (), resp, new, nxt, {"d": resp})
        if pc == "x:recDret":
            return Ret(frame.loc("d"))
        if pc == "x:inbotObotret":
            return Ret(frame.loc("p_self"))
        if pc == "x:ibotOnbotret":
            return Ret(frame.loc("p_other"))
        if pc == "x:inbotOnbotret":
            p1, p2 = self._both_ways(frame)
            pick = {
                "p1": p1,
                "p2": p2,
                "min": min(p1, p2),
                "max": max(p1, p2),
            }[self.choice]
            return Ret(pick)
        raise AssertionError("fig1: unreachable pc %r" % pc)


_FIG2_BODY_PCS = frozenset(
    [
        "xn:inc",
        "xn:forado",
        "xn:C",
        "xn:C.wA",
        "xn:C.tas",
        "xn:C.rA",
        "xn:wD",
        "xn:ifp",
        "xn:forp",
        "xn:retd",
    ]
)


class Fig2Machine(Machine):
    """n-process recoverable consensus from f+1 conventional instances.

    R[i] gates which instance C[k] a process may claim (so no instance is
    ever re-entered after a crash), D[0..k-1] propagates decisions from
    earlier iterations, and the R-scan after deciding forgets a decision
    that raced with a faster process.
    """

    program_id = "fig2"
    entry = "xn:if"

    def __init__(self, n, f, cons="atomic", scan_order="asc"):
        super().__init__(n)
        if n < 2 or f < 0:
            raise ConfigError("fig2 requires n >= 2 and f >= 0")
        if cons == "tas" and n != 2:
            raise ConfigError("the TAS-based inner consensus is 2-process only")
        if scan_order not in ("asc", "desc"):
            raise ConfigError("scan order must be asc or desc")
        self.f = f
        self.cons = cons
        self.scan_order = scan_order

    def init_locals(self, pid, proposal):
        return {
            "k": 0,
            "kp": UNINIT,
            "v": proposal,
            "d": UNINIT,
            "zi": UNINIT,
            "r": UNINIT,
            "rself": UNINIT,
        }

    def layout(self):
        out = [("R[%d]" % i, objects.Register(0)) for i in range(1, self.n + 1)]
        out += [("D[%d]" % k, objects.Register()) for k in range(self.f + 1)]
        for k in range(self.f + 1):
            if self.cons == "atomic":
                out.append(("C[%d]" % k, objects.Cons()))
            else:
                out += [
                    ("C[%d].A[1]" % k, objects.Register()),
                    ("C[%d].A[2]" % k, objects.Register()),
                    ("C[%d].T" % k, objects.Tas()),
                ]
        return out

    def bound(self):
        inner = 1 if self.cons == "atomic" else 3
        total = 1  # final return
        for k in range(self.f + 1):
            total += 2 + k + inner + 1
            if k < self.f:
                total += 1 + (self.n - 1)
        return total

    def others(self, pid):
        out = [z for z in range(1, self.n + 1) if z != pid]
        if self.scan_order == "desc":
            out.reverse()
        return out

    def _c_entry(self):
        return "xn:C" if self.cons == "atomic" else "xn:C.wA"

    def step(self, frame, get):
        i = frame.pid
        pc = frame.pc
        if pc == "xn:if":
            k = frame.loc("k")
            new, resp = objects.apply(get("R[%d]" % i), "read")
            upd = {"r": resp}
            if resp == k:
                nxt = "xn:inc"
            elif k < self.f:
                nxt = "xn:if"
                upd["k"] = k + 1
            else:
                nxt = END
            return Access("R[%d]" % i, "read", (), resp, new, nxt, upd)
        if pc == "xn:inc":
            k = frame.loc("k")
            if k > 0:
                nxt, upd = "xn:forado", {"kp": 0}
            else:
                nxt, upd = self._c_entry(), {}
            return _write(get, "R[%d]" % i, k + 1, nxt, upd)
        if pc == "xn:forado":
            k = frame.loc("k")
            kp = frame.loc("kp")
            new, resp = objects.apply(get("D[%d]" % kp), "read")
            upd = {}
            if resp is not BOTTOM:
                # ascending scan overwrites, leaving the largest index's value
                upd["v"] = resp
            if kp + 1 <= k - 1:
                nxt = "xn:forado"
                upd["kp"] = kp + 1
            else:
                nxt = self._c_entry()
            return Access("D[%d]" % kp, "read", (), resp, new, nxt, upd)
        if pc == "xn:C":
            k = frame.loc("k")
            args = (i, frame.attempt, frame.loc("v"))
            new, resp = objects.apply(get("C[%d]" % k), "decide", args)
            return Access(
                "C[%d]" % k, "decide", args, resp, new, "xn:wD", {"d": resp}, "C[%d]" % k
            )
        if pc == "xn:C.wA":
            k = frame.loc("k")
            return _write(
                get,
                "C[%d].A[%d]" % (k, i),
                frame.loc("v"),
                "xn:C.tas",
                instance="C[%d]" % k,
            )
        if pc == "xn:C.tas":
            k = frame.loc("k")
            new, resp = objects.apply(get("C[%d].T" % k), "tas")
            if resp == 0:
                return Access(
                    "C[%d].T" % k, "tas", (), resp, new, "xn:wD", {"d": frame.loc("v")}
                )
            return Access("C[%d].T" % k, "tas", (), resp, new, "xn:C.rA", {})
        if pc == "xn:C.rA":
            k = frame.loc("k")
            return _read(get, "C[%d].A[%d]" % (k, 3 - i), "xn:wD", "d")
        if pc == "xn:wD":
            k = frame.loc("k")
            nxt = "xn:ifp" if k < self.f else "xn:retd"
            return _write(get, "D[%d]" % k, frame.loc("d"), nxt)
        if pc == "xn:ifp":
            return _read(get, "R[%d]" % i, "xn:forp", "rself", {"zi": 0})
        if pc == "xn:forp":
            zs = self.others(i)
            zi = frame.loc("zi")
            z = zs[zi]
            new, resp = objects.apply(get("R[%d]" % z), "read")
            upd = {}
            d = frame.loc("d")
            if resp > frame.loc("rself"):
                upd["d"] = BOTTOM
                d = BOTTOM
            if zi + 1 < len(zs):
                nxt = "xn:forp"
                upd["zi"] = zi + 1
            elif d is not BOTTOM:
                nxt = "xn:retd"
            else:
                nxt = "xn:if"
                upd["k"] = frame.loc("k") + 1
            return Access("R[%d]" % z, "read", (), resp, new, nxt, upd)
        if pc == "xn:retd":
            return Ret(frame.loc("d"))
        raise AssertionError("fig2: unreachable pc %r" % pc)

    def check_state(self, state, get):
        # No process may be inside iteration k before k crashes happened,
        # and R[i] = x+1 certifies that its owner began iteration x.
        for fr in state.frames:
            if fr.status == "running" and fr.pc in _FIG2_BODY_PCS:
                k = dict(fr.locals)["k"]
                if k is not UNINIT and state.failures < k:
                    return (
                        "p%d is in iteration %d with only %d failures so far"
                        % (fr.pid, k, state.failures)
                    )
        for i in range(1, self.n + 1):
            r = get("R[%d]" % i).value
            if state.failures < r - 1:
                return "R[%d]=%d with only %d failures so far" % (i, r, state.failures)
        return None

    def check_edge(self, pre_get, post_get):
        for i in range(1, self.n + 1):
            name = "R[%d]" % i
            if post_get(name).value < pre_get(name).value:
                return "%s decreased" % name
        return None


class Fig3Machine(Machine):
    """Two-process CAS protocol where a crash step can be a decision step.

    A process that crashed before announcing yields to an opponent that
    did announce, so crashing the laggard settles the race.
    """

    program_id = "fig3"
    entry = "ex:if"

    def __init__(self):
        super().__init__(2)

    def init_locals(self, pid, proposal):
        return {"p_self": UNINIT, "p_other": UNINIT, "d": UNINIT}

    def layout(self):
        return [
            ("P[1]", objects.Register()),
            ("P[2]", objects.Register()),
            ("C", objects.Cas()),
        ]

    def bound(self):
        return 6

    def step(self, frame, get):
        i = frame.pid
        other = 3 - i
        pc = frame.pc
        if pc == "ex:if":
            new, resp = objects.apply(get("P[%d]" % i), "read")
            nxt = "ex:wP" if resp is not BOTTOM else "ex:if2"
            return Access("P[%d]" % i, "read", (), resp, new, nxt, {"p_self": resp})
        if pc == "ex:if2":
            new, resp = objects.apply(get("P[%d]" % other), "read")
            nxt = "ex:retpo" if resp is not BOTTOM else "ex:wP"
            return Access("P[%d]" % other, "read", (), resp, new, nxt, {"p_other": resp})
        if pc == "ex:retpo":
            return Ret(frame.loc("p_other"))
        if pc == "ex:wP":
            return _write(get, "P[%d]" % i, frame.proposal, "ex:CAS")
        if pc == "ex:CAS":
            args = (BOTTOM, frame.proposal)
            new, resp = objects.apply(get("C"), "cas", args)
            # the pseudo-code discards the CAS response and re-reads C
            return Access("C", "cas", args, resp, new, "ex:rC", {})
        if pc == "ex:rC":
            new, resp = objects.apply(get("C"), "cas_read")
            return Access("C", "cas_read", (), resp, new, "ex:retC", {"d": resp})
        if pc == "ex:retC":
            return Ret(frame.loc("d"))
        raise AssertionError("fig3: unreachable pc %r" % pc)


class CasRcMachine(Machine):
    """Swap-your-input-into-bottom via CAS; the prior value is the decision."""

    program_id = "cas-rc"
    entry = "c:cas"

    def init_locals(self, pid, proposal):
        return {"d": UNINIT}

    def layout(self):
        return [("C", objects.Cas())]

    def bound(self):
        return 2

    def step(self, frame, get):
        if frame.pc == "c:cas":
            args = (BOTTOM, frame.proposal)
            new, resp = objects.apply(get("C"), "cas", args)
            d = frame.proposal if resp is BOTTOM else resp
            return Access("C", "cas", args, resp, new, "c:ret", {"d": d})
        if frame.pc == "c:ret":
            return Ret(frame.loc("d"))
        raise AssertionError("cas-rc: unreachable pc %r" % frame.pc)


class TasCons2Machine(Machine):
    """Announce in A[i]; the TAS winner's value is the decision.

    Conventional (crash-oblivious) two-process consensus.  Correct only
    in crash-free executions; fig1/fig2 wrap it so that no process ever
    re-enters it after a crash.
    """

    program_id = "tas-cons2"
    entry = "t:wA"

    def __init__(self):
        super().__init__(2)

    def init_locals(self, pid, proposal):
        return {"d": UNINIT}

    def layout(self):
        return [
            ("A[1]", objects.Register()),
            ("A[2]", objects.Register()),
            ("T", objects.Tas()),
        ]

    def bound(self):
        return 4

    def step(self, frame, get):
        i = frame.pid
        pc = frame.pc
        if pc == "t:wA":
            return _write(get, "A[%d]" % i, frame.proposal, "t:tas")
        if pc == "t:tas":
            new, resp = objects.apply(get("T"), "tas")
            if resp == 0:
                return Access("T", "tas", (), resp, new, "t:ret", {"d": frame.proposal})
            return Access("T", "tas", (), resp, new, "t:rA", {})
        if pc == "t:rA":
            return _read(get, "A[%d]" % (3 - i), "t:ret", "d")
        if pc == "t:ret":
            return Ret(frame.loc("d"))
        raise AssertionError("tas-cons2: unreachable pc %r" % pc)


PROGRAM_IDS = ("fig1", "fig2", "fig3", "cas-rc", "tas-cons2")


def build_machine(program, n, f=None, cons="atomic", choice="p1", scan_order="asc"):
    if program == "fig1":
        if n != 2:
            raise ConfigError("fig1 is a 2-process algorithm, got n=%d" % n)
        return Fig1Machine(cons=cons, choice=choice)
    if program == "fig2":
        if f is None:
            raise ConfigError("fig2 requires the failure parameter f")
        return Fig2Machine(n, f, cons=cons, scan_order=scan_order)
    if program == "fig3":
        if n != 2:
            raise ConfigError("fig3 is a 2-process algorithm, got n=%d" % n)
        return Fig3Machine()
    if program == "cas-rc":
        if n < 1:
            raise ConfigError("cas-rc requires n >= 1")
        return CasRcMachine(n)
    if program == "tas-cons2":
        if n != 2:
            raise ConfigError("tas-cons2 is a 2-process algorithm, got n=%d" % n)
        return TasCons2Machine()
    raise ConfigError("unknown program %r" % program)


class AlgoBound(NamedTuple):
    program: str
    n: int
    f: Optional[int]
    steps: int  # max ordinary steps in any single attempt


def static_bound(program, n, f=None, cons="atomic") -> AlgoBound:
    m = build_machine(program, n, f=f, cons=cons)
    return AlgoBound(program, n, f, m.bound())
