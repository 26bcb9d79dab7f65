"""Agent attribution, distributed structure, asynchrony, projection and union."""

from __future__ import annotations

import random
from typing import Any, Callable, Iterable

from .core import ENV, Run, TransitionSystem, explore, transitions_within
from .encoding import Config, sort_states
from .errors import BudgetExceeded, StructuralError
from .order import PartialOrder
from .report import CheckResult, failed, inconclusive, passed


def project_config(c: Config, subset: Iterable) -> Config:
    return c.project(subset)


def _step_problem(ts: TransitionSystem, s: Any, t: Any) -> str | None:
    if not isinstance(s, Config) or not isinstance(t, Config):
        return "configurations are not per-agent maps"
    if s.agents != t.agents or s.agents != tuple(ts.agents or ()):
        return "agent set changed"
    p = ts.agent_of(s, t)
    if p == ENV or p not in s:
        return "no single agent changed"
    if s[p] == t[p]:
        return f"attributed to {p!r} but its local state is unchanged"
    return None


def check_distributed(ts: TransitionSystem, depth: int, faults: Iterable = ()) -> CheckResult:
    """Every reachable step, correct or faulty, changes only its agent's state."""
    name = "distributed"
    bound = {"depth": depth, "bounded": True}
    if ts.agents is None or not isinstance(ts.initial, Config):
        return failed(name, bound, {"initial": ts.initial}, verdict="centralized",
                      reason="states are not per-agent configurations")
    faults = list(faults)
    try:
        levels = explore(ts, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    for s, t in transitions_within(ts, depth, levels):
        why = _step_problem(ts, s, t)
        if why:
            return failed(name, bound, {"transition": [s, t]}, verdict="centralized", reason=why)
    for f in faults:
        for s in levels:
            for t in f.successors(s):
                why = _step_problem(ts, s, t)
                if why:
                    return failed(name, bound, {"transition": [s, t], "fault": f.name}, verdict="centralized",
                                  reason=why)
    return passed(name, bound, verdict="distributed", faults=[f.name for f in faults])


def agent_verdicts(ts: TransitionSystem, r: Run) -> dict:
    """Per agent: safe iff its steps are correct; live at the end iff none
    of its transitions is enabled at the last configuration."""
    r.check_contiguous()
    agents = list(ts.agents or ())
    out = {p: {"safe": True, "live_at_end": True} for p in agents}
    for st in r.steps:
        p = ts.agent_of(st.src, st.dst)
        if p in out and not ts.is_correct(st.src, st.dst):
            out[p]["safe"] = False
    last = r.last
    for t in ts.enabled(last):
        p = ts.agent_of(last, t)
        if p in out:
            out[p]["live_at_end"] = False
    return out


def check_asynchronous(ts: TransitionSystem, po: PartialOrder, depth: int, samples: int | None = None,
                       seed: int = 0) -> CheckResult:
    """Each reachable p-step c → c' stays correct in every reachable d ⪰ c
    with the same local p-step and everyone else unchanged."""
    from .order import check_monotonic

    name = "asynchronous"
    bound = {"depth": depth, "samples": samples, "seed": seed, "bounded": True}
    if ts.agents is None or not isinstance(ts.initial, Config):
        return failed(name, bound, None, reason="not a distributed system")
    if len(ts.agents) == 1:
        return passed(name, bound, vacuous=True, reason="single agent")
    mono = check_monotonic(ts, po, depth)
    if not mono.passed:
        return CheckResult(name, mono.status, bound, mono.witness, {"reason": "not monotonic"})
    try:
        levels = explore(ts, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    steps = list(transitions_within(ts, depth, levels))
    if samples is not None and samples < len(steps):
        steps = random.Random(f"async:{seed}").sample(steps, samples)
    contexts = list(levels)
    checked = 0
    for c, c2 in steps:
        p = ts.agent_of(c, c2)
        for d in contexts:
            if d == c or d[p] != c[p] or not po.leq(c, d):
                continue
            d2 = d.replace(p, c2[p])
            checked += 1
            if not ts.is_correct(d, d2):
                return failed(name, bound, {"c": c, "c'": c2, "d": d, "d'": d2}, agent=p, order=po.name)
    if checked == 0:
        return inconclusive(name, bound, "no context pairs to test")
    return passed(name, bound, order=po.name, pairs=checked)


class Inert(TransitionSystem):
    """A distributed system whose agents never move."""

    kind = "inert"

    def __init__(self, initial: Config, name: str | None = None) -> None:
        super().__init__(initial, name=name)
        self.agents = initial.agents

    def successors(self, s: Any) -> Iterable:
        return ()


class UnionSystem(TransitionSystem):
    """Two systems over disjoint agents; each step moves one side only."""

    kind = "union"

    def __init__(self, ts1: TransitionSystem, ts2: TransitionSystem, name: str | None = None) -> None:
        a1, a2 = set(ts1.agents or ()), set(ts2.agents or ())
        if not a1 or not a2:
            raise StructuralError("union needs two distributed systems")
        if a1 & a2:
            raise StructuralError(f"union of overlapping agent sets {sorted(map(repr, a1 & a2))}")
        super().__init__(ts1.initial.merge(ts2.initial), name=name or f"{ts1.name}∪{ts2.name}")
        self.ts1, self.ts2 = ts1, ts2
        self.agents = tuple(sort_states(a1 | a2))

    def _split(self, c: Config) -> tuple:
        return c.project(self.ts1.agents), c.project(self.ts2.agents)

    def successors(self, c: Any) -> Iterable:
        if not isinstance(c, Config) or c.agents != self.agents:
            return ()
        c1, c2 = self._split(c)
        out = [t.merge(c2) for t in self.ts1.enabled(c1)]
        out += [c1.merge(t) for t in self.ts2.enabled(c2)]
        return out

    def _side(self, s: Config, t: Config) -> tuple:
        s1, s2 = self._split(s)
        t1, t2 = self._split(t)
        if s2 == t2:
            return self.ts1, s1, t1
        return self.ts2, s2, t2

    def liveness_class(self, s: Any, t: Any) -> Any:
        side, a, b = self._side(s, t)
        return side.liveness_class(a, b)

    def class_owner(self, label: Any) -> Any:
        return self.ts1.class_owner(label) or self.ts2.class_owner(label)

    def describe(self) -> dict:
        return {"kind": self.kind, "parts": [self.ts1.describe(), self.ts2.describe()]}


def union_ts(ts1: TransitionSystem, ts2: TransitionSystem) -> UnionSystem:
    return UnionSystem(ts1, ts2)


def attribution(ts: TransitionSystem) -> Callable[[Any, Any], Any]:
    """The system's multiagent partition as a plain function."""
    return ts.agent_of
