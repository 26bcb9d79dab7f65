"""Protocol families, interleavings, and the grassroots checkers."""

from __future__ import annotations

import itertools
import threading
from collections import deque
from typing import Any, Callable, Iterable

from .core import ENV, Run, Step, TransitionSystem, all_runs, explore, transitions_within
from .encoding import Config, sort_states
from .errors import BudgetExceeded, StructuralError
from .multiagent import check_asynchronous
from .order import PartialOrder
from .protocols.blocks import ABD
from .protocols.chains import LongestChainAgents
from .refine import UNDEF, ImplementationMap, check_locally_safe
from .report import CheckResult, failed, inconclusive, passed


class ProtocolFamily:
    """One distributed transition system per finite agent set, built lazily."""

    def __init__(self, name: str, instantiate: Callable[[tuple], TransitionSystem], params: dict | None = None):
        self.name = name
        self._instantiate = instantiate
        self.params = dict(params or {})
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __call__(self, agents: Iterable) -> TransitionSystem:
        key = tuple(sort_states(agents))
        if not key:
            raise StructuralError("a family instance needs at least one agent")
        with self._lock:
            ts = self._memo.get(key)
            if ts is None:
                ts = self._instantiate(key)
                self._memo[key] = ts
        return ts

    def __repr__(self) -> str:
        return f"ProtocolFamily({self.name})"


def abd_family(alphabet: Iterable, max_index: int | None = None) -> ProtocolFamily:
    alphabet = tuple(alphabet)
    return ProtocolFamily("ABD", lambda P: ABD(P, alphabet, max_index),
                          {"alphabet": list(alphabet), "max_index": max_index})


def lcc_family(alphabet: Iterable, max_len: int | None = None) -> ProtocolFamily:
    alphabet = tuple(alphabet)
    return ProtocolFamily("LCC", lambda P: LongestChainAgents(P, alphabet, max_len),
                          {"alphabet": list(alphabet), "max_len": max_len})


class Counters(TransitionSystem):
    """Each agent holds a counter it may increment up to `bound`.

    With veto=True an agent may increment only while no other agent is at 0,
    so newly added agents block the existing ones.
    """

    kind = "counters"

    def __init__(self, agents: Iterable, bound: int = 3, veto: bool = False) -> None:
        self.agents = tuple(sort_states(agents))
        self.bound = bound
        self.veto = veto
        super().__init__(Config({p: 0 for p in self.agents}), params={"agents": list(self.agents), "bound": bound,
                                                                     "veto": veto})

    def successors(self, c: Any) -> Iterable:
        out = []
        for p in self.agents:
            if c[p] >= self.bound:
                continue
            if self.veto and any(c[q] == 0 for q in self.agents if q != p):
                continue
            out.append(c.replace(p, c[p] + 1))
        return out


def independent_family(bound: int = 3) -> ProtocolFamily:
    """Agents that never interact: every instance is the union of its parts."""
    return ProtocolFamily("independent", lambda P: Counters(P, bound), {"bound": bound})


def veto_family(bound: int = 3) -> ProtocolFamily:
    return ProtocolFamily("veto", lambda P: Counters(P, bound, veto=True), {"bound": bound})


def patterns(n1: int, n2: int) -> Iterable[tuple]:
    """All binary choice sequences with n1 ones and n2 twos."""
    n = n1 + n2
    for pos in itertools.combinations(range(n), n1):
        chosen = set(pos)
        yield tuple(1 if i in chosen else 2 for i in range(n))


def interleave(r1: Run, r2: Run, pattern: Iterable) -> Run:
    """The joint run taking r1's steps at 1s and r2's at 2s; the idle side
    keeps its current local states."""
    pattern = tuple(pattern)
    if pattern.count(1) != len(r1) or pattern.count(2) != len(r2) or len(pattern) != len(r1) + len(r2):
        raise StructuralError("pattern does not match the run lengths")
    s1, s2 = r1.states, r2.states
    j = k = 0
    cur = s1[0].merge(s2[0])
    out = Run(cur)
    for side in pattern:
        if side == 1:
            j += 1
        else:
            k += 1
        nxt = s1[j].merge(s2[k])
        out.steps.append(Step(cur, nxt))
        cur = nxt
    return out


def _runs_as_objects(ts: TransitionSystem, depth: int) -> list:
    return [Run.from_states(p) for p in all_runs(ts, depth)]


def _disjoint(P1: Iterable, P2: Iterable) -> tuple:
    P1, P2 = tuple(sort_states(P1)), tuple(sort_states(P2))
    if not P1 or not P2:
        raise StructuralError("both agent sets must be non-empty")
    if set(P1) & set(P2):
        raise StructuralError("agent sets must be disjoint")
    return P1, P2


def check_subsidiarity(fam: ProtocolFamily, P1: Iterable, P2: Iterable, depth: int) -> CheckResult:
    """Every interleaving of runs of TS(P1) and TS(P2), each of at most
    `depth` steps, is a run of TS(P1 ∪ P2)."""
    name = "subsidiarity"
    P1, P2 = _disjoint(P1, P2)
    bound = {"depth": depth, "P1": list(P1), "P2": list(P2), "bounded": True}
    ts1, ts2, ts12 = fam(P1), fam(P2), fam(P1 + P2)
    if ts1.initial.merge(ts2.initial) != ts12.initial:
        return failed(name, bound, {"initial": ts12.initial}, reason="joint initial state differs", family=fam.name)
    try:
        runs1 = _runs_as_objects(ts1, depth)
        runs2 = _runs_as_objects(ts2, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    memo: dict = {}
    count = 0
    combos = sorted(((a, b) for a in runs1 for b in runs2), key=lambda ab: len(ab[0]) + len(ab[1]))
    for r1, r2 in combos:
        for pat in patterns(len(r1), len(r2)):
            joint = interleave(r1, r2, pat)
            count += 1
            for i, st in enumerate(joint.steps):
                key = (st.src, st.dst)
                ok = memo.get(key)
                if ok is None:
                    ok = memo[key] = ts12.is_correct(st.src, st.dst)
                if not ok:
                    return failed(name, bound, {"r1": r1, "r2": r2, "pattern": list(pat), "joint": joint,
                                                "failing_step": i, "reached": st.dst}, family=fam.name,
                                  interleavings_checked=count)
    return passed(name, bound, family=fam.name, interleavings=count, runs1=len(runs1), runs2=len(runs2))


def decompose_step(fam: ProtocolFamily, P1: tuple, P2: tuple, s: Config, t: Config) -> str | None:
    """Why a joint step is not a step of one side with the other frozen."""
    ts12 = fam(P1 + P2)
    p = ts12.agent_of(s, t)
    if p == ENV or p is None:
        return "no single agent moved"
    side, other = (P1, P2) if p in P1 else (P2, P1)
    if s.project(other) != t.project(other):
        return "idle side changed"
    a, b = s.project(side), t.project(side)
    if not fam(side).is_correct(a, b):
        return f"step of {p!r} is not a step of TS({', '.join(map(str, side))})"
    return None


def find_interactivity_witness(fam: ProtocolFamily, P1: Iterable, P2: Iterable, depth: int) -> Run | None:
    """A run of TS(P1 ∪ P2) that is no interleaving of runs of the parts.

    The returned run's `log` holds the decomposition attempt step by step.
    """
    P1, P2 = _disjoint(P1, P2)
    ts12 = fam(P1 + P2)
    parent = {ts12.initial: None}
    layer = [ts12.initial]
    for _ in range(depth):
        nxt = []
        for s in layer:
            for t in ts12.enabled(s):
                why = decompose_step(fam, P1, P2, s, t)
                if why is not None:
                    path = [s]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    states = path[::-1] + [t]
                    run = Run.from_states(states)
                    run.log = [f"step {i}: decomposes" for i in range(len(states) - 2)]
                    run.log.append(f"step {len(states) - 2}: {why}")
                    return run
                if t not in parent:
                    parent[t] = s
                    nxt.append(t)
        layer = nxt
    return None


def check_non_interfering(fam: ProtocolFamily, Psub: Iterable, P: Iterable, depth: int) -> CheckResult:
    """Each reachable TS(Psub) step, with the other agents of P at their
    initial states, is a TS(P) step."""
    name = "non_interfering"
    Psub, P = tuple(sort_states(Psub)), tuple(sort_states(P))
    if not set(Psub) < set(P):
        raise StructuralError("Psub must be a strict subset of P")
    bound = {"depth": depth, "Psub": list(Psub), "P": list(P), "bounded": True}
    small, big = fam(Psub), fam(P)
    rest = big.initial.project([p for p in P if p not in Psub])
    count = 0
    try:
        for s, t in transitions_within(small, depth):
            a, b = s.merge(rest), t.merge(rest)
            count += 1
            if not big.is_correct(a, b):
                return failed(name, bound, {"sub_step": [s, t], "embedded": [a, b]}, family=fam.name)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    return passed(name, bound, family=fam.name, steps=count)


def check_grassroots(fam: ProtocolFamily, P1: Iterable, P2: Iterable, depth: int) -> CheckResult:
    """Subsidiarity plus a strictness witness (interactivity)."""
    name = "grassroots"
    P1, P2 = _disjoint(P1, P2)
    bound = {"depth": depth, "P1": list(P1), "P2": list(P2), "bounded": True}
    sub = check_subsidiarity(fam, P1, P2, depth)
    if not sub.passed:
        return CheckResult(name, sub.status, bound, sub.witness, {"family": fam.name, "failed": "subsidiarity",
                                                                 "subsidiarity": sub.details})
    w = find_interactivity_witness(fam, P1, P2, depth)
    if w is None:
        return inconclusive(name, bound, "no interactivity witness within depth", family=fam.name)
    return passed(name, bound, family=fam.name, subsidiarity=sub.details, interactivity_witness=w,
                  decomposition_log=w.log)


def check_grassroots_sufficient(fam: ProtocolFamily, P1: Iterable, P2: Iterable, po: PartialOrder,
                                depth: int) -> CheckResult:
    """Asynchronous, interactive and non-interfering, checked separately."""
    name = "grassroots_sufficient"
    P1, P2 = _disjoint(P1, P2)
    P = P1 + P2
    bound = {"depth": depth, "P1": list(P1), "P2": list(P2), "bounded": True}
    parts = {
        "asynchronous": check_asynchronous(fam(P), po, depth),
        "non_interfering_P1": check_non_interfering(fam, P1, P, depth),
        "non_interfering_P2": check_non_interfering(fam, P2, P, depth),
    }
    w = find_interactivity_witness(fam, P1, P2, depth)
    statuses = {k: v.status for k, v in parts.items()}
    statuses["interactive"] = "pass" if w is not None else "inconclusive"
    details = {"family": fam.name, "parts": statuses, "interactivity_witness": w}
    bad = [k for k, v in statuses.items() if v == "fail"]
    if bad:
        return failed(name, bound, {k: parts[k].witness for k in bad if k in parts}, **details)
    if any(v != "pass" for v in statuses.values()):
        return inconclusive(name, bound, "a sub-check was inconclusive", **details)
    return passed(name, bound, **details)


def check_monotone_projection(fam: ProtocolFamily, po: PartialOrder, P: Iterable, sub: Iterable,
                              depth: int) -> CheckResult:
    """c ⪯ c' in TS(P) implies c/sub ⪯ c'/sub, on reachable pairs."""
    name = "monotone_projection"
    P, sub = tuple(sort_states(P)), tuple(sort_states(sub))
    bound = {"depth": depth, "P": list(P), "sub": list(sub), "bounded": True}
    states = list(explore(fam(P), depth))
    pairs = 0
    for a in states:
        for b in states:
            if po.leq(a, b):
                pairs += 1
                if not po.leq(a.project(sub), b.project(sub)):
                    return failed(name, bound, {"pair": [a, b]})
    return passed(name, bound, pairs=pairs)


def check_local_implementation(
    sig_fam: Callable[[tuple], ImplementationMap],
    fam_hi: ProtocolFamily,
    fam_lo: ProtocolFamily,
    agent_sets: Iterable,
    depth: int,
    grassroots_pair: tuple | None = None,
    precheck_depth: int = 2,
) -> CheckResult:
    """σ(c)_p depends on c_p alone, across all listed agent sets.

    Every reachable configuration of every listed instance contributes, for
    each agent, the pair (local state, image); one local state with two
    different images is a locality witness.
    """
    name = "local_implementation"
    sets = [tuple(sort_states(P)) for P in agent_sets]
    bound = {"depth": depth, "agent_sets": [list(P) for P in sets], "bounded": True}
    table: dict = {}
    for P in sets:
        m = sig_fam(P)
        if m.hi.key != fam_hi(P).key or m.lo.key != fam_lo(P).key:
            raise StructuralError(f"map for {P} does not join the given families")
        pre = check_locally_safe(m, min(depth, precheck_depth))
        if not pre.passed:
            return inconclusive(name, bound, f"map for {P} not locally safe at the precheck bound",
                                precheck=pre.to_dict())
        for c in explore(m.lo, depth):
            img = m.image(c)
            if img is UNDEF:
                continue
            for p in c:
                seen = table.setdefault(c[p], (P, p, img[p]))
                if seen[2] != img[p]:
                    return failed(name, bound, {
                        "local_state": c[p],
                        "first": {"agents": list(seen[0]), "agent": seen[1], "image": seen[2]},
                        "second": {"agents": list(P), "agent": p, "image": img[p]},
                    }, lo=fam_lo.name, hi=fam_hi.name)
    details = {"lo": fam_lo.name, "hi": fam_hi.name, "local_states": len(table)}
    if grassroots_pair is not None:
        g = check_grassroots(fam_lo, grassroots_pair[0], grassroots_pair[1], depth)
        details["lo_grassroots"] = g.status
        details["hi_inherits_grassroots"] = g.passed
    return passed(name, bound, **details)
