"""Partial orders on states, monotonicity and monotone completeness."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .core import TransitionSystem, explore, path_search, transitions_within
from .encoding import Config
from .errors import BudgetExceeded
from .report import CheckResult, failed, inconclusive, passed


@dataclass(frozen=True)
class PartialOrder:
    name: str
    leq: Callable[[Any, Any], bool]
    #: whether s ⪯ s' ⪯ s implies s = s'
    strict: bool = True
    #: documentation only: unboundedness cannot be machine-checked
    unbounded: bool = True

    def lt(self, a: Any, b: Any) -> bool:
        return a != b and self.leq(a, b)

    def consistent(self, a: Any, b: Any) -> bool:
        return self.leq(a, b) or self.leq(b, a)


def is_prefix(x: tuple, y: tuple) -> bool:
    return len(x) <= len(y) and y[: len(x)] == x


PREFIX = PartialOrder("prefix", is_prefix)
SUBSET = PartialOrder("subset", lambda a, b: a <= b)
NUMERIC = PartialOrder("numeric", operator.le)


def consistent(po: PartialOrder, a: Any, b: Any) -> bool:
    return po.consistent(a, b)


def pointwise(po: PartialOrder) -> PartialOrder:
    """Lift a local-state order to per-agent configurations (or tuples)."""

    def leq(a: Any, b: Any) -> bool:
        if isinstance(a, Config) and isinstance(b, Config):
            return a.agents == b.agents and all(po.leq(a[p], b[p]) for p in a)
        if isinstance(a, tuple) and isinstance(b, tuple):
            return len(a) == len(b) and all(po.leq(x, y) for x, y in zip(a, b))
        return False

    return PartialOrder(f"pointwise-{po.name}", leq, po.strict, po.unbounded)


def spot_check_axioms(po: PartialOrder, states: Iterable) -> list:
    """Return reflexivity/transitivity/antisymmetry violations on a sample."""
    sample = list(states)
    bad = []
    for a in sample:
        if not po.leq(a, a):
            bad.append(("reflexive", a))
    for a in sample:
        for b in sample:
            if not po.leq(a, b):
                continue
            if po.strict and a != b and po.leq(b, a):
                bad.append(("antisymmetric", a, b))
            for c in sample:
                if po.leq(b, c) and not po.leq(a, c):
                    bad.append(("transitive", a, b, c))
    return bad


def check_monotonic(ts: TransitionSystem, po: PartialOrder, depth: int) -> CheckResult:
    bound = {"depth": depth, "bounded": True}
    name = "monotonic"
    try:
        levels = explore(ts, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    count = 0
    for s, t in transitions_within(ts, depth, levels):
        count += 1
        if not po.leq(s, t):
            return failed(name, bound, {"transition": [s, t]}, order=po.name)
    return passed(name, bound, order=po.name, transitions=count)


def strict_pairs(po: PartialOrder, lows: Iterable, highs: Iterable | None = None) -> list:
    lows = list(lows)
    highs = lows if highs is None else list(highs)
    return [(a, b) for a in lows for b in highs if po.lt(a, b)]


def check_epsilon_monotonic_completeness(ts: TransitionSystem, po: PartialOrder, pairs: Iterable) -> CheckResult:
    """Each strict pair s ≺ s'' admits a step s → s' with s ≺ s' ⪯ s''."""
    pairs = list(pairs)
    name = "epsilon_monotonic_completeness"
    bound = {"pairs": len(pairs), "bounded": True}
    for s, s2 in pairs:
        if not any(po.lt(s, t) and po.leq(t, s2) for t in ts.enabled(s)):
            return failed(name, bound, {"pair": [s, s2]}, order=po.name)
    return passed(name, bound, order=po.name)


def check_monotonic_completeness(
    ts: TransitionSystem, po: PartialOrder, depth: int, targets: Iterable | None = None
) -> CheckResult:
    """Every reachable s and every target s' ⪰ s are joined by a correct path.

    Targets default to the reachable states themselves. The path is built by
    iterated single-step advancement inside the interval [s, s'], falling
    back to a breadth-first search of that interval when the greedy walk
    gets stuck.
    """
    name = "monotonic_completeness"
    bound = {"depth": depth, "bounded": True}
    try:
        levels = explore(ts, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    lows = list(levels)
    highs = lows if targets is None else list(targets)
    pairs = 0
    fallbacks = 0
    for s in lows:
        for s2 in highs:
            if s == s2 or not po.leq(s, s2):
                continue
            pairs += 1
            cur = s
            while cur != s2:
                nxt = next((t for t in ts.enabled(cur) if po.lt(cur, t) and po.leq(t, s2)), None)
                if nxt is None:
                    break
                cur = nxt
            if cur == s2:
                continue
            fallbacks += 1
            try:
                path = path_search(ts, s, s2, within=po.leq)
            except BudgetExceeded as e:
                return inconclusive(name, bound, str(e), pair=[s, s2])
            if path is None:
                return failed(name, bound, {"pair": [s, s2]}, order=po.name)
    return passed(name, bound, order=po.name, pairs=pairs, fallbacks=fallbacks)


def _components(c: Any) -> list:
    if isinstance(c, Config):
        return list(c.items())
    if isinstance(c, tuple):
        return list(enumerate(c))
    raise TypeError(f"{c!r} is not a configuration")


def check_consistent_configurations(ts: TransitionSystem, po: PartialOrder, depth: int) -> CheckResult:
    """Every reachable configuration has pairwise consistent components."""
    name = "consistent_configurations"
    bound = {"depth": depth, "bounded": True}
    try:
        states = explore(ts, depth)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    for c in states:
        parts = _components(c)
        for i, (p, x) in enumerate(parts):
            for q, y in parts[i + 1:]:
                if not po.consistent(x, y):
                    return failed(name, bound, {"configuration": c, "pair": [p, q]}, order=po.name)
    return passed(name, bound, order=po.name, configurations=len(states))
