"""Transition systems, runs, bounded exploration and run generation."""

from __future__ import annotations

import os
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator

from .encoding import Config, encode, sort_states, state_key, to_json
from .errors import BudgetExceeded, StructuralError

DEFAULT_CLASS = "ALL"
#: Attribution of a configuration pair that no single agent explains.
ENV = "<env>"
BUDGET_VAR = "MTSKIT_MAX_STATES"
DEFAULT_BUDGET = 200_000


def state_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    raw = os.environ.get(BUDGET_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise StructuralError(f"{BUDGET_VAR} must be an integer, got {raw!r}") from None
    return DEFAULT_BUDGET


class TransitionSystem:
    """An intensional transition system.

    Subclasses implement `successors` (any order, duplicates allowed); the
    base class turns that into the canonical, cached `enabled` tuple and
    derives `is_correct` from it, so the two can never disagree.
    """

    kind = "ts"
    agents: tuple | None = None

    def __init__(self, initial: Any, *, name: str | None = None, params: dict | None = None) -> None:
        self.initial = initial
        self.name = name or self.kind
        self.params = dict(params or {})
        self._cache: dict = {}

    def successors(self, s: Any) -> Iterable:
        raise NotImplementedError

    def enabled(self, s: Any) -> tuple:
        hit = self._cache.get(s)
        if hit is None:
            succ = tuple(sorted(set(self.successors(s)), key=lambda t: successor_key(s, t)))
            hit = (succ, frozenset(succ))
            self._cache[s] = hit
        return hit[0]

    def is_correct(self, s: Any, t: Any) -> bool:
        self.enabled(s)
        return t in self._cache[s][1]

    def liveness_class(self, s: Any, t: Any) -> Any:
        return DEFAULT_CLASS

    def agent_of(self, s: Any, t: Any) -> Any:
        """Attribute a pair to the single agent whose local state changed."""
        if self.agents is None or not isinstance(s, Config) or not isinstance(t, Config):
            return None
        changed = [a for a in s if a in t and s[a] != t[a]]
        if len(changed) == 1 and s.agents == t.agents:
            return changed[0]
        return ENV

    def class_owner(self, label: Any) -> Any:
        """The agent a liveness class belongs to, when classes are per agent."""
        return None

    def declared_classes(self) -> frozenset | None:
        """All liveness classes, when the system can name them up front."""
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}

    @property
    def key(self) -> str:
        return to_json([self.kind, self.name, _jsonable(self.describe())])

    def clear_cache(self) -> None:
        self._cache.clear()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


def successor_key(s: Any, t: Any) -> str:
    """Canonical sort key of a successor t of s.

    For per-agent configurations only the changed local states are encoded
    (set additions and appended suffixes by their increment), which orders
    successors deterministically without encoding the whole configuration.
    """
    if isinstance(s, Config) and isinstance(t, Config) and s.agents == t.agents:
        parts = []
        for a in s:
            x, y = s[a], t[a]
            if x == y:
                continue
            if isinstance(x, frozenset) and isinstance(y, frozenset) and x <= y:
                d = ["add", encode(y - x)]
            elif isinstance(x, tuple) and isinstance(y, tuple) and y[: len(x)] == x:
                d = ["append", encode(y[len(x):])]
            else:
                d = ["set", encode(y)]
            parts.append([encode(a), d])
        return to_json(parts)
    return state_key(t)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    try:
        return encode(obj)
    except TypeError:
        return repr(obj)


class SubsetSystem(TransitionSystem):
    """The subset of `base` induced by a state predicate."""

    kind = "subset"

    def __init__(self, base: TransitionSystem, predicate: Callable[[Any], bool], name: str | None = None) -> None:
        if not predicate(base.initial):
            raise StructuralError(f"initial state {base.initial!r} of {base.name} is outside the subset")
        super().__init__(base.initial, name=name or f"{base.name}'")
        self.base = base
        self.predicate = predicate
        self.agents = base.agents

    def successors(self, s: Any) -> Iterable:
        if not self.predicate(s):
            return ()
        return [t for t in self.base.enabled(s) if self.predicate(t)]

    def liveness_class(self, s: Any, t: Any) -> Any:
        return self.base.liveness_class(s, t)

    def agent_of(self, s: Any, t: Any) -> Any:
        return self.base.agent_of(s, t)

    def class_owner(self, label: Any) -> Any:
        return self.base.class_owner(label)

    def declared_classes(self) -> frozenset | None:
        return self.base.declared_classes()

    def describe(self) -> dict:
        return {"kind": self.kind, "base": self.base.describe(), "subset": self.name}

    def __getattr__(self, attr: str) -> Any:
        # finiteness parameters and helpers of the base system
        if attr.startswith("_") or "base" not in self.__dict__:
            raise AttributeError(attr)
        return getattr(self.base, attr)


@dataclass(frozen=True)
class Step:
    src: Any
    dst: Any
    fault: str | None = None
    label: Any = None
    rotation: int | None = None


@dataclass
class Run:
    """A finite computation; a run when `start` is the system's initial state."""

    start: Any
    steps: list = field(default_factory=list)
    log: list = field(default_factory=list)
    #: True when generation stopped early because nothing was schedulable.
    stalled: bool = False

    @classmethod
    def from_states(cls, states: Iterable, faults: Iterable | None = None) -> "Run":
        states = list(states)
        if not states:
            raise StructuralError("a run needs at least a start state")
        marks = list(faults) if faults is not None else [None] * (len(states) - 1)
        steps = [Step(a, b, f) for a, b, f in zip(states, states[1:], marks)]
        return cls(states[0], steps)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def states(self) -> list:
        return [self.start] + [st.dst for st in self.steps]

    @property
    def last(self) -> Any:
        return self.steps[-1].dst if self.steps else self.start

    @property
    def fault_marks(self) -> list:
        return [st.fault for st in self.steps]

    def check_contiguous(self) -> None:
        cur = self.start
        for i, st in enumerate(self.steps):
            if st.src != cur:
                raise StructuralError(f"run is not contiguous at step {i}")
            cur = st.dst

    def prefix(self, k: int) -> "Run":
        return Run(self.start, list(self.steps[:k]))


def is_safe(ts: TransitionSystem, r: Run) -> bool:
    r.check_contiguous()
    return all(ts.is_correct(st.src, st.dst) for st in r.steps)


def is_final(ts: TransitionSystem, s: Any) -> bool:
    return not ts.enabled(s)


def enabled_classes(ts: TransitionSystem, s: Any) -> dict:
    """Liveness classes enabled at `s`, each with its successors."""
    out: dict = {}
    for t in ts.enabled(s):
        out.setdefault(ts.liveness_class(s, t), []).append(t)
    return out


def finite_run_live_verdict(ts: TransitionSystem, r: Run) -> dict:
    """Per class: True iff no transition of that class is enabled at the end."""
    r.check_contiguous()
    live_now = enabled_classes(ts, r.last)
    classes = set(live_now)
    declared = ts.declared_classes()
    if declared is not None:
        classes |= set(declared)
    for st in r.steps:
        if st.fault is None:
            classes.add(ts.liveness_class(st.src, st.dst))
    return {c: c not in live_now for c in sorted(classes, key=state_key)}


def explore(ts: TransitionSystem, depth: int, budget: int | None = None) -> dict:
    """Breadth-first levels of every state reachable in at most `depth` steps."""
    if depth < 0:
        raise StructuralError("depth must be non-negative")
    limit = state_budget(budget)
    levels = {ts.initial: 0}
    frontier = [ts.initial]
    for d in range(1, depth + 1):
        nxt = []
        for s in frontier:
            for t in ts.enabled(s):
                if t not in levels:
                    levels[t] = d
                    nxt.append(t)
                    if len(levels) > limit:
                        raise BudgetExceeded(
                            f"{ts.name}: more than {limit} states within depth {depth}", len(levels)
                        )
        frontier = nxt
    return levels


def reachable_states(ts: TransitionSystem, depth: int, budget: int | None = None) -> set:
    return set(explore(ts, depth, budget))


def transitions_within(ts: TransitionSystem, depth: int, levels: dict | None = None) -> Iterator:
    """Every correct transition leaving a state at level < depth."""
    if levels is None:
        levels = explore(ts, depth)
    for s, lvl in levels.items():
        if lvl < depth:
            for t in ts.enabled(s):
                yield s, t


def all_runs(ts: TransitionSystem, depth: int, start: Any = None, budget: int | None = None) -> list:
    """Every run of at most `depth` steps, as tuples of states."""
    limit = state_budget(budget)
    out = []
    stack = [((ts.initial if start is None else start),)]
    while stack:
        path = stack.pop()
        out.append(path)
        if len(out) > limit:
            raise BudgetExceeded(f"{ts.name}: more than {limit} runs within depth {depth}", len(out))
        if len(path) - 1 < depth:
            for t in reversed(ts.enabled(path[-1])):
                stack.append(path + (t,))
    out.sort(key=lambda p: (len(p), [state_key(s) for s in p]))
    return out


def path_search(
    ts: TransitionSystem,
    src: Any,
    dst: Any,
    *,
    within: Callable[[Any, Any], bool] | None = None,
    max_steps: int | None = None,
    budget: int | None = None,
) -> list | None:
    """Shortest correct path src →* dst, or None.

    `within(t, dst)` prunes states that cannot lie on a path to dst (for a
    monotonic system pass the order's leq).
    """
    if src == dst:
        return [src]
    limit = state_budget(budget)
    parent = {src: None}
    queue = deque([(src, 0)])
    while queue:
        s, d = queue.popleft()
        if max_steps is not None and d >= max_steps:
            continue
        for t in ts.enabled(s):
            if t in parent:
                continue
            if within is not None and t != dst and not within(t, dst):
                continue
            parent[t] = s
            if t == dst:
                path = [t]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            if len(parent) > limit:
                raise BudgetExceeded(f"{ts.name}: path search exceeded {limit} states", len(parent))
            queue.append((t, d + 1))
    return None


@dataclass(frozen=True)
class SchedulerSpec:
    """`fair` rotates over (agent, class) units; `random` picks uniformly."""

    kind: str = "fair"

    def __post_init__(self) -> None:
        if self.kind not in ("fair", "random"):
            raise StructuralError(f"unknown scheduler kind {self.kind!r}")


class Driver:
    """Chooses the next step of a generated run.

    The fair scheduler works in rotations: at the start of each rotation it
    snapshots the enabled units, shuffles them with the seeded RNG, then
    takes one transition for each unit that is still enabled when its turn
    comes. A unit enabled throughout a rotation is therefore taken in it.
    """

    def __init__(self, ts: TransitionSystem, sched: SchedulerSpec | None = None, seed: int = 0) -> None:
        self.ts = ts
        self.sched = sched or SchedulerSpec()
        self.rng = random.Random(f"sched:{seed}")
        self.rotation = -1
        self._pending: list = []

    def units(self, s: Any, allow: Callable | None = None) -> dict:
        out: dict = {}
        for t in self.ts.enabled(s):
            if allow is not None and not allow(s, t):
                continue
            unit = (self.ts.agent_of(s, t), self.ts.liveness_class(s, t))
            out.setdefault(unit, []).append(t)
        return out

    def next_step(self, s: Any, allow: Callable | None = None) -> Step | None:
        if self.sched.kind == "random":
            cands = [t for t in self.ts.enabled(s) if allow is None or allow(s, t)]
            if not cands:
                return None
            t = self.rng.choice(cands)
            return Step(s, t, None, self.ts.liveness_class(s, t), None)
        now = self.units(s, allow)
        if not now:
            return None
        while True:
            if not self._pending:
                keys = sorted(now, key=state_key)
                self.rng.shuffle(keys)
                self._pending = keys
                self.rotation += 1
            unit = self._pending.pop(0)
            if unit in now:
                t = self.rng.choice(now[unit])
                return Step(s, t, None, unit[1], self.rotation)

    def end_rotation(self) -> None:
        """Drop the rest of the current rotation (used after adversary steps)."""
        self._pending = []


def generate_run(
    ts: TransitionSystem, sched: SchedulerSpec | None = None, horizon: int = 10, seed: int = 0
) -> Run:
    """A correct run of at most `horizon` steps, deterministic in (sched, seed)."""
    if horizon < 0:
        raise StructuralError("horizon must be non-negative")
    driver = Driver(ts, sched, seed)
    run = Run(ts.initial)
    s = ts.initial
    for _ in range(horizon):
        st = driver.next_step(s)
        if st is None:
            run.stalled = True
            break
        run.steps.append(st)
        s = st.dst
    return run
