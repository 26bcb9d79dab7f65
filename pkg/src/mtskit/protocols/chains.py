"""Chain-based example systems: generic, single chain, longest chain, and
their multiagent counterparts with a shared global state."""

from __future__ import annotations

import itertools
from typing import Any, Iterable

from ..core import ENV, TransitionSystem
from ..encoding import JUNK, Config, GSState, sort_states
from ..errors import StructuralError
from ..order import is_prefix


def _alphabet(values: Iterable, what: str = "alphabet") -> tuple:
    out = tuple(sort_states(values))
    if not out:
        raise StructuralError(f"{what} must be non-empty")
    return out


def _agents(values: Iterable) -> tuple:
    out = tuple(sort_states(values))
    if not out:
        raise StructuralError("agent set must be non-empty")
    return out


class Generic(TransitionSystem):
    """An arbitrary finite system given by an explicit transition relation."""

    kind = "G"

    def __init__(self, states: Iterable, initial: Any, transitions: Iterable, name: str | None = None) -> None:
        states = _alphabet(states, "state set")
        if initial not in states:
            raise StructuralError(f"initial state {initial!r} not among the states")
        trans = sort_states(tuple(t) for t in transitions)
        for a, b in trans:
            if a not in states or b not in states:
                raise StructuralError(f"transition {(a, b)!r} leaves the state set")
        super().__init__(initial, name=name, params={"states": list(states), "initial": initial,
                                                     "transitions": [list(t) for t in trans]})
        self.states = states
        self.transitions = frozenset(trans)
        self._adj: dict = {}
        for a, b in trans:
            self._adj.setdefault(a, []).append(b)

    def successors(self, s: Any) -> Iterable:
        return self._adj.get(s, ())


class SingleChain(TransitionSystem):
    """Sequences over an alphabet, grown by appending one element."""

    kind = "SC"

    def __init__(self, alphabet: Iterable, max_len: int | None = None, name: str | None = None) -> None:
        self.alphabet = _alphabet(alphabet)
        self.max_len = max_len
        super().__init__((), name=name, params={"alphabet": list(self.alphabet), "max_len": max_len})

    def valid(self, x: Any) -> bool:
        if not isinstance(x, tuple) or any(e not in self.alphabet for e in x):
            return False
        return self.max_len is None or len(x) <= self.max_len

    def successors(self, x: Any) -> Iterable:
        if not self.valid(x) or (self.max_len is not None and len(x) >= self.max_len):
            return ()
        return [x + (a,) for a in self.alphabet]

    def universe(self, depth: int) -> list:
        out, layer = [()], [()]
        for _ in range(depth):
            layer = [x + (a,) for x in layer for a in self.alphabet]
            out.extend(layer)
        return out


class SingleChainOf(TransitionSystem):
    """Sequences that walk a generic system's transitions.

    The empty sequence stands for the generic system's initial state, so the
    system shares its initial state with the plain single chain over the
    same states and is a subset of it.
    """

    kind = "SC1"

    def __init__(self, g: Generic, name: str | None = None) -> None:
        self.g = g
        super().__init__((), name=name, params={"of": g.describe()})

    def head(self, x: tuple) -> Any:
        return x[-1] if x else self.g.initial

    def valid(self, x: Any) -> bool:
        if not isinstance(x, tuple):
            return False
        cur = self.g.initial
        for e in x:
            if (cur, e) not in self.g.transitions:
                return False
            cur = e
        return True

    def successors(self, x: Any) -> Iterable:
        if not self.valid(x):
            return ()
        return [x + (t,) for t in self.g.enabled(self.head(x))]


class LongestChain(TransitionSystem):
    """n chains; a chain may grow freely when longest, else only by copying
    a prefix of another chain."""

    kind = "LC"

    def __init__(self, alphabet: Iterable, n: int, max_len: int | None = None, name: str | None = None) -> None:
        if n < 1:
            raise StructuralError("LC needs n >= 1")
        self.alphabet = _alphabet(alphabet)
        self.n = n
        self.max_len = max_len
        super().__init__(((),) * n, name=name,
                         params={"alphabet": list(self.alphabet), "n": n, "max_len": max_len})

    def valid(self, c: Any) -> bool:
        return (
            isinstance(c, tuple)
            and len(c) == self.n
            and all(isinstance(x, tuple) and all(e in self.alphabet for e in x) for x in c)
        )

    def successors(self, c: Any) -> Iterable:
        if not self.valid(c):
            return ()
        longest = max(len(x) for x in c)
        out = []
        for i, x in enumerate(c):
            if self.max_len is not None and len(x) >= self.max_len:
                continue
            for a in self.alphabet:
                y = x + (a,)
                if len(x) == longest or any(is_prefix(y, z) for z in c):
                    out.append(c[:i] + (y,) + c[i + 1:])
        return out

    def agent_of(self, s: Any, t: Any) -> Any:
        # attribute to the chain index so the fair scheduler rotates over chains
        changed = [i for i in range(self.n) if s[i] != t[i]] if len(s) == len(t) == self.n else []
        return changed[0] if len(changed) == 1 else ENV


class GlobalState(TransitionSystem):
    """A shared global state with one program counter per agent.

    Transitions are triples (p, s, s'); taking one moves the shared state
    from s to s' and increments p's counter.
    """

    kind = "GS"

    def __init__(self, agents: Iterable, states: Iterable, initial: Any, transitions: Iterable,
                 max_steps: int | None = None, name: str | None = None) -> None:
        self.agents = _agents(agents)
        self.states = _alphabet(states, "state set")
        if initial not in self.states:
            raise StructuralError(f"initial state {initial!r} not among the states")
        trans = sort_states(tuple(t) for t in transitions)
        for p, a, b in trans:
            if p not in self.agents or a not in self.states or b not in self.states:
                raise StructuralError(f"bad GS transition {(p, a, b)!r}")
        self.transitions = frozenset(trans)
        self.max_steps = max_steps
        self.s0 = initial
        super().__init__(GSState(initial, Config({p: 0 for p in self.agents})), name=name,
                         params={"agents": list(self.agents), "states": list(self.states), "initial": initial,
                                 "transitions": [list(t) for t in trans], "max_steps": max_steps})
        self._by_src: dict = {}
        for p, a, b in trans:
            self._by_src.setdefault(a, []).append((p, b))

    def successors(self, g: Any) -> Iterable:
        if not isinstance(g, GSState):
            return ()
        if self.max_steps is not None and sum(g.counters.values()) >= self.max_steps:
            return ()
        return [GSState(b, g.counters.replace(p, g.counters[p] + 1)) for p, b in self._by_src.get(g.shared, ())]

    def agent_of(self, s: Any, t: Any) -> Any:
        if not (isinstance(s, GSState) and isinstance(t, GSState)) or s.counters.agents != t.counters.agents:
            return ENV
        moved = [p for p in s.counters if t.counters[p] != s.counters[p]]
        if len(moved) == 1 and t.counters[moved[0]] == s.counters[moved[0]] + 1:
            return moved[0]
        return ENV


class SingleChainAgents(TransitionSystem):
    """A single chain of agent-identified elements (payload, agent)."""

    kind = "SCC"

    def __init__(self, agents: Iterable, alphabet: Iterable, max_len: int | None = None,
                 name: str | None = None) -> None:
        self.agents = _agents(agents)
        self.alphabet = _alphabet(alphabet)
        self.max_len = max_len
        super().__init__((), name=name, params={"agents": list(self.agents), "alphabet": list(self.alphabet),
                                                "max_len": max_len})

    def proper(self, e: Any) -> bool:
        return isinstance(e, tuple) and len(e) == 2 and e[0] in self.alphabet and e[1] in self.agents

    def valid(self, x: Any) -> bool:
        return isinstance(x, tuple) and all(self.proper(e) for e in x)

    def successors(self, x: Any) -> Iterable:
        if not self.valid(x) or (self.max_len is not None and len(x) >= self.max_len):
            return ()
        return [x + ((a, p),) for a in self.alphabet for p in self.agents]

    def agent_of(self, s: Any, t: Any) -> Any:
        if isinstance(s, tuple) and isinstance(t, tuple) and len(t) == len(s) + 1 and t[: len(s)] == s:
            e = t[-1]
            if isinstance(e, tuple) and len(e) == 2:
                return e[1]
        return ENV

    def universe(self, depth: int) -> list:
        elems = [(a, p) for a in self.alphabet for p in self.agents]
        out, layer = [()], [()]
        for _ in range(depth):
            layer = [x + (e,) for x in layer for e in elems]
            out.extend(layer)
        return out


def gs_image(gs: GlobalState, x: tuple) -> GSState:
    """Shared state = last proper payload, counters = per-agent tallies.

    Elements whose agent is outside the system, and junk elements, are
    skipped, so a junk append maps to a stutter.
    """
    shared = gs.s0
    counts = {p: 0 for p in gs.agents}
    for e in x:
        if not (isinstance(e, tuple) and len(e) == 2):
            continue
        s, p = e
        if s is JUNK or p not in counts:
            continue
        shared = s
        counts[p] += 1
    return GSState(shared, Config(counts))


class SingleChainOfGS(TransitionSystem):
    """Agent-identified chains that walk a GS system's transitions."""

    kind = "SCC1"

    def __init__(self, gs: GlobalState, name: str | None = None) -> None:
        self.gs = gs
        self.agents = gs.agents
        super().__init__((), name=name, params={"of": gs.describe()})

    def valid(self, x: Any) -> bool:
        if not isinstance(x, tuple):
            return False
        cur = self.gs.s0
        for e in x:
            if not (isinstance(e, tuple) and len(e) == 2):
                return False
            s, p = e
            if (p, cur, s) not in self.gs.transitions:
                return False
            cur = s
        return True

    def successors(self, x: Any) -> Iterable:
        if not self.valid(x):
            return ()
        if self.gs.max_steps is not None and len(x) >= self.gs.max_steps:
            return ()
        cur = x[-1][0] if x else self.gs.s0
        return [x + ((b, p),) for p, b in self.gs._by_src.get(cur, ())]

    def agent_of(self, s: Any, t: Any) -> Any:
        if isinstance(s, tuple) and isinstance(t, tuple) and len(t) == len(s) + 1 and t[: len(s)] == s:
            e = t[-1]
            if isinstance(e, tuple) and len(e) == 2:
                return e[1]
        return ENV


class LongestChainAgents(TransitionSystem):
    """Each agent holds a chain of (payload, agent) pairs.

    Agent p may append its own element when its chain is a longest one, or
    append another agent's element when the result is a prefix of some other
    agent's chain. Chains are compared by their proper parts (the prefix
    before any junk), and a chain carrying junk cannot move. Liveness
    classes are the agents.
    """

    kind = "LCC"

    def __init__(self, agents: Iterable, alphabet: Iterable, max_len: int | None = None,
                 name: str | None = None) -> None:
        self.agents = _agents(agents)
        self.alphabet = _alphabet(alphabet)
        self.max_len = max_len
        super().__init__(Config({p: () for p in self.agents}), name=name,
                         params={"agents": list(self.agents), "alphabet": list(self.alphabet),
                                 "max_len": max_len})

    def proper_element(self, e: Any) -> bool:
        return isinstance(e, tuple) and len(e) == 2 and e[0] in self.alphabet and e[1] in self.agents

    def proper(self, x: Any) -> bool:
        return isinstance(x, tuple) and all(self.proper_element(e) for e in x)

    def proper_part(self, x: tuple) -> tuple:
        """The longest prefix of x made of proper elements."""
        for i, e in enumerate(x):
            if not self.proper_element(e):
                return x[:i]
        return x

    def successors(self, c: Any) -> Iterable:
        if not isinstance(c, Config) or c.agents != self.agents:
            return ()
        parts = {p: self.proper_part(c[p]) for p in self.agents}
        longest = max(len(x) for x in parts.values())
        out = []
        for p in self.agents:
            x = c[p]
            if len(parts[p]) != len(x):
                continue  # a chain carrying junk is stuck
            if self.max_len is not None and len(x) >= self.max_len:
                continue
            if len(x) == longest:
                out.extend(c.replace(p, x + ((a, p),)) for a in self.alphabet)
            for q, z in parts.items():
                if q != p and len(z) > len(x) and z[: len(x)] == x and z[len(x)][1] != p:
                    out.append(c.replace(p, z[: len(x) + 1]))
        return out

    def liveness_class(self, s: Any, t: Any) -> Any:
        return self.agent_of(s, t)

    def class_owner(self, label: Any) -> Any:
        return label

    def declared_classes(self) -> frozenset:
        return frozenset(self.agents)


def longest_unique(chains: Iterable) -> tuple | None:
    """The unique-by-value longest chain, or None on a tie of distinct values."""
    chains = list(chains)
    if not chains:
        return None
    n = max(len(x) for x in chains)
    tops = {x for x in chains if len(x) == n}
    return next(iter(tops)) if len(tops) == 1 else None


def consistent_configs(agents: Iterable, alphabet: Iterable, max_len: int) -> list:
    """All LCC configurations whose chains are prefixes of one chain of
    length at most max_len."""
    agents, alphabet = _agents(agents), _alphabet(alphabet)
    elems = [(s, p) for s in alphabet for p in agents]
    seen = set()
    for k in range(max_len + 1):
        for top in itertools.product(elems, repeat=k):
            for cut in itertools.product(range(k + 1), repeat=len(agents)):
                seen.add(Config({p: top[:j] for p, j in zip(agents, cut)}))
    return sort_states(seen)
