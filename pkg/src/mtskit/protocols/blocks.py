"""Blocks, block dissemination (ABD), and the block-to-chain machinery."""

from __future__ import annotations

from typing import Any, Iterable, NamedTuple

from ..core import TransitionSystem
from ..encoding import BOT, Config, sort_states
from ..errors import MappingUndefined, Refusal, StructuralError
from .chains import _agents, _alphabet, longest_unique


class Block(NamedTuple):
    creator: Any
    index: int
    payload: Any


class EquivocationError(Refusal):
    def __init__(self, agents: frozenset) -> None:
        names = sorted(map(repr, agents))
        super().__init__(f"equivocation by {', '.join(names)}", witness=sorted(agents, key=repr))
        self.agents = agents


def detect_equivocators(blocks: Iterable) -> frozenset:
    """Agents with two blocks at one index carrying different payloads."""
    seen: dict = {}
    bad = set()
    for p, i, s in blocks:
        prev = seen.setdefault((p, i), s)
        if prev != s:
            bad.add(p)
    return frozenset(bad)


def sort_blocks(blocks: Iterable, agent_order: Iterable) -> tuple:
    """Round-robin the blocks by (index, agent), stop at the first missing
    slot, and drop the filler blocks."""
    blocks = frozenset(blocks)
    bad = detect_equivocators(blocks)
    if bad:
        raise EquivocationError(bad)
    order = list(agent_order)
    slots = {(p, i): s for p, i, s in blocks}
    out = []
    i = 1
    while order:
        for p in order:
            if (p, i) not in slots:
                return tuple(out)
            s = slots[(p, i)]
            if s is not BOT:
                out.append((s, p))
        i += 1
    return tuple(out)


class ABD(TransitionSystem):
    """Asynchronous block dissemination.

    Each agent holds a set of blocks. Agent p may create its next-indexed
    block with any payload (or the filler ⊥), or receive a block held by
    another agent that p lacks and did not create.
    """

    kind = "ABD"

    def __init__(self, agents: Iterable, alphabet: Iterable, max_index: int | None = None,
                 name: str | None = None) -> None:
        self.agents = _agents(agents)
        self.alphabet = _alphabet(alphabet)
        if max_index is not None and max_index < 0:
            raise StructuralError("max_index must be non-negative")
        self.max_index = max_index
        super().__init__(Config({p: frozenset() for p in self.agents}), name=name,
                         params={"agents": list(self.agents), "alphabet": list(self.alphabet),
                                 "max_index": max_index})

    def next_index(self, p: Any, local: frozenset) -> int:
        return max((i for q, i, _ in local if q == p), default=0) + 1

    def successors(self, c: Any) -> Iterable:
        if not isinstance(c, Config) or c.agents != self.agents:
            return ()
        out = []
        for p in self.agents:
            mine = c[p]
            i = self.next_index(p, mine)
            if self.max_index is None or i <= self.max_index:
                for s in self.alphabet + (BOT,):
                    out.append(c.replace(p, mine | {Block(p, i, s)}))
            for q in self.agents:
                if q == p:
                    continue
                for b in c[q] - mine:
                    if b[0] != p:
                        out.append(c.replace(p, mine | {b}))
        return out

    def liveness_class(self, s: Any, t: Any) -> Any:
        p = self.agent_of(s, t)
        added = t[p] - s[p]
        (b,) = added
        kind = "creates" if b[0] == p else "receives"
        return (kind, p, tuple(b))

    def class_owner(self, label: Any) -> Any:
        return label[1]


def sigma3_local(blocks: frozenset, agent_order: Iterable) -> tuple:
    """Per-agent image; raises MappingUndefined on an equivocating set."""
    try:
        return sort_blocks(blocks, agent_order)
    except EquivocationError as e:
        raise MappingUndefined(blocks, str(e)) from None


def sigma3(c: Config, agent_order: Iterable | None = None) -> Config:
    order = list(agent_order) if agent_order is not None else list(c.agents)
    return Config({p: sigma3_local(c[p], order) for p in c})


def local_images(c: Config, agent_order: Iterable | None = None) -> dict:
    """Per-agent images where defined, with the equivocators where not."""
    order = list(agent_order) if agent_order is not None else list(c.agents)
    out = {}
    for p in c:
        try:
            out[p] = sort_blocks(c[p], order)
        except EquivocationError as e:
            out[p] = {"equivocators": sorted(e.agents, key=repr)}
    return out


def representative_abd(c: Config, agent_order: Iterable | None = None) -> Config:
    """A reachable ABD configuration whose per-agent image is `c`.

    The longest chain fixes a block slice B: at position i the i-th element
    (s, p) becomes the block (p, i, s) and every other agent q gets the
    filler (q, i, ⊥). Agent p holds the first |c_p| rounds of B plus its own
    filler blocks from later rounds, which it must have created itself for
    the other agents to hold them.
    """
    order = list(agent_order) if agent_order is not None else list(c.agents)
    chains = [c[p] for p in c]
    for x in chains:
        for y in chains:
            if not (y[: len(x)] == x or x[: len(y)] == y):
                raise Refusal("representative needs mutually consistent chains", witness=[x, y])
    top = longest_unique(chains)
    if top is None:
        raise Refusal("representative needs a unique longest chain", witness=chains)
    B = []
    for i, (s, p) in enumerate(top, start=1):
        B.append(Block(p, i, s))
        B.extend(Block(q, i, BOT) for q in order if q != p)
    out = {}
    for p in c:
        n = len(c[p])
        held = {b for b in B if b.index <= n}
        held |= {b for b in B if b.creator == p and b.payload is BOT and b.index > n}
        out[p] = frozenset(held)
    return Config(out)


def equivocation_successors(abd: ABD, p: Any) -> Any:
    """Fault successors: p adds a second block at an index it already used."""

    def succ(c: Config) -> list:
        mine = c[p]
        out = []
        for q, i, s in sort_states(mine):
            if q != p:
                continue
            for s2 in abd.alphabet + (BOT,):
                b = Block(p, i, s2)
                if s2 != s and b not in mine:
                    out.append(c.replace(p, mine | {b}))
        return out

    return succ
