"""Brute-force reference implementations used to cross-check the package.

Each function re-derives a rule directly from its definition, with plain
lists and dicts, and shares no code with mtskit beyond the state value
types (Config, Block, BOT) needed to compare results.
"""

from __future__ import annotations

from itertools import product

from mtskit.encoding import BOT, Config
from mtskit.protocols import Block


def sequences(alphabet, max_len):
    """Every sequence over the alphabet of length at most max_len."""
    out = []
    for k in range(max_len + 1):
        out.extend(tuple(x) for x in product(alphabet, repeat=k))
    return out


def _prefix(x, y):
    return len(x) <= len(y) and tuple(y[: len(x)]) == tuple(x)


def comparable(x, y):
    return _prefix(x, y) or _prefix(y, x)


def pairwise_consistent(chains):
    chains = list(chains)
    return all(comparable(chains[i], chains[j]) for i in range(len(chains)) for j in range(i + 1, len(chains)))


def lc_next(c, alphabet):
    """Longest chain: chain i may become x+s if x is a longest chain or x+s
    is a prefix of some chain."""
    top = max(len(x) for x in c)
    out = set()
    for i, x in enumerate(c):
        for s in alphabet:
            y = tuple(x) + (s,)
            if len(x) == top or any(_prefix(y, z) for z in c):
                out.add(tuple(y if j == i else c[j] for j in range(len(c))))
    return out


def lcc_next(c, agents, alphabet):
    """Longest chain consensus over (payload, agent) elements."""
    top = max(len(c[p]) for p in agents)
    out = set()
    for p in agents:
        for s in alphabet:
            for q in agents:
                y = c[p] + ((s, q),)
                if q == p:
                    ok = len(c[p]) == top
                else:
                    ok = any(_prefix(y, c[r]) for r in agents if r != p)
                if ok:
                    out.add(Config({**dict(c), p: y}))
    return out


def abd_next(c, agents, alphabet, max_index=None):
    """p creates its next block (max own index + 1) with any payload or the
    filler, or receives a block another agent holds, p lacks and did not
    create."""
    out = set()
    for p in agents:
        mine = c[p]
        own = [b.index for b in mine if b.creator == p]
        nxt = (max(own) if own else 0) + 1
        if max_index is None or nxt <= max_index:
            for s in list(alphabet) + [BOT]:
                out.add(Config({**dict(c), p: mine | {Block(p, nxt, s)}}))
        for q in agents:
            if q == p:
                continue
            for b in c[q]:
                if b not in mine and b.creator != p:
                    out.add(Config({**dict(c), p: mine | {b}}))
    return out


def reachable(initial, step, depth):
    """States reachable in at most depth steps."""
    seen = {initial}
    layer = {initial}
    for _ in range(depth):
        layer = {t for s in layer for t in step(s)} - seen
        seen |= layer
    return seen


def lc_initial(n):
    return ((),) * n


def lcc_initial(agents):
    return Config({p: () for p in agents})


def abd_initial(agents):
    return Config({p: frozenset() for p in agents})


def sort_and_truncate(blocks, agent_order):
    """Chain of a block set: row i lists agents in order; read rows until a
    hole, skipping fillers. None when some agent equivocates."""
    by_slot = {}
    for p, i, s in blocks:
        if (p, i) in by_slot and by_slot[(p, i)] != s:
            return None
        by_slot[(p, i)] = s
    rank = {p: k for k, p in enumerate(agent_order)}
    slots = sorted(by_slot, key=lambda pi: (pi[1], rank[pi[0]]))
    chain = []
    expected = [(p, i) for i in range(1, len(slots) + 2) for p in agent_order]
    for want in expected:
        if want not in by_slot:
            break
        s = by_slot[want]
        if s is not BOT:
            chain.append((s, want[0]))
    return tuple(chain)


def interleavings(n1, n2):
    """Number of ways to interleave runs of lengths n1 and n2."""
    from math import comb

    return comb(n1 + n2, n1)
