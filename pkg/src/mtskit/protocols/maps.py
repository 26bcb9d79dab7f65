"""The example implementation maps and ready-made protocol stacks."""

from __future__ import annotations

from typing import Any, Iterable

from ..encoding import BOT, Config
from ..errors import MappingUndefined, StructuralError
from ..order import PREFIX, SUBSET, consistent, pointwise
from ..refine import ImplementationMap, compose, restrict_to_subset
from .blocks import ABD, Block, local_images, representative_abd, sigma3
from .chains import (
    Generic,
    GlobalState,
    LongestChain,
    LongestChainAgents,
    SingleChain,
    SingleChainAgents,
    SingleChainOf,
    SingleChainOfGS,
    gs_image,
    longest_unique,
)


def sigma1_value(x: tuple, s0: Any) -> Any:
    return x[-1] if x else s0


def sigma1(sc1: SingleChainOf, g: Generic | None = None) -> ImplementationMap:
    """Walks of G back to G: the last element (the initial state when empty)."""
    g = g or sc1.g
    return ImplementationMap(sc1, g, lambda x: sigma1_value(x, g.initial), "sigma1")


def sigma2_value(c: tuple) -> tuple:
    top = longest_unique(c)
    if top is None:
        raise MappingUndefined(c, "longest chain not unique")
    return top


def sigma2(lc: LongestChain, sc: SingleChain) -> ImplementationMap:
    if lc.alphabet != sc.alphabet:
        raise StructuralError("LC and SC alphabets differ")
    n = lc.n

    def rep(x: tuple) -> tuple:
        return (x,) + ((),) * (n - 1)

    return ImplementationMap(lc, sc, sigma2_value, "sigma2", rep, pointwise(PREFIX), PREFIX)


def sigma1m(scc1: SingleChainOfGS, gs: GlobalState | None = None) -> ImplementationMap:
    gs = gs or scc1.gs
    return ImplementationMap(scc1, gs, lambda x: gs_image(gs, x), "sigma1m")


def sigma2m_value(lcc: LongestChainAgents, c: Config) -> tuple:
    top = longest_unique(lcc.proper_part(x) for x in c.values())
    if top is None:
        raise MappingUndefined(c, "longest proper chain not unique")
    return top


def sigma2m(lcc: LongestChainAgents, scc: SingleChainAgents) -> ImplementationMap:
    if lcc.agents != scc.agents or lcc.alphabet != scc.alphabet:
        raise StructuralError("LCC and SCC parameters differ")

    def rep(x: tuple) -> Config:
        return Config({p: x for p in lcc.agents})

    return ImplementationMap(lcc, scc, lambda c: sigma2m_value(lcc, c), "sigma2m", rep,
                             pointwise(PREFIX), PREFIX)


def sigma3_map(abd: ABD, lcc: LongestChainAgents, agent_order: Iterable | None = None) -> ImplementationMap:
    if abd.agents != lcc.agents or abd.alphabet != lcc.alphabet:
        raise StructuralError("ABD and LCC parameters differ")
    order = tuple(agent_order) if agent_order is not None else abd.agents
    if sorted(order, key=repr) != sorted(abd.agents, key=repr):
        raise StructuralError("agent order must list exactly the agents")

    def diagnose(c: Config) -> dict:
        imgs = local_images(c, order)
        chains = [(p, x) for p, x in imgs.items() if isinstance(x, tuple)]
        bad = [[p, q] for i, (p, x) in enumerate(chains) for q, y in chains[i + 1:] if not consistent(PREFIX, x, y)]
        return {"local_images": imgs, "inconsistent_pairs": bad}

    m = ImplementationMap(abd, lcc, lambda c: sigma3(c, order), "sigma3",
                          lambda c: representative_abd(c, order), pointwise(SUBSET), pointwise(PREFIX))
    def invariant(x: Config) -> str | None:
        chains = list(x.items())
        for i, (p, a) in enumerate(chains):
            for q, b in chains[i + 1:]:
                if not consistent(PREFIX, a, b):
                    return f"chains of {p!r} and {q!r} are inconsistent"
        return None

    m.notes["diagnose"] = diagnose
    # single-step correctness fails on fault-free runs; judge by consistency
    m.notes["invariant"] = invariant
    m.notes["safety"] = "invariant"
    return m


def stack_a(states: Iterable, initial: Any, transitions: Iterable, n: int = 2, depth: int = 4) -> dict:
    """G ← SC1 ← LC with σ1, σ2, σ2 restricted to SC1, and their composition."""
    g = Generic(states, initial, transitions)
    sc1 = SingleChainOf(g)
    sc = SingleChain(g.states)
    lc = LongestChain(g.states, n)
    s1 = sigma1(sc1, g)
    s2 = sigma2(lc, sc)
    s2r = restrict_to_subset(s2, sc1.valid, hi=sc1, depth=depth, name="sigma2|SC1")
    return {"G": g, "SC1": sc1, "SC": sc, "LC": lc, "LC1": s2r.lo, "sigma1": s1, "sigma2": s2,
            "sigma2r": s2r, "sigma21": compose(s1, s2r)}


def stack_b(agents: Iterable, states: Iterable, initial: Any, transitions: Iterable, depth: int = 3,
            strict: bool = False) -> dict:
    """GS ← SCC1 ← LCC1 with σ1m, σ2m restricted to SCC1, and their composition."""
    gs = GlobalState(agents, states, initial, transitions)
    scc1 = SingleChainOfGS(gs)
    scc = SingleChainAgents(gs.agents, gs.states)
    lcc = LongestChainAgents(gs.agents, gs.states)
    s1 = sigma1m(scc1, gs)
    s2 = sigma2m(lcc, scc)
    s2r = restrict_to_subset(s2, scc1.valid, hi=scc1, depth=depth, strict=strict, name="sigma2m|SCC1")
    return {"GS": gs, "SCC1": scc1, "SCC": scc, "LCC": lcc, "LCC1": s2r.lo, "sigma1m": s1, "sigma2m": s2,
            "sigma2mr": s2r, "sigma21m": compose(s1, s2r)}


def relabel_abd(lo: ABD, hi: ABD, mapping: dict) -> ImplementationMap:
    """Renames block payloads through a bijection between the alphabets."""
    if lo.agents != hi.agents or sorted(mapping, key=repr) != sorted(lo.alphabet, key=repr):
        raise StructuralError("relabeling must cover the lower alphabet over the same agents")
    if sorted(mapping.values(), key=repr) != sorted(hi.alphabet, key=repr):
        raise StructuralError("relabeling must be onto the upper alphabet")

    def rename(b: Block) -> Block:
        return b if b.payload is BOT else b._replace(payload=mapping[b.payload])

    def sigma(c: Config) -> Config:
        return Config({p: frozenset(rename(b) for b in blocks) for p, blocks in c.items()})

    return ImplementationMap(lo, hi, sigma, "relabel", None, pointwise(SUBSET), pointwise(SUBSET))
