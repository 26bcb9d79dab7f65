from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mtskit.core import generate_run, is_safe
from mtskit.encoding import BOT, JUNK, Config, decode, encode, state_key
from mtskit.order import PREFIX, SUBSET, pointwise
from mtskit.protocols import (
    ABD,
    Block,
    EquivocationError,
    LongestChain,
    LongestChainAgents,
    representative_abd,
    sigma3,
    sort_blocks,
)

AGENTS = ("a", "b", "c")

atoms = st.one_of(st.integers(-3, 3), st.sampled_from(["x", "y", "a"]), st.just(BOT), st.just(JUNK))
values = st.recursive(
    atoms,
    lambda inner: st.one_of(
        st.tuples(inner, inner),
        st.lists(inner, max_size=3).map(tuple),
        st.frozensets(atoms, max_size=3),
        st.dictionaries(st.sampled_from(AGENTS), inner, min_size=1, max_size=3).map(Config),
    ),
    max_leaves=8,
)


@given(values)
def test_encoding_round_trip(v):
    assert decode(encode(v)) == v
    assert state_key(decode(encode(v))) == state_key(v)


blocks = st.frozensets(
    st.builds(Block, st.sampled_from(AGENTS), st.integers(1, 3), st.sampled_from([0, 1, BOT])), max_size=7
)


@given(blocks, st.permutations(AGENTS))
def test_sort_blocks_matches_oracle(bs, order):
    want = oracles.sort_and_truncate(bs, order)
    if want is None:
        try:
            sort_blocks(bs, order)
        except EquivocationError:
            return
        raise AssertionError("equivocation went undetected")
    assert sort_blocks(bs, order) == want


chains = st.lists(st.sampled_from([0, 1]), max_size=4).map(tuple)


@given(chains, chains, chains)
def test_prefix_order_axioms(x, y, z):
    assert PREFIX.leq(x, x)
    if PREFIX.leq(x, y) and PREFIX.leq(y, x):
        assert x == y
    if PREFIX.leq(x, y) and PREFIX.leq(y, z):
        assert PREFIX.leq(x, z)
    assert PREFIX.leq(x, y) == oracles._prefix(x, y)


sets = st.frozensets(st.integers(0, 3))


@given(sets, sets, sets, sets)
def test_pointwise_subset_is_componentwise(s, t, u, v):
    po = pointwise(SUBSET)
    c, d = Config({"a": s, "b": t}), Config({"a": u, "b": v})
    assert po.leq(c, d) == (s <= u and t <= v)
    assert po.leq(c, c)
    assert not po.leq(c, Config({"a": s}))


@st.composite
def consistent_config(draw):
    top = draw(st.lists(st.tuples(st.sampled_from([0, 1]), st.sampled_from(AGENTS)), max_size=4))
    if not top:
        return Config({p: () for p in AGENTS})
    # the first agent holds the full chain so the longest one is unique
    cuts = [len(top)] + [draw(st.integers(0, len(top))) for _ in AGENTS[1:]]
    return Config({p: tuple(top[:k]) for p, k in zip(AGENTS, cuts)})


@given(consistent_config())
def test_representative_round_trip(c):
    rep = representative_abd(c, AGENTS)
    assert sigma3(rep, AGENTS) == c


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_generated_runs_are_safe(seed):
    for ts in (LongestChainAgents(AGENTS, [0, 1]), ABD(AGENTS, [0])):
        r = generate_run(ts, None, 12, seed)
        assert is_safe(ts, r)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 8))
def test_lc_successors_match_oracle(seed, k):
    lc = LongestChain([0, 1], 3)
    r = generate_run(lc, None, k, seed)
    c = r.last
    assert set(lc.enabled(c)) == oracles.lc_next(c, [0, 1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 8))
def test_lcc_and_abd_successors_match_oracle(seed, k):
    lcc = LongestChainAgents(AGENTS, [0, 1])
    c = generate_run(lcc, None, k, seed).last
    assert set(lcc.enabled(c)) == oracles.lcc_next(c, AGENTS, [0, 1])
    abd = ABD(AGENTS, [0], max_index=2)
    d = generate_run(abd, None, k, seed).last
    assert set(abd.enabled(d)) == oracles.abd_next(d, AGENTS, [0], 2)
