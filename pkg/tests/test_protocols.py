from __future__ import annotations

import pytest

import oracles
from mtskit.core import Run, reachable_states
from mtskit.encoding import BOT, Config, GSState
from mtskit.errors import MappingUndefined, Refusal, StructuralError
from mtskit.protocols import (
    ABD,
    Block,
    GlobalState,
    LongestChainAgents,
    SingleChain,
    SingleChainAgents,
    SingleChainOfGS,
    consistent_configs,
    detect_equivocators,
    gs_image,
    longest_unique,
    local_images,
    representative_abd,
    sigma1m,
    sigma2m,
    sigma3,
    sort_blocks,
    stack_a,
)
from mtskit.protocols.maps import sigma1_value, sigma2_value
from mtskit.refine import project_run

A, B = "a", "b"


def test_single_chain_enabled_at_empty():
    assert set(SingleChain([0, 1]).enabled(())) == {(0,), (1,)}


def test_lcc_enabled_per_rules():
    lcc = LongestChainAgents([A, B], [0])
    assert set(lcc.enabled(lcc.initial)) == {Config({A: ((0, A),), B: ()}), Config({A: (), B: ((0, B),)})}
    c = Config({A: ((0, A),), B: ()})
    assert set(lcc.enabled(c)) == {Config({A: ((0, A), (0, A)), B: ()}), Config({A: ((0, A),), B: ((0, A),)})}
    assert set(lcc.enabled(c)) == oracles.lcc_next(c, (A, B), (0,))


def test_abd_enabled_at_initial():
    abd = ABD([A, B], [0, 1])
    got = set(abd.enabled(abd.initial))
    want = {Config({A: frozenset({Block(A, 1, s)}), B: frozenset()}) for s in (0, 1, BOT)}
    want |= {Config({A: frozenset(), B: frozenset({Block(B, 1, s)})}) for s in (0, 1, BOT)}
    assert got == want
    assert all(abd.liveness_class(abd.initial, t)[0] == "creates" for t in got)


def test_abd_matches_oracle_rules():
    abd = ABD([A, B], [0], max_index=2)
    ref = oracles.reachable(oracles.abd_initial((A, B)), lambda c: oracles.abd_next(c, (A, B), (0,), 2), 4)
    assert reachable_states(abd, 4) == ref


def test_sigma1_values():
    assert sigma1_value((1, 0), "s0") == 0
    assert sigma1_value((), "s0") == "s0"


def test_sigma1_projection_drops_repeat_as_stutter():
    st = stack_a([0, 1], 0, [(0, 0), (0, 1), (1, 0), (1, 1)])
    r = project_run(st["sigma1"], Run.from_states([(), (1,), (1, 1)]))
    assert r.states == [0, 1, 1][:2]
    r = project_run(st["sigma1"], Run.from_states([(), (1,), (1, 0)]))
    assert r.states == [0, 1, 0]


def test_sigma2_values():
    assert sigma2_value(((0, 1), (0,))) == (0, 1)
    with pytest.raises(MappingUndefined):
        sigma2_value(((0,), (1,)))
    assert sigma2_value(((), ())) == ()
    assert longest_unique([(0,), (0,)]) == (0,)


def test_sigma1m_tallies():
    gs = GlobalState([A, B], [0, 1], 0, [(A, 0, 1), (A, 1, 0), (B, 0, 1), (B, 1, 0), (B, 1, 1)])
    x = ((1, A), (0, B), (1, A))
    assert gs_image(gs, x) == GSState(1, Config({A: 2, B: 1}))
    m = sigma1m(SingleChainOfGS(gs), gs)
    assert m(()) == gs.initial


def test_sigma2m_values():
    lcc = LongestChainAgents([A, B], [0])
    m = sigma2m(lcc, SingleChainAgents([A, B], [0]))
    assert m(lcc.initial) == ()
    assert m(Config({A: ((0, A),), B: ()})) == ((0, A),)


def test_sort_blocks_examples():
    x, y = "x", "y"
    got = sort_blocks({Block(A, 1, x), Block(B, 1, BOT), Block(A, 2, BOT), Block(B, 2, y)}, [A, B])
    assert got == ((x, A), (y, B))
    assert sort_blocks({Block(A, 1, x), Block(B, 2, y)}, [A, B]) == ((x, A),)
    assert sort_blocks(set(), [A, B]) == ()


def test_sort_blocks_agrees_with_oracle():
    abd = ABD([A, B], [0, 1], max_index=2)
    for c in reachable_states(abd, 4):
        for p in c:
            want = oracles.sort_and_truncate(c[p], (A, B))
            assert want is not None
            assert sort_blocks(c[p], [A, B]) == want


def test_sigma3_examples():
    x, y = "x", "y"
    abd = ABD([A, B], [x, y])
    assert sigma3(abd.initial) == Config({A: (), B: ()})
    ca = frozenset({Block(A, 1, x), Block(B, 1, BOT), Block(A, 2, BOT), Block(B, 2, y)})
    img = sigma3(Config({A: ca, B: frozenset({Block(A, 1, x)})}))
    assert img == Config({A: ((x, A), (y, B)), B: ((x, A),)})
    assert oracles.pairwise_consistent(img.values())


def test_sigma3_equivocation_is_inconsistent():
    x, y, p = "x", "y", "p"
    c = Config({A: frozenset({Block(p, 1, x)}), B: frozenset({Block(p, 1, y)}), p: frozenset()})
    imgs = local_images(c, [A, B, p])
    assert not oracles.comparable(imgs[A], imgs[B]) or imgs[A] == imgs[B] == ()
    # with p's blocks visible at every slot the chains diverge
    c = Config({A: frozenset({Block(p, 1, x), Block(A, 1, BOT)}), p: frozenset({Block(p, 1, x)})})
    d = Config({A: frozenset({Block(p, 1, y), Block(A, 1, BOT)}), p: frozenset({Block(p, 1, x)})})
    assert sigma3(c)[A] == ((x, p),) and sigma3(d)[A] == ((y, p),)
    with pytest.raises(MappingUndefined):
        sigma3(Config({A: frozenset({Block(p, 1, x), Block(p, 1, y)}), p: frozenset()}))


def test_representative_examples():
    x = "x"
    c = Config({A: ((x, A),), B: ()})
    r = representative_abd(c, [A, B])
    # b keeps the filler it created for round 1, which a received
    assert r == Config({A: frozenset({Block(A, 1, x), Block(B, 1, BOT)}), B: frozenset({Block(B, 1, BOT)})})
    assert sigma3(r, [A, B]) == c
    assert representative_abd(Config({A: (), B: ()})) == Config({A: frozenset(), B: frozenset()})
    top = ((x, A), (x, B))
    full = representative_abd(Config({A: top, B: top}), [A, B])
    assert len(full[A]) == 4 and sum(b.payload is BOT for b in full[A]) == 2
    with pytest.raises(Refusal):
        representative_abd(Config({A: ((x, A),), B: ((x, B),)}))


def test_representatives_are_reachable():
    # two chains of length 2 need 8 block additions
    abd = ABD([A, B], [0], max_index=2)
    reach = reachable_states(abd, 8)
    lcc = reachable_states(LongestChainAgents([A, B], [0], max_len=2), 4)
    assert len(lcc) > 10
    for c in lcc:
        assert representative_abd(c) in reach


def test_detect_equivocators():
    x, y = "x", "y"
    assert detect_equivocators({Block(A, 1, x), Block(A, 1, y)}) == {A}
    assert detect_equivocators({Block(A, 1, x), Block(B, 1, y)}) == frozenset()
    assert detect_equivocators({Block(A, 1, x), Block(A, 2, x), Block(A, 2, BOT)}) == {A}


def test_consistent_configs_count():
    cs = consistent_configs([A, B], [0, 1], 3)
    assert len(cs) == 541
    assert all(oracles.pairwise_consistent(c.values()) for c in cs)


def test_bad_parameters_are_structural():
    with pytest.raises(StructuralError):
        SingleChain([])
    with pytest.raises(StructuralError):
        ABD([A], [0], max_index=-1)
    with pytest.raises(StructuralError):
        GlobalState([A], [0], 0, [(B, 0, 0)])
