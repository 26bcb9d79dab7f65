from __future__ import annotations

import itertools

from mtskit.core import ENV, Run, all_runs, generate_run
from mtskit.encoding import Config
from mtskit.faults import AdversarySchedule, inject_run, junk_local
from mtskit.grassroots import interleave, patterns
from mtskit.multiagent import (
    Inert,
    agent_verdicts,
    check_asynchronous,
    check_distributed,
    project_config,
    union_ts,
)
from mtskit.order import PREFIX, SUBSET, pointwise
from mtskit.protocols import ABD, Block, GlobalState, LongestChainAgents


def test_distributed():
    assert check_distributed(LongestChainAgents(["a", "b"], [0]), 3).passed
    assert check_distributed(ABD(["a", "b"], [0]), 3).passed
    gs = GlobalState(["a", "b"], [0, 1], 0, [("a", 0, 1), ("b", 1, 0)])
    res = check_distributed(gs, 3)
    assert res.status == "fail" and res.details["verdict"] == "centralized"


def test_agent_verdicts_correct_run():
    abd = ABD(["a", "b"], [0])
    r = generate_run(abd, None, 6, seed=1)
    assert all(v["safe"] for v in agent_verdicts(abd, r).values())


def test_agent_verdicts_blame_the_junk_writer():
    lcc = LongestChainAgents(["a", "b", "c"], [0])
    f = junk_local(lcc, "b")
    r = inject_run(lcc, [f], None, AdversarySchedule(seed=3, fault_rate=0.5), 12, seed=3)
    assert "junk-b" in r.fault_marks
    v = agent_verdicts(lcc, r)
    assert v["b"]["safe"] is False
    assert v["a"]["safe"] and v["c"]["safe"]


def test_agent_verdicts_live_at_end():
    abd = ABD(["a", "b"], [0], max_index=1)
    # b is done (created and received), a still has a receive pending
    c = Config({"a": frozenset({Block("a", 1, 0)}), "b": frozenset({Block("a", 1, 0), Block("b", 1, 0)})})
    r = Run(c)
    v = agent_verdicts(abd, r)
    assert v["a"]["live_at_end"] is False and v["b"]["live_at_end"] is True


def test_asynchrony():
    assert check_asynchronous(ABD(["a", "b"], [0]), pointwise(SUBSET), 3).passed
    res = check_asynchronous(LongestChainAgents(["a", "b"], [0]), pointwise(PREFIX), 3)
    assert res.status == "fail"
    w = res.witness
    # the other agent's longer chain disables the extension
    assert len(w["d"]["b"]) > len(w["c"]["b"])
    single = check_asynchronous(ABD(["a"], [0]), pointwise(SUBSET), 3)
    assert single.passed and single.details.get("vacuous")


def test_project_config():
    c = Config({"a": 1, "b": 2})
    assert project_config(c, ["a"]) == Config({"a": 1})
    assert project_config(c, ["a", "b"]) == c
    joint = Config({"a": 1}).merge(Config({"b": 2}))
    assert project_config(joint, ["a"]) == Config({"a": 1})


def test_union_enabled_at_initial():
    u = union_ts(ABD(["a"], [0]), ABD(["b"], [0]))
    for t in u.enabled(u.initial):
        moved = [p for p in t if t[p] != u.initial[p]]
        assert len(moved) == 1
        (b,) = t[moved[0]]
        assert b.creator == moved[0]
    assert len(u.enabled(u.initial)) == 4


def test_union_with_inert_side():
    abd = ABD(["a"], [0])
    u = union_ts(abd, Inert(Config({"z": frozenset()})))
    for t in u.enabled(u.initial):
        assert t["z"] == frozenset()
        assert project_config(t, ["a"]) in abd.enabled(abd.initial)


def test_union_runs_are_interleavings():
    a, b = ABD(["a"], [0], max_index=2), ABD(["b"], [0], max_index=2)
    u = union_ts(a, b)
    depth = 3
    got = {tuple(r) for r in all_runs(u, depth)}
    want = set()
    runs1 = [Run.from_states(p) for p in all_runs(a, depth)]
    runs2 = [Run.from_states(p) for p in all_runs(b, depth)]
    for r1, r2 in itertools.product(runs1, runs2):
        if len(r1) + len(r2) > depth:
            continue
        for pat in patterns(len(r1), len(r2)):
            want.add(tuple(interleave(r1, r2, pat).states))
    assert got == want


def test_env_attribution_for_multi_agent_changes():
    lcc = LongestChainAgents(["a", "b"], [0])
    c = Config({"a": ((0, "a"),), "b": ((0, "b"),)})
    assert lcc.agent_of(lcc.initial, c) == ENV
