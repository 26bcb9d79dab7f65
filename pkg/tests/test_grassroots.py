from __future__ import annotations

import pytest

import oracles
from mtskit.build import build_map_family
from mtskit.core import Run
from mtskit.encoding import Config
from mtskit.errors import StructuralError
from mtskit.grassroots import (
    abd_family,
    check_grassroots,
    check_grassroots_sufficient,
    check_local_implementation,
    check_monotone_projection,
    check_non_interfering,
    check_subsidiarity,
    find_interactivity_witness,
    independent_family,
    interleave,
    lcc_family,
    patterns,
    veto_family,
)
from mtskit.order import SUBSET, pointwise
from mtskit.protocols import Block


def _create(p, i=1, s=0):
    return Block(p, i, s)


def test_interleave_examples():
    fam = abd_family([0])
    ra = Run.from_states([fam(("a",)).initial, Config({"a": frozenset({_create("a")})})])
    rb = Run.from_states([fam(("b",)).initial, Config({"b": frozenset({_create("b")})})])
    joint = interleave(ra, rb, [1, 2])
    assert joint.states[1] == Config({"a": frozenset({_create("a")}), "b": frozenset()})
    assert joint.states[2] == Config({"a": frozenset({_create("a")}), "b": frozenset({_create("b")})})
    alone = interleave(ra, Run(fam(("b",)).initial), [1])
    assert alone.last == Config({"a": frozenset({_create("a")}), "b": frozenset()})
    with pytest.raises(StructuralError):
        interleave(ra, rb, [1, 1])


def test_pattern_count():
    assert len(set(patterns(2, 2))) == 6 == oracles.interleavings(2, 2)
    assert list(patterns(0, 0)) == [()]


def test_subsidiarity():
    res = check_subsidiarity(abd_family(["x", "y"], 2), ["a"], ["b"], 3)
    assert res.passed and res.details["interleavings"] == 691
    bad = check_subsidiarity(lcc_family([0, 1]), ["a"], ["b"], 3)
    assert bad.status == "fail"
    reached = bad.witness["reached"]
    assert reached == Config({"a": ((0, "a"),), "b": ((0, "b"),)})
    assert not oracles.comparable(reached["a"], reached["b"])


def test_interactivity_witness():
    fam = abd_family([0])
    w = find_interactivity_witness(fam, ["a"], ["b"], 2)
    assert w is not None and len(w) == 2
    created, received = w.steps
    (blk,) = created.dst["a"]
    assert blk.creator == "a" and blk in received.dst["b"]
    assert w.log
    assert find_interactivity_witness(fam, ["a"], ["b"], 0) is None
    assert find_interactivity_witness(independent_family(2), ["a"], ["b"], 3) is None


def test_non_interference():
    assert check_non_interfering(abd_family([0]), ["a"], ["a", "b"], 3).passed
    assert check_non_interfering(lcc_family([0]), ["a"], ["a", "b"], 2).passed
    res = check_non_interfering(veto_family(2), ["a"], ["a", "b"], 2)
    assert res.status == "fail" and res.witness is not None


def test_grassroots_verdicts():
    assert check_grassroots(abd_family([0]), ["a"], ["b"], 3).passed
    bad = check_grassroots(lcc_family([0, 1]), ["a"], ["b"], 3)
    assert bad.status == "fail"
    assert check_grassroots(independent_family(2), ["a"], ["b"], 3).status == "inconclusive"
    assert check_grassroots(veto_family(2), ["a"], ["b"], 2).status == "fail"


def test_sufficient_conditions_route():
    res = check_grassroots_sufficient(abd_family([0]), ["a"], ["b"], pointwise(SUBSET), 3)
    assert res.passed
    assert set(res.details["parts"]) >= {"asynchronous", "interactive"}


def test_monotone_projection():
    assert check_monotone_projection(abd_family([0]), pointwise(SUBSET), ["a", "b"], ["a"], 3).passed


def test_local_implementation():
    sig, hi, lo = build_map_family({"builtin": "sigma3", "lo": {"kind": "ABD", "alphabet": [0]},
                                    "hi": {"kind": "LCC", "alphabet": [0]}})
    res = check_local_implementation(sig, hi, lo, [("a",), ("a", "b")], 2)
    assert res.status == "fail"
    w = res.witness
    assert w["first"]["agent"] == w["second"]["agent"]
    assert w["first"]["image"] != w["second"]["image"]
    sig, hi, lo = build_map_family({"builtin": "identity", "lo": {"kind": "ABD", "alphabet": [0]}})
    assert check_local_implementation(sig, hi, lo, [("a",), ("a", "b")], 2).passed
    sig, hi, lo = build_map_family({"builtin": "relabel", "lo": {"kind": "ABD", "alphabet": [0]},
                                    "hi": {"kind": "ABD", "alphabet": [1]}, "mapping": [[0, 1]]})
    res = check_local_implementation(sig, hi, lo, [("a",), ("a", "b")], 2, grassroots_pair=(("a",), ("b",)))
    assert res.passed and res.details["hi_inherits_grassroots"] is True


def test_family_instances():
    fam = abd_family([0])
    assert fam(("b", "a")) is fam(("a", "b"))
    assert fam(("a", "b")).agents == ("a", "b")
    with pytest.raises(StructuralError):
        fam(())
    with pytest.raises(StructuralError):
        check_subsidiarity(fam, ["a"], ["a"], 1)
