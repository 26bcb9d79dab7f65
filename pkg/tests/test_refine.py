from __future__ import annotations

import pytest

from mtskit.core import Run
from mtskit.encoding import Config, GSState
from mtskit.errors import Refusal, StructuralError
from mtskit.order import PREFIX, SUBSET, pointwise
from mtskit.protocols import (
    ABD,
    Generic,
    LongestChainAgents,
    SingleChain,
    SingleChainAgents,
    SingleChainOf,
    consistent_configs,
    representative_abd,
    sigma1,
    sigma2m,
    sigma3_map,
    stack_a,
    stack_b,
)
from mtskit.refine import (
    ImplementationMap,
    check_complete_on_runs,
    check_locally_complete,
    check_locally_safe,
    check_order_preserving,
    check_productive,
    check_representatives,
    check_subset,
    compose,
    identity_map,
    project_run,
    restrict_to_subset,
)

G_ALL = [(0, 0), (0, 1), (1, 0), (1, 1)]


class MissingStep(SingleChainOf):
    """Walks of G that can never take the step 0 -> 1."""

    def successors(self, x):
        return [y for y in super().successors(x) if not (self.head(x) == 0 and y[-1] == 1)]


@pytest.fixture(scope="module")
def sa():
    return stack_a([0, 1], 0, G_ALL)


def test_initial_state_condition():
    sc = SingleChain([0])
    with pytest.raises(StructuralError):
        ImplementationMap(sc, sc, lambda x: (0,))


def test_project_run_sigma1(sa):
    r = project_run(sa["sigma1"], Run.from_states([(), (1,), (1, 0)]))
    assert r.states == [0, 1, 0]


def test_project_run_identity_is_unchanged():
    sc = SingleChain([0, 1])
    r = Run.from_states([(), (0,), (0, 1)])
    assert project_run(identity_map(sc), r).states == r.states


def test_project_run_sigma2m_copy_is_stutter():
    lcc = LongestChainAgents(["a", "b"], [0])
    m = sigma2m(lcc, SingleChainAgents(["a", "b"], [0]))
    c1 = Config({"a": ((0, "a"),), "b": ()})
    c2 = Config({"a": ((0, "a"),), "b": ((0, "a"),)})
    r = project_run(m, Run(c1, Run.from_states([c1, c2]).steps))
    assert len(r) == 0


def test_locally_safe(sa):
    assert check_locally_safe(sa["sigma1"], 4).passed
    assert check_locally_safe(sa["sigma2"], 4).passed


def test_sigma3_locally_safe_fails_once_equivocation_is_admitted():
    class Admit(ABD):
        # ABD in which a may re-use index 1 with another payload
        def successors(self, c):
            out = list(super().successors(c))
            for b in c["a"]:
                if b.creator == "a" and b.index == 1:
                    out += [c.replace("a", c["a"] | {b._replace(payload=s)})
                            for s in self.alphabet if s != b.payload]
            return out

    m = sigma3_map(Admit(["a", "b"], [0, 1], max_index=1), LongestChainAgents(["a", "b"], [0, 1]))
    res = check_locally_safe(m, 2)
    assert res.status == "fail"


def test_productive(sa):
    assert check_productive(sa["sigma2"], horizon=12, trials=10).passed
    assert check_productive(sa["sigma1"], horizon=8, trials=10).passed
    # without a self-loop at 0 a constant image never activates the hi step 0 -> 1
    g = Generic([0, 1], 0, [(0, 1), (1, 0)])
    const = ImplementationMap(SingleChainOf(g), g, lambda x: g.initial, "const")
    res = check_productive(const, horizon=8, trials=3)
    assert res.status == "fail"


def test_locally_complete(sa):
    assert check_locally_complete(sa["sigma1"], 4).passed
    broken = sigma1(MissingStep(sa["G"]), sa["G"])
    res = check_locally_complete(broken, 3)
    assert res.status == "fail"
    assert res.witness["transition"] == [0, 1]


def test_sigma3_locally_complete_with_representatives():
    abd = ABD(["a", "b"], [0])
    m = sigma3_map(abd, LongestChainAgents(["a", "b"], [0]))
    assert m.representative is not None
    assert check_locally_complete(m, 3).passed


def test_order_preserving(sa):
    assert check_order_preserving(sa["sigma2"], PREFIX, pointwise(PREFIX), 4).passed
    m = sigma3_map(ABD(["a", "b"], [0]), LongestChainAgents(["a", "b"], [0]))
    assert check_order_preserving(m, pointwise(PREFIX), pointwise(SUBSET), 3).passed
    sc = SingleChain([0], max_len=3)
    flip = ImplementationMap(sc, sc, lambda x: x if not x else (0,) * (4 - len(x)), "flip")
    res = check_order_preserving(flip, PREFIX, PREFIX, 3)
    assert res.status == "fail" and res.details.get("condition") == "up"


def test_compose_values(sa):
    assert sa["sigma21"](((0, 1), (0,))) == 1
    sc = SingleChain([0, 1])
    m = identity_map(sc)
    twice = compose(m, identity_map(sc))
    assert all(twice(x) == m(x) for x in [(), (0,), (1, 0)])
    sb = stack_b(["a", "b"], [0, 1], 0, [("a", 0, 1), ("b", 1, 0)])
    c = Config({"a": ((1, "a"), (0, "b")), "b": ((1, "a"),)})
    assert sb["sigma21m"](c) == GSState(0, Config({"a": 1, "b": 1}))


def test_compose_requires_matching_middle(sa):
    with pytest.raises(StructuralError):
        compose(sa["sigma1"], sa["sigma2"])


def test_restrict(sa):
    everything = restrict_to_subset(sa["sigma2"], lambda x: True, depth=3)
    assert all(everything(c) == sa["sigma2"](c) for c in [((), ()), ((0,), ()), ((0, 1), (0,))])
    with pytest.raises(Refusal) as e:
        restrict_to_subset(sa["sigma2"], lambda x: x == () or x[-1] == 0, depth=3)
    assert e.value.witness["image"] == [(), (1,)]


def test_restricted_subset_and_complete_on_runs(sa):
    assert check_subset(sa["LC1"], sa["LC"], 4).passed
    assert check_complete_on_runs(sa["sigma1"], 3).passed
    assert check_complete_on_runs(sa["sigma21"], 3).passed
    broken = sigma1(MissingStep(sa["G"]), sa["G"])
    assert check_complete_on_runs(broken, 3).status == "fail"


def test_representatives_round_trip():
    m = sigma3_map(ABD(["a", "b"], [0, 1]), LongestChainAgents(["a", "b"], [0, 1]))
    configs = consistent_configs(["a", "b"], [0, 1], 2)
    assert check_representatives(m, configs).passed
    assert all(m.representative(c) == representative_abd(c) for c in configs)
