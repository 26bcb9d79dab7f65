"""Build systems, maps, faults and families from plain spec dicts.

Specs are fully inlined: a system that wraps another (SC1, SCC1, a subset
defined by a restricted map) carries the inner spec in place. Every built
object remembers its spec, so traces can name the system they came from.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Any, Callable

from .core import TransitionSystem
from .encoding import decode, to_json
from .errors import StructuralError
from .faults import SafetyFault, equivocation, forge_chain, junk_chain, junk_local
from .grassroots import Counters, ProtocolFamily
from .protocols import (
    ABD,
    Generic,
    GlobalState,
    LongestChain,
    LongestChainAgents,
    SingleChain,
    SingleChainAgents,
    SingleChainOf,
    SingleChainOfGS,
    relabel_abd,
    sigma1,
    sigma1m,
    sigma2,
    sigma2m,
    sigma3_map,
)
from .refine import ImplementationMap, compose, identity_map, restrict_to_subset

_memo: dict = {}


def _key(spec: Any) -> str:
    return to_json(spec)


def _need(spec: dict, field: str, where: str) -> Any:
    if field not in spec:
        raise StructuralError(f"{where}: missing field '{field}'")
    return spec[field]


def _check_fields(spec: dict, allowed: set, where: str) -> None:
    extra = sorted(set(spec) - allowed)
    if extra:
        raise StructuralError(f"{where}: unknown field '{extra[0]}'")


def _vals(xs: Any) -> list:
    # YAML gives lists; states inside specs use the trace encoding
    return [decode(x) for x in xs]


def _pairs(xs: Any, n: int, where: str) -> list:
    out = []
    for t in xs:
        if not isinstance(t, (list, tuple)) or len(t) != n:
            raise StructuralError(f"{where}: transitions must be {n}-element lists")
        out.append(tuple(decode(v) for v in t))
    return out


_SYSTEM_FIELDS = {
    "G": {"states", "initial", "transitions"},
    "SC": {"alphabet", "max_len"},
    "SC1": {"of"},
    "LC": {"alphabet", "n", "max_len"},
    "GS": {"agents", "states", "initial", "transitions", "max_steps"},
    "SCC": {"agents", "alphabet", "max_len"},
    "SCC1": {"of"},
    "LCC": {"agents", "alphabet", "max_len"},
    "ABD": {"agents", "alphabet", "max_index"},
    "counters": {"agents", "bound", "veto"},
    "restrict": {"map", "depth", "strict"},
}


def _make_system(kind: str, spec: dict, where: str) -> TransitionSystem:
    if kind == "G":
        return Generic(_vals(_need(spec, "states", where)), decode(_need(spec, "initial", where)),
                       _pairs(_need(spec, "transitions", where), 2, where))
    if kind == "SC":
        return SingleChain(_vals(_need(spec, "alphabet", where)), spec.get("max_len"))
    if kind == "SC1":
        g = build_system(_need(spec, "of", where), f"{where}.of")
        if not isinstance(g, Generic):
            raise StructuralError(f"{where}.of: SC1 needs a G system")
        return SingleChainOf(g)
    if kind == "LC":
        return LongestChain(_vals(_need(spec, "alphabet", where)), spec.get("n", 2), spec.get("max_len"))
    if kind == "GS":
        return GlobalState(_vals(_need(spec, "agents", where)), _vals(_need(spec, "states", where)),
                           decode(_need(spec, "initial", where)), _pairs(_need(spec, "transitions", where), 3, where),
                           spec.get("max_steps"))
    if kind == "SCC":
        return SingleChainAgents(_vals(_need(spec, "agents", where)), _vals(_need(spec, "alphabet", where)),
                                 spec.get("max_len"))
    if kind == "SCC1":
        gs = build_system(_need(spec, "of", where), f"{where}.of")
        if not isinstance(gs, GlobalState):
            raise StructuralError(f"{where}.of: SCC1 needs a GS system")
        return SingleChainOfGS(gs)
    if kind == "LCC":
        return LongestChainAgents(_vals(_need(spec, "agents", where)), _vals(_need(spec, "alphabet", where)),
                                  spec.get("max_len"))
    if kind == "ABD":
        return ABD(_vals(_need(spec, "agents", where)), _vals(_need(spec, "alphabet", where)), spec.get("max_index"))
    if kind == "counters":
        return Counters(_vals(_need(spec, "agents", where)), spec.get("bound", 3), bool(spec.get("veto", False)))
    if kind == "restrict":
        m = build_map(_need(spec, "map", where), f"{where}.map")
        return m.lo
    raise StructuralError(f"{where}: unknown system kind {kind!r}")


def build_system(spec: dict, where: str = "system") -> TransitionSystem:
    if not isinstance(spec, dict):
        raise StructuralError(f"{where}: system spec must be a mapping")
    kind = _need(spec, "kind", where)
    if kind not in _SYSTEM_FIELDS:
        raise StructuralError(f"{where}: unknown system kind {kind!r}")
    _check_fields(spec, _SYSTEM_FIELDS[kind] | {"kind"}, where)
    k = ("system", _key(spec))
    ts = _memo.get(k)
    if ts is None:
        ts = _make_system(kind, spec, where)
        ts.spec = spec
        _memo[k] = ts
    return ts


_MAP_BUILTINS: dict[str, Callable[..., ImplementationMap]] = {
    "sigma1": lambda lo, hi, **_: sigma1(lo, hi),
    "sigma2": lambda lo, hi, **_: sigma2(lo, hi),
    "sigma1m": lambda lo, hi, **_: sigma1m(lo, hi),
    "sigma2m": lambda lo, hi, **_: sigma2m(lo, hi),
    "sigma3": lambda lo, hi, agent_order=None, **_: sigma3_map(lo, hi, _vals(agent_order) if agent_order else None),
    "relabel": lambda lo, hi, mapping=None, **_: relabel_abd(lo, hi, {decode(a): decode(b) for a, b in (mapping or [])}),
}

_MAP_TYPES = {
    "sigma1": (SingleChainOf, Generic),
    "sigma2": (LongestChain, SingleChain),
    "sigma1m": (SingleChainOfGS, GlobalState),
    "sigma2m": (LongestChainAgents, SingleChainAgents),
    "sigma3": (ABD, LongestChainAgents),
    "relabel": (ABD, ABD),
}


def build_map(spec: dict, where: str = "map") -> ImplementationMap:
    """Map specs: {builtin, lo, hi, ...}, {identity: system},
    {restrict: map, to: system, depth, strict} or {compose: [m21, m32]}."""
    if not isinstance(spec, dict):
        raise StructuralError(f"{where}: map spec must be a mapping")
    k = ("map", _key(spec))
    if k in _memo:
        return _memo[k]
    if "builtin" in spec:
        _check_fields(spec, {"builtin", "lo", "hi", "agent_order", "mapping"}, where)
        name = spec["builtin"]
        if name not in _MAP_BUILTINS:
            raise StructuralError(f"{where}.builtin: unknown map {name!r}")
        lo = build_system(_need(spec, "lo", where), f"{where}.lo")
        hi = build_system(_need(spec, "hi", where), f"{where}.hi")
        want_lo, want_hi = _MAP_TYPES[name]
        if not isinstance(lo, want_lo) or not isinstance(hi, want_hi):
            raise StructuralError(f"{where}: {name} maps {want_lo.kind} to {want_hi.kind}")
        m = _MAP_BUILTINS[name](lo, hi, **{f: spec[f] for f in ("agent_order", "mapping") if f in spec})
    elif "identity" in spec:
        _check_fields(spec, {"identity"}, where)
        m = identity_map(build_system(spec["identity"], f"{where}.identity"))
    elif "restrict" in spec:
        _check_fields(spec, {"restrict", "to", "depth", "strict"}, where)
        inner = build_map(spec["restrict"], f"{where}.restrict")
        to = build_system(_need(spec, "to", where), f"{where}.to")
        pred = getattr(to, "valid", None)
        if pred is None:
            raise StructuralError(f"{where}.to: system {to.kind} cannot serve as a subset filter")
        m = restrict_to_subset(inner, pred, hi=to, depth=spec.get("depth", 4), strict=spec.get("strict", True),
                               name=f"{inner.name}|{to.kind}")
        m.lo.spec = {"kind": "restrict", "map": spec}
        _memo[("system", _key(m.lo.spec))] = m.lo
    elif "compose" in spec:
        _check_fields(spec, {"compose"}, where)
        parts = spec["compose"]
        if not isinstance(parts, list) or len(parts) != 2:
            raise StructuralError(f"{where}.compose: needs [upper map, lower map]")
        m = compose(build_map(parts[0], f"{where}.compose[0]"), build_map(parts[1], f"{where}.compose[1]"))
    else:
        raise StructuralError(f"{where}: map spec needs one of builtin, identity, restrict, compose")
    m.spec = spec
    _memo[k] = m
    return m


_FAULTS = {
    "junk_chain": junk_chain,
    "junk_local": junk_local,
    "equivocation": equivocation,
    "forge_chain": forge_chain,
}


def build_fault(spec: dict, host: TransitionSystem, where: str = "fault") -> SafetyFault:
    if not isinstance(spec, dict):
        raise StructuralError(f"{where}: fault spec must be a mapping")
    _check_fields(spec, {"kind", "agent", "name", "host"}, where)
    kind = _need(spec, "kind", where)
    if kind not in _FAULTS:
        raise StructuralError(f"{where}: unknown fault kind {kind!r}")
    agent = decode(_need(spec, "agent", where))
    if host.agents is not None and agent not in host.agents:
        raise StructuralError(f"{where}.agent: {agent!r} is not an agent of {host.name}")
    f = _FAULTS[kind](host, agent, spec.get("name"))
    return replace(f, spec={"kind": kind, "agent": spec["agent"], **({"name": spec["name"]} if "name" in spec else {})})


_FAMILY_FIELDS = {
    "ABD": {"alphabet", "max_index"},
    "LCC": {"alphabet", "max_len"},
    "counters": {"bound", "veto"},
}


def build_family(spec: dict, where: str = "family") -> ProtocolFamily:
    if not isinstance(spec, dict):
        raise StructuralError(f"{where}: family spec must be a mapping")
    kind = _need(spec, "kind", where)
    if kind not in _FAMILY_FIELDS:
        raise StructuralError(f"{where}: unknown family kind {kind!r}")
    _check_fields(spec, _FAMILY_FIELDS[kind] | {"kind"}, where)
    k = ("family", _key(spec))
    fam = _memo.get(k)
    if fam is None:
        params = {f: v for f, v in spec.items() if f != "kind"}

        def inst(P: tuple, params=params) -> TransitionSystem:
            return build_system({"kind": kind, "agents": list(P), **params}, where)

        fam = ProtocolFamily(kind if kind != "counters" else ("veto" if spec.get("veto") else "independent"),
                             inst, params)
        fam.spec = spec
        _memo[k] = fam
    return fam


def build_map_family(spec: dict, where: str = "map_family") -> tuple:
    """{builtin, lo, hi, agent_order?, mapping?} over families: returns
    (P -> map, hi family, lo family)."""
    if not isinstance(spec, dict):
        raise StructuralError(f"{where}: map family spec must be a mapping")
    _check_fields(spec, {"builtin", "lo", "hi", "mapping"}, where)
    name = _need(spec, "builtin", where)
    if name not in _MAP_BUILTINS and name != "identity":
        raise StructuralError(f"{where}.builtin: unknown map {name!r}")
    lo = build_family(_need(spec, "lo", where), f"{where}.lo")
    hi = build_family(spec.get("hi", spec["lo"]), f"{where}.hi")

    def sig(P: tuple) -> ImplementationMap:
        if name == "identity":
            return build_map({"identity": lo(P).spec}, where)
        m = {"builtin": name, "lo": lo(P).spec, "hi": hi(P).spec}
        if "mapping" in spec:
            m["mapping"] = spec["mapping"]
        return build_map(m, where)

    return sig, hi, lo
