"""Scenario files: declarations, check suites and their reports.

A scenario is a YAML mapping with `schema: 1`. Systems, maps, faults,
families and map families are declared by name; checks and simulations
refer to those names. Names inside specs are resolved to fully inlined
specs before anything is built.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from . import __version__
from .build import build_fault, build_family, build_map, build_map_family, build_system
from .core import Run, explore, generate_run
from .encoding import _dumps, decode
from .errors import Refusal, StructuralError
from .faults import (
    AdversarySchedule,
    LivenessFault,
    check_block_liveness,
    check_equivocation_detection,
    check_f_resilience,
    check_fault_image,
    check_liveness_fault_resilience,
    check_resilience_composition,
    inject_run,
)
from .grassroots import (
    check_grassroots,
    check_grassroots_sufficient,
    check_local_implementation,
    check_monotone_projection,
    check_non_interfering,
    check_subsidiarity,
    find_interactivity_witness,
)
from .multiagent import check_asynchronous, check_distributed
from .order import (
    NUMERIC,
    PREFIX,
    SUBSET,
    check_consistent_configurations,
    check_epsilon_monotonic_completeness,
    check_monotonic,
    check_monotonic_completeness,
    pointwise,
    strict_pairs,
)
from .protocols import LongestChainAgents, consistent_configs
from .refine import (
    check_complete_on_runs,
    check_locally_complete,
    check_locally_safe,
    check_order_preserving,
    check_productive,
    check_representatives,
    check_subset,
)
from .report import FAIL, INCONCLUSIVE, PASS, CheckResult, failed, jsonify
from .trace import replay, write_trace

SCHEMA = 1
SECTIONS = ("systems", "maps", "faults", "families", "map_families")
TOP_FIELDS = {"schema", "name", "description", "seed", "checks", "simulate", *SECTIONS}

ORDERS = {
    "prefix": PREFIX,
    "subset": SUBSET,
    "numeric": NUMERIC,
    "pointwise-prefix": pointwise(PREFIX),
    "pointwise-subset": pointwise(SUBSET),
}


class Params:
    """Typed access to one check's fields, with errors naming the field."""

    def __init__(self, spec: dict, where: str) -> None:
        self.spec = spec
        self.where = where
        self.used = {"check", "id", "expect", "expect_details"}

    def get(self, key: str, default: Any = ..., kind: type | tuple | None = None) -> Any:
        self.used.add(key)
        if key not in self.spec:
            if default is ...:
                raise StructuralError(f"{self.where}: missing field '{key}'")
            return default
        v = self.spec[key]
        if kind is not None and not isinstance(v, kind) or (kind is int and isinstance(v, bool)):
            raise StructuralError(f"{self.where}.{key}: expected {getattr(kind, '__name__', kind)}")
        return v

    def count(self, key: str, default: Any = ..., minimum: int = 1) -> int:
        v = self.get(key, default, int)
        if v is not None and v < minimum:
            raise StructuralError(f"{self.where}.{key}: must be >= {minimum}")
        return v

    def agents(self, key: str, default: Any = ...) -> tuple:
        v = self.get(key, default, list)
        if v is None:
            return None
        if not v:
            raise StructuralError(f"{self.where}.{key}: agent list must be non-empty")
        return tuple(decode(a) for a in v)

    def finish(self) -> None:
        extra = sorted(set(self.spec) - self.used)
        if extra:
            raise StructuralError(f"{self.where}: unknown field '{extra[0]}'")


@dataclass
class Outcome:
    result: CheckResult
    traces: list = field(default_factory=list)  # (label, system, run, faults[, header extras])


class Scenario:
    def __init__(self, doc: Any, source: str = "<scenario>", seed: int | None = None, depth: int | None = None,
                 horizon: int | None = None) -> None:
        if not isinstance(doc, dict):
            raise StructuralError(f"{source}: a scenario must be a mapping")
        if doc.get("schema") != SCHEMA:
            raise StructuralError(f"{source}: field 'schema' must be {SCHEMA}")
        extra = sorted(set(doc) - TOP_FIELDS)
        if extra:
            raise StructuralError(f"{source}: unknown field '{extra[0]}'")
        self.doc = doc
        self.source = source
        self.name = doc.get("name") or Path(source).stem
        self.seed = seed if seed is not None else doc.get("seed", 0)
        self.depth = depth
        self.horizon = horizon
        for sec in SECTIONS:
            if not isinstance(doc.get(sec, {}), dict):
                raise StructuralError(f"{source}: field '{sec}' must be a mapping of names")
        for sec in ("checks", "simulate"):
            if not isinstance(doc.get(sec, []), list):
                raise StructuralError(f"{source}: field '{sec}' must be a list")
        self._resolving: set = set()
        self._resolved: dict = {}

    # name resolution ------------------------------------------------------

    def _decl(self, sec: str, name: str, where: str) -> dict:
        decls = self.doc.get(sec, {})
        if name not in decls:
            raise StructuralError(f"{where}: unknown {sec[:-1].replace('_', ' ')} '{name}'")
        return decls[name]

    def _once(self, sec: str, name: str, where: str, fn: Callable[[dict], dict]) -> dict:
        key = (sec, name)
        if key in self._resolved:
            return self._resolved[key]
        if key in self._resolving:
            raise StructuralError(f"{where}: circular reference through {sec} '{name}'")
        self._resolving.add(key)
        spec = self._decl(sec, name, where)
        if not isinstance(spec, dict):
            raise StructuralError(f"{sec}.{name}: declaration must be a mapping")
        out = fn(spec)
        self._resolving.discard(key)
        self._resolved[key] = out
        return out

    def system_spec(self, ref: Any, where: str) -> dict:
        if isinstance(ref, dict):
            return self._inline_system(ref, where)
        if not isinstance(ref, str):
            raise StructuralError(f"{where}: expected a system name")
        m = re.fullmatch(r"(.+)\.(lo|hi)", ref)
        if m and m.group(1) in self.doc.get("maps", {}):
            built = build_map(self.map_spec(m.group(1), where), where)
            return getattr(built, m.group(2)).spec
        return self._once("systems", ref, where, lambda s: self._inline_system(s, f"systems.{ref}"))

    def _inline_system(self, spec: dict, where: str) -> dict:
        out = dict(spec)
        if "of" in out:
            out["of"] = self.system_spec(out["of"], f"{where}.of")
        if out.get("kind") == "restrict" and "map" in out:
            return self.system_spec_of_map(out["map"], f"{where}.map")
        return out

    def system_spec_of_map(self, ref: Any, where: str) -> dict:
        return build_map(self.map_spec(ref, where), where).lo.spec

    def map_spec(self, ref: Any, where: str) -> dict:
        if isinstance(ref, dict):
            return self._inline_map(ref, where)
        if not isinstance(ref, str):
            raise StructuralError(f"{where}: expected a map name")
        return self._once("maps", ref, where, lambda s: self._inline_map(s, f"maps.{ref}"))

    def _inline_map(self, spec: dict, where: str) -> dict:
        out = dict(spec)
        if "builtin" in out:
            for side in ("lo", "hi"):
                if side in out:
                    out[side] = self.system_spec(out[side], f"{where}.{side}")
        elif "identity" in out:
            out["identity"] = self.system_spec(out["identity"], f"{where}.identity")
        elif "restrict" in out:
            out["restrict"] = self.map_spec(out["restrict"], f"{where}.restrict")
            if "to" in out:
                out["to"] = self.system_spec(out["to"], f"{where}.to")
        elif "compose" in out:
            parts = out["compose"]
            if not isinstance(parts, list):
                raise StructuralError(f"{where}.compose: needs [upper map, lower map]")
            out["compose"] = [self.map_spec(p, f"{where}.compose[{i}]") for i, p in enumerate(parts)]
        return out

    def system(self, ref: Any, where: str):
        declared = isinstance(ref, str) and ref in self.doc.get("systems", {})
        return build_system(self.system_spec(ref, where), f"systems.{ref}" if declared else where)

    def map(self, ref: Any, where: str):
        return build_map(self.map_spec(ref, where), where)

    def fault(self, name: str, where: str, host=None):
        spec = self._decl("faults", name, where)
        if not isinstance(spec, dict):
            raise StructuralError(f"faults.{name}: declaration must be a mapping")
        if "host" in spec:
            h = self.system(spec["host"], f"faults.{name}.host")
            if host is not None and h is not host:
                raise StructuralError(f"{where}: fault '{name}' is declared on another system")
            host = h
        if host is None:
            raise StructuralError(f"faults.{name}: missing field 'host'")
        return build_fault({"name": name, **{k: v for k, v in spec.items() if k != "host"}}, host, f"faults.{name}")

    def faults(self, names: Any, where: str, host=None) -> list:
        if not isinstance(names, list):
            raise StructuralError(f"{where}: expected a list of fault names")
        return [self.fault(n, f"{where}[{i}]", host) for i, n in enumerate(names)]

    def family(self, ref: str, where: str):
        return build_family(self._decl("families", ref, where), where)

    def map_family(self, ref: str, where: str) -> tuple:
        spec = dict(self._decl("map_families", ref, where))
        for side in ("lo", "hi"):
            if side in spec:
                spec[side] = self._decl("families", spec[side], f"map_families.{ref}.{side}")
        return build_map_family(spec, f"map_families.{ref}")

    def validate(self) -> None:
        """Build every declaration so a bad one is reported even when no
        check refers to it. Builds are memoized, so this costs nothing later."""
        for name in self.doc.get("systems", {}):
            self.system(name, f"systems.{name}")
        for name in self.doc.get("maps", {}):
            self.map(name, f"maps.{name}")
        for name in self.doc.get("faults", {}):
            self.fault(name, f"faults.{name}")
        for name in self.doc.get("families", {}):
            self.family(name, f"families.{name}")
        for name in self.doc.get("map_families", {}):
            self.map_family(name, f"map_families.{name}")

    # bounds overrides -----------------------------------------------------

    def depth_of(self, p: Params, default: Any = ...) -> int:
        v = p.count("depth", default)
        return self.depth if self.depth is not None and "depth" in p.spec else v

    def horizon_of(self, p: Params, default: Any = ...) -> int:
        v = p.count("horizon", default)
        return self.horizon if self.horizon is not None and "horizon" in p.spec else v

    def seed_of(self, p: Params) -> int:
        return p.get("seed", self.seed, int)


# checks ----------------------------------------------------------------------


def _order(p: Params, key: str = "order") -> Any:
    name = p.get(key, None, str)
    if name is None:
        return None
    if name not in ORDERS:
        raise StructuralError(f"{p.where}.{key}: unknown order {name!r}")
    return ORDERS[name]


def _map_check(fn: Callable) -> Callable:
    def run(sc: Scenario, p: Params) -> Outcome:
        m = sc.map(p.get("map"), f"{p.where}.map")
        res = fn(sc, p, m)
        traces = [("witness", m.lo, res.witness, [])] if isinstance(res.witness, Run) else []
        return Outcome(res, traces)

    return run


def _productive(sc, p, m):
    return check_productive(m, sc.horizon_of(p), p.count("trials", 20), sc.seed_of(p), p.count("window", 1))


def _order_preserving(sc, p, m):
    if m.hi_order is None or m.lo_order is None:
        raise StructuralError(f"{p.where}.map: map '{m.name}' declares no orders")
    return check_order_preserving(m, m.hi_order, m.lo_order, sc.depth_of(p))


def _representatives(sc, p, m):
    hi = m.hi
    max_len = p.count("max_len", 3)
    if isinstance(hi, LongestChainAgents):
        states = consistent_configs(hi.agents, hi.alphabet, max_len)
    else:
        states = list(explore(hi, max_len))
    return check_representatives(m, states, p.get("lo_depth", None, int))


def _system_check(fn: Callable) -> Callable:
    def run(sc: Scenario, p: Params) -> Outcome:
        ts = sc.system(p.get("system"), f"{p.where}.system")
        return Outcome(fn(sc, p, ts))

    return run


def _need_order(p: Params):
    po = _order(p)
    if po is None:
        raise StructuralError(f"{p.where}: missing field 'order'")
    return po


def _epsilon(sc, p, ts):
    po = _need_order(p)
    states = list(explore(ts, sc.depth_of(p)))
    return check_epsilon_monotonic_completeness(ts, po, strict_pairs(po, states))


def _f_resilience(sc: Scenario, p: Params) -> Outcome:
    m = sc.map(p.get("map"), f"{p.where}.map")
    faults = sc.faults(p.get("faults"), f"{p.where}.faults", m.lo)
    res = check_f_resilience(m, faults, sc.horizon_of(p), p.count("trials", 100), sc.seed_of(p),
                             p.get("fault_rate", 0.25, (int, float)), p.count("window", 1),
                             safety=p.get("safety", None, str))
    traces = [("witness", m.lo, res.witness, faults)] if isinstance(res.witness, Run) else []
    return Outcome(res, traces)


def _liveness_fault(sc: Scenario, p: Params) -> Outcome:
    m = sc.map(p.get("map"), f"{p.where}.map")
    lf = LivenessFault(frozenset(decode(c) for c in p.get("classes", [], list)),
                       frozenset(p.agents("agents", None) or ()))
    res = check_liveness_fault_resilience(m, lf, sc.horizon_of(p), p.count("trials", 100), sc.seed_of(p),
                                          p.get("freeze_max", None, int), p.count("window", 1))
    traces = [("witness", m.lo, res.witness, [])] if isinstance(res.witness, Run) else []
    return Outcome(res, traces)


def _composition(sc: Scenario, p: Params) -> Outcome:
    m21 = sc.map(p.get("upper"), f"{p.where}.upper")
    m32 = sc.map(p.get("lower"), f"{p.where}.lower")
    F2 = sc.faults(p.get("F2", []), f"{p.where}.F2", m21.lo)
    F3 = sc.faults(p.get("F3", []), f"{p.where}.F3", m32.lo)
    F3p = sc.faults(p.get("F3p", []), f"{p.where}.F3p", m32.lo)
    res = check_resilience_composition(m21, m32, F2, F3, F3p, sc.horizon_of(p), p.count("trials", 100),
                                       sc.seed_of(p), p.get("fault_rate", 0.25, (int, float)))
    return Outcome(res)


def _fault_image(sc: Scenario, p: Params) -> Outcome:
    m32 = sc.map(p.get("map"), f"{p.where}.map")
    F3p = sc.faults(p.get("F3p"), f"{p.where}.F3p", m32.lo)
    F2 = sc.faults(p.get("F2", []), f"{p.where}.F2", m32.hi)
    bound = {"horizon": sc.horizon_of(p), "trials": p.count("trials", 20), "seed": sc.seed_of(p), "bounded": True}
    try:
        info = check_fault_image(m32, F3p, F2, bound["horizon"], bound["trials"], bound["seed"],
                                 p.get("fault_rate", 0.25, (int, float)))
    except Refusal as e:
        return Outcome(failed("fault_image", bound, e.witness, reason=str(e), map=m32.name))
    return Outcome(CheckResult("fault_image", PASS, bound, None, {"map": m32.name, **info}))


def _abd_harness(fn: Callable) -> Callable:
    def run(sc: Scenario, p: Params) -> Outcome:
        ts = sc.system(p.get("system"), f"{p.where}.system")
        res = fn(ts, p.count("trials", 100), sc.seed_of(p), p.count("rotations", 3))
        traces = [("witness", ts, res.witness, [])] if isinstance(res.witness, Run) else []
        return Outcome(res, traces)

    return run


def _pair_runs(fam, P1, P2, res: CheckResult) -> list:
    out = []
    w = res.witness
    if isinstance(w, dict):
        for key, P in (("r1", P1), ("r2", P2)):
            if isinstance(w.get(key), Run):
                out.append((key, fam(P), w[key], []))
        joint, i = w.get("joint"), w.get("failing_step")
        if isinstance(joint, Run) and isinstance(i, int):
            cut = Run(joint.start, joint.steps[: i + 1])
            out.append(("joint", fam(P1 + P2), cut, [], {"incorrect_step": i}))
    iw = res.details.get("interactivity_witness")
    if isinstance(iw, Run):
        out.append(("interactivity", fam(P1 + P2), iw, []))
    return out


def _family_pair(fn: Callable) -> Callable:
    def run(sc: Scenario, p: Params) -> Outcome:
        fam = sc.family(p.get("family"), f"{p.where}.family")
        P1, P2 = p.agents("P1"), p.agents("P2")
        res = fn(sc, p, fam, P1, P2)
        return Outcome(res, _pair_runs(fam, P1, P2, res))

    return run


def _interactivity(sc, p, fam, P1, P2):
    depth = sc.depth_of(p)
    w = find_interactivity_witness(fam, P1, P2, depth)
    bound = {"depth": depth, "P1": list(P1), "P2": list(P2), "bounded": True}
    if w is None:
        return CheckResult("interactivity", INCONCLUSIVE, bound, None,
                           {"family": fam.name, "reason": "no witness within depth"})
    return CheckResult("interactivity", PASS, bound, None,
                       {"family": fam.name, "interactivity_witness": w, "decomposition_log": w.log})


def _non_interfering(sc: Scenario, p: Params) -> Outcome:
    fam = sc.family(p.get("family"), f"{p.where}.family")
    return Outcome(check_non_interfering(fam, p.agents("Psub"), p.agents("P"), sc.depth_of(p)))


def _monotone_projection(sc: Scenario, p: Params) -> Outcome:
    fam = sc.family(p.get("family"), f"{p.where}.family")
    return Outcome(check_monotone_projection(fam, _need_order(p), p.agents("P"), p.agents("sub"), sc.depth_of(p)))


def _local_impl(sc: Scenario, p: Params) -> Outcome:
    sig, hi, lo = sc.map_family(p.get("map_family"), f"{p.where}.map_family")
    sets = p.get("agent_sets", kind=list)
    agent_sets = [tuple(decode(a) for a in P) for P in sets]
    if not agent_sets or not all(agent_sets):
        raise StructuralError(f"{p.where}.agent_sets: needs non-empty agent lists")
    pair = p.get("grassroots_pair", None, list)
    if pair is not None:
        if len(pair) != 2:
            raise StructuralError(f"{p.where}.grassroots_pair: needs two agent lists")
        pair = tuple(tuple(decode(a) for a in P) for P in pair)
    return Outcome(check_local_implementation(sig, hi, lo, agent_sets, sc.depth_of(p), pair))


CHECKS: dict[str, tuple[str, Callable[[Scenario, Params], Outcome]]] = {
    "locally_safe": ("check", _map_check(lambda sc, p, m: check_locally_safe(m, sc.depth_of(p)))),
    "productive": ("check", _map_check(_productive)),
    "locally_complete": ("check", _map_check(lambda sc, p, m: check_locally_complete(m, sc.depth_of(p)))),
    "order_preserving": ("check", _map_check(_order_preserving)),
    "representatives": ("check", _map_check(_representatives)),
    "complete_on_runs": ("compose", _map_check(
        lambda sc, p, m: check_complete_on_runs(m, sc.depth_of(p), p.get("max_stutter", None, int)))),
    "subset": ("compose", lambda sc, p: Outcome(check_subset(sc.system(p.get("sub"), f"{p.where}.sub"),
                                                             sc.system(p.get("sup"), f"{p.where}.sup"),
                                                             sc.depth_of(p)))),
    "monotonic": ("check", _system_check(lambda sc, p, ts: check_monotonic(ts, _need_order(p), sc.depth_of(p)))),
    "monotonic_completeness": ("check", _system_check(
        lambda sc, p, ts: check_monotonic_completeness(ts, _need_order(p), sc.depth_of(p)))),
    "epsilon_monotonic_completeness": ("check", _system_check(_epsilon)),
    "consistent_configurations": ("check", _system_check(
        lambda sc, p, ts: check_consistent_configurations(ts, _need_order(p), sc.depth_of(p)))),
    "distributed": ("check", _system_check(lambda sc, p, ts: check_distributed(ts, sc.depth_of(p)))),
    "asynchronous": ("check", _system_check(
        lambda sc, p, ts: check_asynchronous(ts, _need_order(p), sc.depth_of(p), p.get("samples", None, int),
                                             sc.seed_of(p)))),
    "f_resilience": ("faults", _f_resilience),
    "liveness_fault_resilience": ("faults", _liveness_fault),
    "fault_image": ("compose", _fault_image),
    "resilience_composition": ("compose", _composition),
    "block_liveness": ("faults", _abd_harness(check_block_liveness)),
    "equivocation_detection": ("faults", _abd_harness(check_equivocation_detection)),
    "subsidiarity": ("grassroots", _family_pair(lambda sc, p, f, a, b: check_subsidiarity(f, a, b, sc.depth_of(p)))),
    "interactivity": ("grassroots", _family_pair(_interactivity)),
    "grassroots": ("grassroots", _family_pair(lambda sc, p, f, a, b: check_grassroots(f, a, b, sc.depth_of(p)))),
    "grassroots_sufficient": ("grassroots", _family_pair(
        lambda sc, p, f, a, b: check_grassroots_sufficient(f, a, b, _need_order(p), sc.depth_of(p)))),
    "non_interfering": ("grassroots", _non_interfering),
    "monotone_projection": ("grassroots", _monotone_projection),
    "local_implementation": ("grassroots", _local_impl),
}


# running ---------------------------------------------------------------------


def _lookup(details: dict, dotted: str) -> Any:
    cur: Any = details
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return ...
        cur = cur[part]
    return cur


def load_scenario(path: str | Path, **overrides: Any) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise StructuralError(f"{path}: cannot read scenario ({e.strerror})") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise StructuralError(f"{path}: not valid YAML ({e})") from None
    return Scenario(doc, str(path), **overrides)


@dataclass
class ScenarioReport:
    lines: list
    exit_code: int
    traces: list


def _trace_name(check_id: str, label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", f"{check_id}.{label}") + ".jsonl"


def run_scenario(sc: Scenario, out: str | Path | None = None, category: str | None = None,
                 simulate: bool | None = None, timestamp: str | None = None) -> ScenarioReport:
    """Run the scenario's checks (optionally one category) and simulations.

    Exit codes: 0 all checks met their expectation, 1 some check did not,
    2 the only unmet expectations are inconclusive results. Structural errors
    propagate as StructuralError for the caller to map to exit 3.
    """
    sc.validate()
    out_dir = Path(out) if out is not None else None
    stamp = timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    lines = [{"type": "header", "scenario": sc.name, "schema": SCHEMA, "tool": f"mtskit {__version__}",
              "seed": sc.seed, "generated": stamp}]
    written = []
    worst = 0

    def emit_trace(check_id: str, label: str, ts, run, faults, extra: dict | None = None) -> dict:
        if out_dir is None:
            return {"label": label, "steps": len(run)}
        path = out_dir / "traces" / _trace_name(check_id, label)
        write_trace(path, ts, run, faults, {"check": check_id, "label": label, **(extra or {})})
        rep = replay(path)
        written.append(path)
        return {"label": label, "file": str(path.relative_to(out_dir)), "steps": len(run), "replay": rep.status}

    checks = sc.doc.get("checks", [])
    seen_ids = set()
    for i, spec in enumerate(checks):
        where = f"checks[{i}]"
        if not isinstance(spec, dict):
            raise StructuralError(f"{where}: a check must be a mapping")
        kind = spec.get("check")
        if kind not in CHECKS:
            raise StructuralError(f"{where}.check: unknown check {kind!r}")
        cat, fn = CHECKS[kind]
        cid = str(spec.get("id", f"{i:02d}-{kind}"))
        if cid in seen_ids:
            raise StructuralError(f"{where}.id: duplicate id {cid!r}")
        seen_ids.add(cid)
        expect = spec.get("expect", PASS)
        if expect not in (PASS, FAIL, INCONCLUSIVE):
            raise StructuralError(f"{where}.expect: must be pass, fail or inconclusive")
        if category is not None and cat != category and category != "check":
            continue
        p = Params(spec, where)
        try:
            outcome = fn(sc, p)
        except Refusal as e:
            # a refused premise is a negative verdict, not a malformed scenario
            outcome = Outcome(failed(kind, {"refused": True}, e.witness, reason=str(e)))
        p.finish()
        res = outcome.result
        ok = res.status == expect
        want = spec.get("expect_details") or {}
        if not isinstance(want, dict):
            raise StructuralError(f"{where}.expect_details: must be a mapping")
        mismatched = {k: _lookup(jsonify(res.details), k) for k, v in want.items()
                      if _lookup(jsonify(res.details), k) != v}
        if mismatched:
            ok = False
        traces = [emit_trace(cid, *t) for t in outcome.traces]
        if any(t.get("replay") not in (None, PASS) for t in traces):
            ok = False
        line = {"type": "check", "id": cid, "check": kind, "expect": expect, "status": res.status, "ok": ok,
                "bound": res.bound, "details": res.details, "witness": res.witness, "traces": traces}
        if mismatched:
            line["unmet_details"] = {k: (None if v is ... else v) for k, v in mismatched.items()}
        lines.append(jsonify(line))
        if not ok:
            worst = max(worst, 2 if res.status == INCONCLUSIVE and not mismatched else 1)

    do_sim = simulate if simulate is not None else category in (None, "check", "simulate")
    for i, spec in enumerate(sc.doc.get("simulate", []) if do_sim else []):
        where = f"simulate[{i}]"
        if not isinstance(spec, dict):
            raise StructuralError(f"{where}: a simulation must be a mapping")
        p = Params(spec, where)
        ts = sc.system(p.get("system"), f"{where}.system")
        faults = sc.faults(p.get("faults", []), f"{where}.faults", ts)
        horizon = sc.horizon_of(p)
        seed = sc.seed_of(p)
        rate = p.get("fault_rate", 0.25 if faults else 0.0, (int, float))
        sid = str(p.get("id", f"sim{i:02d}"))
        p.finish()
        if faults:
            run = inject_run(ts, faults, None, AdversarySchedule(seed=seed, fault_rate=rate), horizon, seed=seed)
        else:
            run = generate_run(ts, None, horizon, seed)
        tr = emit_trace(sid, "run", ts, run, faults)
        ok = tr.get("replay") in (None, PASS)
        lines.append(jsonify({"type": "simulate", "id": sid, "system": ts.kind, "steps": len(run),
                              "stalled": run.stalled, "faults": run.fault_marks.count(None) != len(run),
                              "last": run.last, "trace": tr, "ok": ok}))
        if not ok:
            worst = max(worst, 1)

    counts: dict = {}
    for ln in lines[1:]:
        key = "ok" if ln.get("ok") else "unmet"
        counts[key] = counts.get(key, 0) + 1
    lines.append({"type": "summary", "exit": worst, "counts": counts})
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.jsonl").write_text("\n".join(_dumps(ln) for ln in lines) + "\n", encoding="utf-8")
    return ScenarioReport(lines, worst, written)


def bundled_scenarios() -> dict:
    """Name -> path of the scenarios shipped with the package."""
    here = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(here.glob("*.yaml"))}


def resolve_scenario_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if name in bundled:
        return bundled[name]
    raise StructuralError(f"--scenario: no file or bundled scenario named {name!r}")
