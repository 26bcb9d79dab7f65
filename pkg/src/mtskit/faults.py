"""Safety and liveness faults, adversarial runs and resilience checkers."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .core import Driver, Run, SchedulerSpec, Step, TransitionSystem, enabled_classes, generate_run
from .encoding import JUNK, Config, sort_states
from .errors import Refusal, StructuralError
from .refine import UNDEF, ImplementationMap, compose
from .report import CheckResult, FAIL, INCONCLUSIVE, PASS, failed, inconclusive, passed


@dataclass(frozen=True)
class SafetyFault:
    """A named set of incorrect transitions of `host`, given by a per-state
    successor function. Successors that happen to be correct are dropped."""

    name: str
    host: TransitionSystem
    fn: Callable[[Any], Iterable]
    agent: Any = None
    spec: dict | None = field(default=None, compare=False, hash=False)

    def successors(self, s: Any) -> list:
        return [t for t in sort_states(self.fn(s)) if not self.host.is_correct(s, t)]


@dataclass(frozen=True)
class LivenessFault:
    """Liveness classes (or every class of the listed agents) that may stop
    being scheduled."""

    classes: frozenset = frozenset()
    agents: frozenset = frozenset()

    def suppresses(self, ts: TransitionSystem, s: Any, t: Any) -> bool:
        return ts.liveness_class(s, t) in self.classes or ts.agent_of(s, t) in self.agents

    def validate(self, ts: TransitionSystem) -> None:
        declared = ts.declared_classes()
        if declared is not None and not set(self.classes) <= set(declared):
            raise StructuralError(f"unknown liveness classes {sorted(map(repr, set(self.classes) - set(declared)))}")
        if ts.agents is not None and not set(self.agents) <= set(ts.agents):
            raise StructuralError(f"unknown agents {sorted(map(repr, set(self.agents) - set(ts.agents)))}")
        everyone = ts.agents is not None and set(self.agents) >= set(ts.agents)
        if everyone or (declared is not None and declared and set(self.classes) >= set(declared)):
            raise Refusal("liveness fault suppresses every class; no live agent remains",
                          witness={"classes": sorted(map(repr, self.classes)), "agents": sorted(map(repr, self.agents))})


@dataclass(frozen=True)
class Fair:
    pass


@dataclass(frozen=True)
class TakeFault:
    """Take a transition of the named fault, optionally filtered by
    match(src, dst, run); the first candidate is used when filtered."""

    name: str
    match: Callable[[Any, Any, Run], bool] | None = None


@dataclass(frozen=True)
class Pick:
    """Take the first correct transition accepted by match(src, dst, label, run)."""

    match: Callable[[Any, Any, Any, Run], bool]
    desc: str = ""


@dataclass
class AdversarySchedule:
    seed: int = 0
    script: dict = field(default_factory=dict)
    #: probability of a random safety fault at unscripted steps
    fault_rate: float = 0.0
    #: liveness faults apply from this step on (from the start when None)
    freeze_from: int | None = None
    fault_budget: int | None = None


def inject_run(
    ts: TransitionSystem,
    faults: Iterable[SafetyFault] = (),
    lf: LivenessFault | None = None,
    adv: AdversarySchedule | None = None,
    horizon: int = 10,
    sched: SchedulerSpec | None = None,
    seed: int | None = None,
    stop: Callable[[Run], bool] | None = None,
) -> Run:
    """A run mixing fair correct steps with adversary-chosen ones.

    With no faults and no liveness fault it equals generate_run(ts, sched,
    horizon, seed). `stop` ends the run early once it returns True.
    """
    adv = adv or AdversarySchedule()
    faults = list(faults)
    by_name = {f.name: f for f in faults}
    driver = Driver(ts, sched, adv.seed if seed is None else seed)
    rng = random.Random(f"adv:{adv.seed}")
    if lf is not None:
        lf.validate(ts)
    run = Run(ts.initial)
    s = ts.initial
    used = 0
    for i in range(horizon):
        frozen = lf is not None and (adv.freeze_from is None or i >= adv.freeze_from)
        allow = (lambda a, b: not lf.suppresses(ts, a, b)) if frozen else None
        action = adv.script.get(i)
        budget_left = adv.fault_budget is None or used < adv.fault_budget
        if action is None and faults and adv.fault_rate > 0 and budget_left:
            if rng.random() < adv.fault_rate:
                action = TakeFault(rng.choice(sorted(by_name)))
        step = None
        if isinstance(action, TakeFault):
            if action.name not in by_name:
                raise StructuralError(f"unknown fault {action.name!r}")
            cands = by_name[action.name].successors(s) if budget_left else []
            if action.match is not None:
                cands = [t for t in cands if action.match(s, t, run)][:1]
            if cands:
                step = Step(s, rng.choice(cands), action.name, None, max(driver.rotation, 0))
                used += 1
            else:
                run.log.append(f"step {i}: fault {action.name} has no successors; skipped")
        elif isinstance(action, Pick):
            cands = [t for t in ts.enabled(s) if (allow is None or allow(s, t))
                     and action.match(s, t, ts.liveness_class(s, t), run)]
            if cands:
                step = Step(s, cands[0], None, ts.liveness_class(s, cands[0]), max(driver.rotation, 0))
            else:
                run.log.append(f"step {i}: no transition matches {action.desc or 'pick'}; fair step instead")
        if step is None:
            step = driver.next_step(s, allow)
            if step is None:
                run.stalled = True
                break
        run.steps.append(step)
        s = step.dst
        if stop is not None and stop(run):
            break
    return run


# fault builders ------------------------------------------------------------


def junk_chain(host: TransitionSystem, agent: Any, name: str | None = None) -> SafetyFault:
    """Single-chain junk: append a junk element stamped with `agent`."""
    return SafetyFault(name or f"junk-{agent}", host, lambda x: [x + ((JUNK, agent),)], agent)


def junk_local(host: TransitionSystem, agent: Any, name: str | None = None) -> SafetyFault:
    """Per-agent junk: `agent` appends a junk element to its own chain."""

    def fn(c: Config) -> list:
        return [c.replace(agent, c[agent] + ((JUNK, agent),))]

    return SafetyFault(name or f"junk-{agent}", host, fn, agent)


def equivocation(host: TransitionSystem, agent: Any, name: str | None = None) -> SafetyFault:
    from .protocols.blocks import equivocation_successors

    return SafetyFault(name or f"equivocate-{agent}", host, equivocation_successors(host, agent), agent)


def forge_chain(host: TransitionSystem, agent: Any, name: str | None = None) -> SafetyFault:
    """`agent` appends another agent's element that nobody holds."""

    def fn(c: Config) -> list:
        x = c[agent]
        return [c.replace(agent, x + ((s, q),)) for s in host.alphabet for q in host.agents if q != agent]

    return SafetyFault(name or f"forge-{agent}", host, fn, agent)


class WithFaults(TransitionSystem):
    """`base` with the given fault transitions admitted as correct."""

    kind = "with-faults"

    def __init__(self, base: TransitionSystem, faults: Iterable[SafetyFault]) -> None:
        self.base = base
        self.faults = list(faults)
        super().__init__(base.initial, name=f"{base.name}+{'+'.join(f.name for f in self.faults)}")
        self.agents = base.agents

    def successors(self, s: Any) -> Iterable:
        out = list(self.base.enabled(s))
        for f in self.faults:
            out.extend(f.successors(s))
        return out

    def liveness_class(self, s: Any, t: Any) -> Any:
        if self.base.is_correct(s, t):
            return self.base.liveness_class(s, t)
        return ("fault", self.agent_of(s, t))

    def agent_of(self, s: Any, t: Any) -> Any:
        return self.base.agent_of(s, t)

    def class_owner(self, label: Any) -> Any:
        if isinstance(label, tuple) and label and label[0] == "fault":
            return label[1]
        return self.base.class_owner(label)


# judging projected runs ----------------------------------------------------


def _diagnose(m: ImplementationMap, s: Any) -> dict:
    fn = m.notes.get("diagnose")
    return fn(s) if fn else {}


def judge(m: ImplementationMap, run: Run, window: int = 1, safety: str = "step") -> dict | None:
    """Return the first violation of σ(run) being safe and live-at-horizon.

    With safety="step" every non-stutter image step must be a correct hi
    transition. With safety="invariant" the image states must satisfy
    m.notes["invariant"], a necessary condition for hi reachability that
    returns a reason string on violation; liveness is then not judged.

    Liveness: a stalled run needs a final image; otherwise every hi class
    enabled at the last image must be activated within the last `window`
    rotations (or steps, for runs without rotation indices).
    """
    xs = []
    for i, s in enumerate(run.states):
        x = m.image(s)
        if x is UNDEF:
            return {"property": "safety", "kind": "undefined", "index": i, **_diagnose(m, s)}
        xs.append(x)
    if safety == "invariant":
        inv = m.notes["invariant"]
        for i, x in enumerate(xs):
            why = inv(x)
            if why is not None:
                return {"property": "safety", "kind": "invariant", "index": i, "reason": why,
                        **_diagnose(m, run.states[i])}
        return None
    if safety != "step":
        raise StructuralError(f"unknown safety mode {safety!r}")
    for i in range(len(run.steps)):
        a, b = xs[i], xs[i + 1]
        if a != b and not m.hi.is_correct(a, b):
            return {"property": "safety", "kind": "incorrect-hi-step", "index": i, "hi": [a, b],
                    **_diagnose(m, run.states[i + 1])}
    live = enabled_classes(m.hi, xs[-1])
    if not live:
        return None
    if run.stalled:
        return {"property": "liveness", "kind": "lo-final-hi-not-final", "classes": sorted(map(repr, live))}
    if not run.steps:
        return None
    last = run.steps[-1].rotation
    if last is None:
        tail = list(range(max(0, len(run.steps) - window), len(run.steps)))
    else:
        tail = [i for i, st in enumerate(run.steps) if st.rotation is not None and st.rotation >= last - window]
    hit = set()
    for i in tail:
        if m.hi.is_correct(xs[i], xs[i + 1]):
            hit.add(m.hi.liveness_class(xs[i], xs[i + 1]))
    missing = [c for c in live if c not in hit]
    if missing:
        return {"property": "liveness", "kind": "not-live-at-horizon", "classes": sorted(map(repr, missing))}
    return None


# witness minimization ------------------------------------------------------


def _local_delta(x: Any, y: Any) -> tuple:
    if isinstance(x, frozenset) and isinstance(y, frozenset) and x <= y:
        return ("add", y - x)
    if isinstance(x, tuple) and isinstance(y, tuple) and y[: len(x)] == x:
        return ("append", y[len(x):])
    return ("set", y)


def _apply_local(d: tuple, x: Any) -> Any:
    kind, v = d
    if kind == "add":
        return x | v if isinstance(x, frozenset) else None
    if kind == "append":
        return x + v if isinstance(x, tuple) else None
    return v


def _delta(s: Any, t: Any) -> tuple:
    if isinstance(s, Config) and isinstance(t, Config) and s.agents == t.agents:
        return ("cfg", tuple((p, _local_delta(s[p], t[p])) for p in s if s[p] != t[p]))
    return ("whole", _local_delta(s, t))


def _apply(d: tuple, s: Any) -> Any:
    kind, body = d
    if kind == "cfg":
        if not isinstance(s, Config):
            return None
        for p, ld in body:
            v = _apply_local(ld, s[p])
            if v is None:
                return None
            s = s.replace(p, v)
        return s
    return _apply_local(body, s)


def replay_deltas(ts: TransitionSystem, run: Run, keep: list, faults: dict) -> Run | None:
    """Re-apply the kept steps' effects; None when a step becomes invalid."""
    out = Run(ts.initial)
    s = ts.initial
    for i in keep:
        st = run.steps[i]
        t = _apply(_delta(st.src, st.dst), s)
        if t is None or t == s:
            return None
        if st.fault is None:
            if not ts.is_correct(s, t):
                return None
        elif st.fault not in faults or t not in faults[st.fault].successors(s):
            return None
        out.steps.append(Step(s, t, st.fault, st.label, st.rotation))
        s = t
    return out


def safety_mode(m: ImplementationMap, safety: str | None = None) -> str:
    return safety or m.notes.get("safety", "step")


def minimize_witness(m: ImplementationMap, run: Run, faults: Iterable[SafetyFault], window: int = 1,
                     safety: str | None = None) -> Run:
    """Greedy step removal keeping a safety violation of σ(run)."""
    by_name = {f.name: f for f in faults}
    safety = safety_mode(m, safety)
    v0 = judge(m, run, window, safety)
    if v0 is None or v0["property"] != "safety":
        return run
    keep = list(range(len(run.steps)))
    # only the prefix up to the violation matters
    cut = v0["index"] + 1 if v0["kind"] == "incorrect-hi-step" else v0["index"]
    keep = keep[:cut]
    best = replay_deltas(m.lo, run, keep, by_name) or run
    changed = True
    while changed:
        changed = False
        for j in reversed(range(len(keep))):
            trial = keep[:j] + keep[j + 1:]
            cand = replay_deltas(m.lo, run, trial, by_name)
            if cand is None:
                continue
            v = judge(m, cand, window, safety)
            if v is not None and v["property"] == "safety":
                keep, best, changed = trial, cand, True
                break
    return best


# resilience checkers -------------------------------------------------------


def _fault_free_premise(m: ImplementationMap, horizon: int, seed: int, window: int,
                        sched: SchedulerSpec | None, trials: int = 3, safety: str = "step") -> dict | None:
    for k in range(trials):
        v = judge(m, generate_run(m.lo, sched, horizon, seed + k), window, safety)
        if v is not None:
            return {"trial_seed": seed + k, **v}
    return None


def check_f_resilience(
    m: ImplementationMap,
    faults: Iterable[SafetyFault],
    horizon: int,
    trials: int,
    seed: int = 0,
    fault_rate: float = 0.25,
    window: int = 1,
    minimize: bool = True,
    adversary: Callable[[int], AdversarySchedule] | None = None,
    sched: SchedulerSpec | None = None,
    name: str = "f_resilience",
    safety: str | None = None,
) -> CheckResult:
    """Faulty fair runs of m.lo must project to safe, live-at-horizon runs."""
    faults = list(faults)
    safety = safety_mode(m, safety)
    bound = {"horizon": horizon, "trials": trials, "seed": seed, "fault_rate": fault_rate, "window": window,
             "safety": safety, "bounded": True}
    info = {"map": m.name, "faults": [f.name for f in faults]}
    bad = _fault_free_premise(m, horizon, seed, window, sched, safety=safety)
    if bad is not None:
        return inconclusive(name, bound, "map is not correct on fault-free runs", premise=bad, **info)
    fault_steps = 0
    for k in range(trials):
        adv = adversary(k) if adversary else AdversarySchedule(seed=seed + k, fault_rate=fault_rate)
        run = inject_run(m.lo, faults, None, adv, horizon, sched, seed + k)
        fault_steps += sum(1 for st in run.steps if st.fault)
        v = judge(m, run, window, safety)
        if v is not None:
            wit = minimize_witness(m, run, faults, window, safety) if minimize else run
            return failed(name, bound, wit, trial_seed=seed + k, violation=v, original_length=len(run),
                          minimized=judge(m, wit, window, safety), **info)
    return passed(name, bound, fault_steps=fault_steps, **info)


def check_liveness_fault_resilience(
    m: ImplementationMap,
    lf: LivenessFault,
    horizon: int,
    trials: int,
    seed: int = 0,
    freeze_max: int | None = None,
    window: int = 1,
    sched: SchedulerSpec | None = None,
) -> CheckResult:
    """Runs whose suppressed classes stop after a random prefix must still
    project to live-at-horizon runs."""
    name = "liveness_fault_resilience"
    lf.validate(m.lo)
    top = freeze_max if freeze_max is not None else horizon // 2
    bound = {"horizon": horizon, "trials": trials, "seed": seed, "freeze_max": top, "window": window,
             "bounded": True}
    rng = random.Random(f"freeze:{seed}")
    for k in range(trials):
        adv = AdversarySchedule(seed=seed + k, freeze_from=rng.randint(0, top))
        run = inject_run(m.lo, [], lf, adv, horizon, sched, seed + k)
        v = judge(m, run, window)
        if v is not None:
            return failed(name, bound, run, trial_seed=seed + k, freeze_from=adv.freeze_from, violation=v,
                          map=m.name)
    return passed(name, bound, map=m.name)


def check_fault_image(m32: ImplementationMap, F3p: Iterable[SafetyFault], F2: Iterable[SafetyFault],
                      horizon: int, trials: int, seed: int = 0, fault_rate: float = 0.25) -> dict:
    """Sample F3' transitions along faulty runs; each must map to a stutter
    or into F2. Raises Refusal with the offending transition otherwise."""
    F3p, F2 = list(F3p), list(F2)
    sampled = 0
    for k in range(trials):
        run = inject_run(m32.lo, F3p, None, AdversarySchedule(seed=seed + k, fault_rate=fault_rate), horizon,
                         seed=seed + k)
        for s in run.states:
            x1 = m32.image(s)
            for f in F3p:
                for t in f.successors(s):
                    sampled += 1
                    x2 = m32.image(t)
                    if x1 is UNDEF or x2 is UNDEF:
                        raise Refusal("fault image undefined", witness={"fault": f.name, "transition": [s, t]})
                    if x1 == x2 or any(x2 in g.successors(x1) for g in F2):
                        continue
                    raise Refusal(f"image of fault {f.name} is outside F2",
                                  witness={"fault": f.name, "transition": [s, t], "image": [x1, x2]})
    return {"sampled": sampled}


def check_resilience_composition(
    m21: ImplementationMap,
    m32: ImplementationMap,
    F2: Iterable[SafetyFault],
    F3: Iterable[SafetyFault],
    F3p: Iterable[SafetyFault],
    horizon: int,
    trials: int,
    seed: int = 0,
    fault_rate: float = 0.25,
) -> CheckResult:
    """Check the three composition cases on sampled runs.

    1. σ32 resilient to F3 implies σ31 resilient to F3.
    2. σ21 resilient to F2 and σ32(F3') ⊆ F2 imply σ31 resilient to F3'.
    3. Both premises imply σ31 resilient to F3 ∪ F3'.

    A case whose premise fails at the bound is reported vacuous. A case
    whose premise holds and conclusion fails is a counterexample.
    """
    name = "resilience_composition"
    F2, F3, F3p = list(F2), list(F3), list(F3p)
    bound = {"horizon": horizon, "trials": trials, "seed": seed, "fault_rate": fault_rate, "bounded": True}
    m31 = compose(m21, m32)
    image = check_fault_image(m32, F3p, F2, horizon, trials, seed, fault_rate)
    kw = dict(horizon=horizon, trials=trials, seed=seed, fault_rate=fault_rate)
    p32 = check_f_resilience(m32, F3, **kw)
    p21 = check_f_resilience(m21, F2, **kw)
    cases = {}

    def case(key: str, premises: list, concl_faults: list) -> None:
        concl = check_f_resilience(m31, concl_faults, **kw)
        if not all(p.passed for p in premises):
            status = "vacuous"
        else:
            status = "pass" if concl.passed else "fail"
        cases[key] = {"status": status, "premises": [p.to_dict() for p in premises], "conclusion": concl.to_dict()}

    case("1", [p32], F3)
    case("2", [p21], F3p)
    case("3", [p32, p21], F3 + F3p)
    counter = [k for k, c in cases.items() if c["status"] == "fail"]
    details = {"cases": {k: c["status"] for k, c in cases.items()}, "fault_image": image, "report": cases,
               "F2": [f.name for f in F2], "F3": [f.name for f in F3], "F3p": [f.name for f in F3p]}
    if counter:
        return failed(name, bound, {"counterexample_cases": counter}, **details)
    return passed(name, bound, **details)


# block dissemination harnesses ----------------------------------------------


def _first_step_of_rotation(run: Run, rotation: int) -> int | None:
    for i, st in enumerate(run.steps):
        if st.rotation is not None and st.rotation >= rotation:
            return i
    return None


def _deadline_state(run: Run, from_step: int, rotations: int) -> tuple:
    """The state after `rotations` full rotations following step `from_step`."""
    tail = run.steps[from_step:]
    if not tail:
        return None, None
    r0 = tail[0].rotation
    idx = _first_step_of_rotation(run, r0 + rotations + 1)
    if idx is None:
        return None, None
    return run.steps[idx].src, idx


def _stop_after(from_step: int, rotations: int) -> Callable[[Run], bool]:
    def stop(run: Run) -> bool:
        if len(run.steps) <= from_step:
            return False
        r0 = run.steps[from_step].rotation
        return run.steps[-1].rotation is not None and run.steps[-1].rotation > r0 + rotations

    return stop


def _knows_pick(agent: Any, kind: str, block: Callable[[Run], Any] | None = None) -> Pick:
    def match(s: Any, t: Any, label: Any, run: Run) -> bool:
        if label[0] != kind or label[1] != agent:
            return False
        return block is None or tuple(label[2]) == tuple(block(run))

    return Pick(match, f"{agent} {kind}")


def check_block_liveness(abd: TransitionSystem, trials: int = 100, seed: int = 0, rotations: int = 3,
                         prefix_max: int = 6, horizon_slack: int = 400) -> CheckResult:
    """A frozen agent's last block, received by one correct agent before the
    freeze, reaches every correct agent within `rotations` full rotations."""
    name = "block_liveness"
    agents = list(abd.agents)
    bound = {"trials": trials, "seed": seed, "rotations": rotations, "agents": agents, "bounded": True}
    if len(agents) < 3:
        raise StructuralError("block liveness harness needs at least 3 agents")
    for k in range(trials):
        rng = random.Random(f"block-liveness:{seed + k}")
        frozen = rng.choice(agents)
        receiver = rng.choice([p for p in agents if p != frozen])
        L = rng.randint(0, prefix_max)
        made = lambda run: run.steps[L].label[2]  # noqa: E731
        script = {L: _knows_pick(frozen, "creates"), L + 1: _knows_pick(receiver, "receives", made)}
        adv = AdversarySchedule(seed=seed + k, script=script, freeze_from=L + 2)
        run = inject_run(abd, [], LivenessFault(agents=frozenset({frozen})), adv, L + 2 + horizon_slack,
                         seed=seed + k, stop=_stop_after(L + 2, rotations))
        if run.log or len(run.steps) < L + 2:
            return failed(name, bound, run, trial_seed=seed + k, reason="script could not be followed", log=run.log)
        b = tuple(run.steps[L].label[2])
        holders = sorted(p for p in agents if b in run.steps[L + 1].dst[p])
        if holders != sorted([frozen, receiver]):
            return failed(name, bound, run, trial_seed=seed + k, reason="setup mismatch", holders=holders)
        state, idx = _deadline_state(run, L + 2, rotations)
        if state is None:
            return inconclusive(name, bound, "run too short to reach the deadline", trial_seed=seed + k)
        missing = [p for p in agents if p != frozen and b not in state[p]]
        if missing:
            return failed(name, bound, run.prefix(idx), trial_seed=seed + k, block=b, missing=missing)
    return passed(name, bound)


def check_equivocation_detection(abd: TransitionSystem, trials: int = 100, seed: int = 0, rotations: int = 3,
                                 prefix_max: int = 6, horizon_slack: int = 400) -> CheckResult:
    """An equivocating pair delivered to two different correct agents ends
    up, within `rotations` full rotations, at every correct agent, and each
    of them detects the equivocator."""
    from .protocols.blocks import detect_equivocators

    name = "equivocation_detection"
    agents = list(abd.agents)
    bound = {"trials": trials, "seed": seed, "rotations": rotations, "agents": agents, "bounded": True}
    if len(agents) < 3:
        raise StructuralError("equivocation harness needs at least 3 agents")
    if len(abd.alphabet) < 1:
        raise StructuralError("equivocation needs a payload")
    for k in range(trials):
        rng = random.Random(f"equivocation:{seed + k}")
        culprit = rng.choice(agents)
        q1, q2 = rng.sample([p for p in agents if p != culprit], 2)
        fault = equivocation(abd, culprit)
        L = rng.randint(0, prefix_max)
        first = lambda run: run.steps[L].label[2]  # noqa: E731

        def second(run: Run, L: int = L) -> Any:
            (b2,) = run.steps[L + 1].dst[culprit] - run.steps[L + 1].src[culprit]
            return b2

        def same_index(s: Any, t: Any, run: Run, L: int = L) -> bool:
            (b2,) = t[culprit] - s[culprit]
            return b2[1] == run.steps[L].label[2][1]

        script = {
            L: _knows_pick(culprit, "creates"),
            L + 1: TakeFault(fault.name, same_index),
            L + 2: _knows_pick(q1, "receives", first),
            L + 3: _knows_pick(q2, "receives", second),
        }
        adv = AdversarySchedule(seed=seed + k, script=script, freeze_from=L + 4)
        run = inject_run(abd, [fault], LivenessFault(agents=frozenset({culprit})), adv, L + 4 + horizon_slack,
                         seed=seed + k, stop=_stop_after(L + 4, rotations))
        if run.log or len(run.steps) < L + 4:
            return failed(name, bound, run, trial_seed=seed + k, reason="script could not be followed", log=run.log)
        pair = {tuple(first(run)), tuple(second(run))}
        state, idx = _deadline_state(run, L + 4, rotations)
        if state is None:
            return inconclusive(name, bound, "run too short to reach the deadline", trial_seed=seed + k)
        for p in agents:
            if p == culprit:
                continue
            if not pair <= {tuple(b) for b in state[p]}:
                return failed(name, bound, run.prefix(idx), trial_seed=seed + k, agent=p, reason="pair not known")
            if culprit not in detect_equivocators(state[p]):
                return failed(name, bound, run.prefix(idx), trial_seed=seed + k, agent=p, reason="not detected")
    return passed(name, bound)
