"""Implementation maps between transition systems and their checkers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .core import (
    Run,
    SchedulerSpec,
    Step,
    SubsetSystem,
    TransitionSystem,
    enabled_classes,
    explore,
    generate_run,
    path_search,
    transitions_within,
)
from .errors import BudgetExceeded, MappingUndefined, Refusal, StructuralError
from .order import PartialOrder
from .report import CheckResult, failed, inconclusive, passed

UNDEF = object()


@dataclass(eq=False)
class ImplementationMap:
    """A partial state map σ from `lo` states to `hi` states.

    `sigma` raises MappingUndefined where it has no value. Results are
    memoized, so sigma must be pure.
    """

    lo: TransitionSystem
    hi: TransitionSystem
    sigma: Callable[[Any], Any]
    name: str = "sigma"
    representative: Callable[[Any], Any] | None = None
    lo_order: PartialOrder | None = None
    hi_order: PartialOrder | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._memo: dict = {}
        img = self.image(self.lo.initial)
        if img is UNDEF or img != self.hi.initial:
            raise StructuralError(
                f"{self.name} must map the initial state of {self.lo.name} to that of {self.hi.name}"
            )

    def __call__(self, s: Any) -> Any:
        hit = self._memo.get(s, UNDEF)
        if hit is UNDEF:
            try:
                hit = self.sigma(s)
            except MappingUndefined as e:
                hit = e
            self._memo[s] = hit
        if isinstance(hit, MappingUndefined):
            raise hit
        return hit

    def image(self, s: Any) -> Any:
        """σ(s), or UNDEF."""
        try:
            return self(s)
        except MappingUndefined:
            return UNDEF

    def __repr__(self) -> str:
        return f"ImplementationMap({self.name}: {self.lo.name} -> {self.hi.name})"


def identity_map(ts: TransitionSystem, order: PartialOrder | None = None) -> ImplementationMap:
    return ImplementationMap(ts, ts, lambda s: s, "id", lambda x: x, order, order)


def project_run(m: ImplementationMap, r: Run) -> Run:
    """Map a lo run through σ, dropping stutter steps."""
    r.check_contiguous()
    cur = m(r.start)
    out = Run(cur)
    for st in r.steps:
        x = m(st.dst)
        if x == cur:
            continue
        label = m.hi.liveness_class(cur, x) if m.hi.is_correct(cur, x) else None
        out.steps.append(Step(cur, x, st.fault, label, st.rotation))
        cur = x
    return out


def _bound(**kw: Any) -> dict:
    return {**kw, "bounded": True}


class _Reach:
    """Cached reachability queries in one system."""

    def __init__(self, ts: TransitionSystem, order: PartialOrder | None, known: dict | None, max_steps: int | None):
        self.ts = ts
        self.within = order.leq if order is not None else None
        self.known = known or {}
        self.max_steps = max_steps
        self._from_init: dict = {}
        self._pairs: dict = {}

    def reachable(self, x: Any) -> bool:
        if x in self.known:
            return True
        hit = self._from_init.get(x)
        if hit is None:
            hit = path_search(self.ts, self.ts.initial, x, within=self.within, max_steps=self.max_steps) is not None
            self._from_init[x] = hit
        return hit

    def path(self, a: Any, b: Any) -> bool:
        if a == b or self.ts.is_correct(a, b):
            return True
        key = (a, b)
        hit = self._pairs.get(key)
        if hit is None:
            hit = path_search(self.ts, a, b, within=self.within, max_steps=self.max_steps) is not None
            self._pairs[key] = hit
        return hit


def check_locally_safe(m: ImplementationMap, depth: int, search_depth: int | None = None) -> CheckResult:
    """Every reachable lo step maps to a hi path between reachable hi states."""
    name = "locally_safe"
    bound = _bound(depth=depth)
    sd = search_depth if search_depth is not None else 2 * depth + 2
    try:
        levels = explore(m.lo, depth)
        hi_known = explore(m.hi, depth)
        reach = _Reach(m.hi, m.hi_order, hi_known, sd)
        stutters = steps = 0
        for y1, y2 in transitions_within(m.lo, depth, levels):
            x1, x2 = m.image(y1), m.image(y2)
            for y, x in ((y1, x1), (y2, x2)):
                if x is UNDEF:
                    return failed(name, bound, {"transition": [y1, y2], "undefined_at": y}, map=m.name)
            if not reach.reachable(x1):
                return failed(name, bound, {"transition": [y1, y2], "image": [x1, x2],
                                            "reason": "image of source not reachable"}, map=m.name)
            steps += 1
            if x1 == x2:
                stutters += 1
                continue
            if not reach.path(x1, x2):
                return failed(name, bound, {"transition": [y1, y2], "image": [x1, x2],
                                            "reason": "no correct hi path"}, map=m.name)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    return passed(name, bound, map=m.name, transitions=steps, stutters=stutters)


def _windows(run: Run, width: int) -> list:
    """Step-index windows of `width` complete rotations (or steps, when the
    run carries no rotation indices)."""
    if not run.steps:
        return []
    if run.steps[0].rotation is None:
        n = len(run.steps)
        return [list(range(i, i + width)) for i in range(0, n - width + 1, width)]
    by_rot: dict = {}
    for i, st in enumerate(run.steps):
        by_rot.setdefault(st.rotation, []).append(i)
    rots = sorted(by_rot)
    if not run.stalled:
        rots = rots[:-1]
    out = []
    for k in range(0, len(rots) - width + 1, width):
        idx = [i for r in rots[k:k + width] for i in by_rot[r]]
        out.append(idx)
    return out


def activated_classes(m: ImplementationMap, xs: list, idx: list) -> set:
    """hi classes of correct hi pairs realized by the given lo steps.

    A realized hi self-loop counts even though projection drops it.
    """
    out = set()
    for i in idx:
        a, b = xs[i], xs[i + 1]
        if m.hi.is_correct(a, b):
            out.add(m.hi.liveness_class(a, b))
    return out


def productivity_violation(m: ImplementationMap, run: Run, window: int = 1) -> dict | None:
    """First place where the image of `run` fails windowed activation."""
    xs = []
    for i, s in enumerate(run.states):
        x = m.image(s)
        if x is UNDEF:
            return {"kind": "undefined", "state_index": i}
        xs.append(x)
    for w in _windows(run, window):
        end = xs[w[-1] + 1]
        live = enabled_classes(m.hi, end)
        hit = activated_classes(m, xs, w)
        for label in live:
            if label not in hit:
                return {"kind": "not-activated", "window": [w[0], w[-1]], "class": label}
    if run.stalled:
        live = enabled_classes(m.hi, xs[-1])
        if live:
            return {"kind": "lo-final-hi-not-final", "classes": sorted(map(repr, live))}
    return None


def check_productive(
    m: ImplementationMap,
    horizon: int,
    trials: int,
    seed: int = 0,
    window: int = 1,
    sched: SchedulerSpec | None = None,
) -> CheckResult:
    """Sampled fair lo runs: each hi class is activated in every window or
    is no longer enabled at the window's end."""
    name = "productive"
    bound = _bound(horizon=horizon, trials=trials, window=window, seed=seed)
    if horizon < 1:
        raise StructuralError("horizon must be >= 1")
    for k in range(trials):
        run = generate_run(m.lo, sched, horizon, seed + k)
        v = productivity_violation(m, run, window)
        if v is not None:
            return failed(name, bound, run, map=m.name, trial_seed=seed + k, **v)
    return passed(name, bound, map=m.name)


def _lo_witness(m: ImplementationMap, x: Any, lo_reach: _Reach) -> Any:
    y = m.representative(x)
    if m.image(y) != x:
        raise Refusal("representative does not map back", witness=[x, y])
    if not lo_reach.reachable(y):
        raise Refusal("representative not reachable", witness=[x, y])
    return y


def check_locally_complete(m: ImplementationMap, depth: int, lo_depth: int | None = None,
                           search_depth: int | None = None) -> CheckResult:
    """Every reachable hi step x1 → x2 is realized by reachable lo states
    y1 →* y2 with σ(y1) = x1 and σ(y2) = x2."""
    name = "locally_complete"
    bound = _bound(depth=depth)
    try:
        hi_levels = explore(m.hi, depth)
        if m.representative is not None:
            sd = search_depth if search_depth is not None else (None if m.lo_order else 3 * depth + 3)
            reach = _Reach(m.lo, m.lo_order, None, sd)
            for x1, x2 in transitions_within(m.hi, depth, hi_levels):
                try:
                    y1 = _lo_witness(m, x1, reach)
                    y2 = m.representative(x2)
                except Refusal as e:
                    return failed(name, bound, {"transition": [x1, x2], "reason": str(e), "detail": e.witness},
                                  map=m.name)
                if m.image(y2) != x2 or not reach.path(y1, y2):
                    return failed(name, bound, {"transition": [x1, x2], "lo": [y1, y2],
                                                "reason": "representatives not joined"}, map=m.name)
            return passed(name, bound, map=m.name, via="representative")
        lo_levels = explore(m.lo, lo_depth if lo_depth is not None else depth)
        inv: dict = {}
        for y in lo_levels:
            x = m.image(y)
            if x is not UNDEF:
                inv.setdefault(x, []).append(y)
        reach_cache: dict = {}

        def reach_from(y: Any) -> set:
            hit = reach_cache.get(y)
            if hit is None:
                hit = {y}
                queue = deque([y])
                while queue:
                    s = queue.popleft()
                    for t in m.lo.enabled(s):
                        if t in lo_levels and t not in hit:
                            hit.add(t)
                            queue.append(t)
                reach_cache[y] = hit
            return hit

        for x1, x2 in transitions_within(m.hi, depth, hi_levels):
            targets = set(inv.get(x2, ()))
            if not any(reach_from(y1) & targets for y1 in inv.get(x1, ())):
                return failed(name, bound, {"transition": [x1, x2], "reason": "no lo realization found"},
                              map=m.name)
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    return passed(name, bound, map=m.name, via="inverse-image")


def check_order_preserving(m: ImplementationMap, po_hi: PartialOrder, po_lo: PartialOrder, depth: int,
                           search_depth: int | None = None) -> CheckResult:
    """Up and Down conditions on the depth-bounded reachable states."""
    from .order import check_monotonic

    name = "order_preserving"
    bound = _bound(depth=depth)
    for ts, po in ((m.lo, po_lo), (m.hi, po_hi)):
        mono = check_monotonic(ts, po, depth)
        if not mono.passed:
            return CheckResult(name, mono.status, bound, mono.witness,
                               {"reason": f"{ts.name} not monotonic wrt {po.name}", "map": m.name})
    try:
        lo_states = list(explore(m.lo, depth))
        hi_states = list(explore(m.hi, depth))
        imgs = {}
        for y in lo_states:
            x = m.image(y)
            if x is UNDEF:
                return failed(name, bound, {"undefined_at": y}, map=m.name, condition="up")
            imgs[y] = x
        up_pairs = 0
        for y1 in lo_states:
            for y2 in lo_states:
                if y1 != y2 and po_lo.leq(y1, y2):
                    up_pairs += 1
                    if not po_hi.leq(imgs[y1], imgs[y2]):
                        return failed(name, bound, {"pair": [y1, y2], "image": [imgs[y1], imgs[y2]]},
                                      map=m.name, condition="up")
        down_pairs = 0
        if m.representative is not None:
            sd = search_depth if search_depth is not None else (None if po_lo else 3 * depth + 3)
            reach = _Reach(m.lo, po_lo, dict.fromkeys(lo_states, 0), sd)
            for x1 in hi_states:
                for x2 in hi_states:
                    if not po_hi.leq(x1, x2):
                        continue
                    down_pairs += 1
                    try:
                        y1 = _lo_witness(m, x1, reach)
                        y2 = m.representative(x2)
                    except Refusal as e:
                        return failed(name, bound, {"pair": [x1, x2], "reason": str(e)}, map=m.name,
                                      condition="down")
                    if m.image(y2) != x2 or not po_lo.leq(y1, y2):
                        return failed(name, bound, {"pair": [x1, x2], "lo": [y1, y2]}, map=m.name,
                                      condition="down")
        else:
            inv: dict = {}
            for y, x in imgs.items():
                inv.setdefault(x, []).append(y)
            for x1 in hi_states:
                for x2 in hi_states:
                    if not po_hi.leq(x1, x2):
                        continue
                    down_pairs += 1
                    if not any(po_lo.leq(y1, y2) for y1 in inv.get(x1, ()) for y2 in inv.get(x2, ())):
                        return failed(name, bound, {"pair": [x1, x2], "reason": "no ordered lo witnesses"},
                                      map=m.name, condition="down")
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    return passed(name, bound, map=m.name, up_pairs=up_pairs, down_pairs=down_pairs)


def compose(m21: ImplementationMap, m32: ImplementationMap) -> ImplementationMap:
    """σ31 = σ21 ∘ σ32, for m32: 3 → 2 and m21: 2 → 1."""
    if m32.hi is not m21.lo and m32.hi.key != m21.lo.key:
        raise StructuralError(f"cannot compose: {m32.name} lands in {m32.hi.name}, {m21.name} starts at {m21.lo.name}")

    def sigma(s: Any) -> Any:
        return m21(m32(s))

    rep = None
    if m21.representative is not None and m32.representative is not None:
        r21, r32 = m21.representative, m32.representative

        def rep(x: Any) -> Any:
            return r32(r21(x))

    return ImplementationMap(m32.lo, m21.hi, sigma, f"{m21.name}∘{m32.name}", rep, m32.lo_order, m21.hi_order)


def restrict_to_subset(
    m: ImplementationMap,
    hi_filter: Callable[[Any], bool],
    *,
    hi: TransitionSystem | None = None,
    depth: int = 4,
    strict: bool = True,
    name: str | None = None,
) -> ImplementationMap:
    """Restrict σ to the lo states whose image passes `hi_filter`.

    The strict closure check asks that every correct lo step leaving a
    reachable restricted state keeps the image inside the filter; with
    strict=False only the induced subset transitions are checked, which
    holds by construction. The verdict is kept in notes["closure"].
    """
    hi_sub = hi if hi is not None else SubsetSystem(m.hi, hi_filter)

    def lo_pred(y: Any) -> bool:
        x = m.image(y)
        return x is not UNDEF and hi_filter(x)

    lo_sub = SubsetSystem(m.lo, lo_pred, name=f"{m.lo.name}|{hi_sub.name}")
    bound = _bound(depth=depth, strict=strict)
    levels = explore(lo_sub, depth)
    for y1, lvl in levels.items():
        if lvl >= depth:
            continue
        for y2 in (m.lo.enabled(y1) if strict else lo_sub.enabled(y1)):
            if not lo_pred(y2):
                raise Refusal("closure premise fails", witness={"transition": [y1, y2], "image": [m.image(y1), m.image(y2)]})
    if m.representative is not None:
        rep = m.representative
    else:
        rep = None
    out = ImplementationMap(lo_sub, hi_sub, m.sigma, name or f"{m.name}|{hi_sub.name}", rep, m.lo_order, m.hi_order)
    out.notes["closure"] = passed("restrict_closure", bound, map=m.name)
    return out


def check_complete_on_runs(m: ImplementationMap, depth: int, max_stutter: int | None = None) -> CheckResult:
    """Every correct hi run of at most `depth` steps is the projection of
    some correct lo run."""
    name = "complete_on_runs"
    ms = max_stutter if max_stutter is not None else 2
    bound = _bound(depth=depth, max_stutter=ms)

    def closure(ys: set, x: Any) -> frozenset:
        seen = set(ys)
        layer = list(ys)
        for _ in range(ms):
            nxt = []
            for y in layer:
                for t in m.lo.enabled(y):
                    if t not in seen and m.image(t) == x:
                        seen.add(t)
                        nxt.append(t)
            layer = nxt
            if not layer:
                break
        return frozenset(seen)

    try:
        start = closure({m.lo.initial}, m.hi.initial)
        stack = [((m.hi.initial,), start)]
        runs = 0
        while stack:
            path, frontier = stack.pop()
            runs += 1
            if len(path) - 1 >= depth:
                continue
            x = path[-1]
            for x2 in reversed(m.hi.enabled(x)):
                nxt = {t for y in frontier for t in m.lo.enabled(y) if m.image(t) == x2}
                if not nxt:
                    return failed(name, bound, Run.from_states(path + (x2,)), map=m.name)
                stack.append((path + (x2,), closure(nxt, x2)))
    except BudgetExceeded as e:
        return inconclusive(name, bound, str(e), explored=e.count)
    return passed(name, bound, map=m.name, hi_runs=runs)


def check_subset(sub: TransitionSystem, sup: TransitionSystem, depth: int) -> CheckResult:
    """Same initial state, and every reachable `sub` step is correct in `sup`."""
    name = "subset"
    bound = _bound(depth=depth)
    if sub.initial != sup.initial:
        return failed(name, bound, {"initial": [sub.initial, sup.initial]})
    for s, t in transitions_within(sub, depth):
        if not sup.is_correct(s, t):
            return failed(name, bound, {"transition": [s, t]})
    return passed(name, bound)


def check_representatives(m: ImplementationMap, hi_states: Iterable, lo_depth: int | None = None) -> CheckResult:
    """σ(σ̂(x)) = x for every listed hi state; with lo_depth, σ̂(x) must also
    be reachable within that many lo steps."""
    name = "representatives"
    if m.representative is None:
        raise StructuralError(f"map {m.name} has no representative function")
    xs = list(hi_states)
    bound = _bound(states=len(xs), lo_depth=lo_depth)
    reach = set(explore(m.lo, lo_depth)) if lo_depth is not None else None
    for x in xs:
        try:
            y = m.representative(x)
        except (Refusal, MappingUndefined) as e:
            return failed(name, bound, {"hi": x, "reason": str(e)}, map=m.name)
        img = m.image(y)
        if img != x:
            return failed(name, bound, {"hi": x, "representative": y, "image": img}, map=m.name)
        if reach is not None and y not in reach:
            return failed(name, bound, {"hi": x, "representative": y, "reason": "representative not reachable"},
                          map=m.name)
    return passed(name, bound, map=m.name)
