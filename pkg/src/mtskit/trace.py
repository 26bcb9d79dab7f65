"""Line-delimited run traces and their replay."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .core import TransitionSystem
from .encoding import _dumps, decode, encode
from .errors import StructuralError
from .report import CheckResult, failed, passed

FORMAT = 1


class TraceError(StructuralError):
    """A trace file that cannot be parsed; `line` is 1-based."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def _label(ts: TransitionSystem, s: Any, t: Any) -> Any:
    return encode(ts.liveness_class(s, t))


def trace_lines(ts: TransitionSystem, run, faults: Iterable = (), extra: dict | None = None) -> list:
    spec = getattr(ts, "spec", None)
    if spec is None:
        raise StructuralError(f"system {ts.name} was not built from a spec and cannot be traced")
    header = {"type": "trace", "format": FORMAT, "system": spec,
              "faults": [f.spec for f in faults if getattr(f, "spec", None) is not None],
              "start": encode(run.start)}
    if extra:
        header.update(extra)
    out = [_dumps(header)]
    for i, st in enumerate(run.steps):
        labelled = st.fault is None and ts.is_correct(st.src, st.dst)
        out.append(_dumps({"i": i, "src": encode(st.src), "dst": encode(st.dst),
                           "class": _label(ts, st.src, st.dst) if labelled else None,
                           "fault": st.fault, "rot": st.rotation}))
    return out


def write_trace(path: str | Path, ts: TransitionSystem, run, faults: Iterable = (), extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(trace_lines(ts, run, faults, extra)) + "\n", encoding="utf-8")
    return path


def read_trace(path: str | Path) -> tuple:
    """Parse a trace into (header, steps); raises TraceError on bad lines."""
    header = None
    steps = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceError(f"not valid JSON ({e.msg})", n) from None
            if not isinstance(obj, dict):
                raise TraceError("expected an object", n)
            if header is None:
                if obj.get("type") != "trace" or "system" not in obj:
                    raise TraceError("first line must be a trace header", n)
                if obj.get("format") != FORMAT:
                    raise TraceError(f"unsupported trace format {obj.get('format')!r}", n)
                header = obj
                continue
            missing = [k for k in ("i", "src", "dst", "class", "fault", "rot") if k not in obj]
            if missing:
                raise TraceError(f"step lacks field '{missing[0]}'", n)
            if obj["i"] != len(steps):
                raise TraceError(f"step index {obj['i']!r}, expected {len(steps)}", n)
            if obj["fault"] is not None and not isinstance(obj["fault"], str):
                raise TraceError("fault mark must be a name or null", n)
            try:
                obj["_src"], obj["_dst"] = decode(obj["src"]), decode(obj["dst"])
            except (ValueError, TypeError) as e:
                raise TraceError(f"undecodable state ({e})", n) from None
            obj["_line"] = n
            steps.append(obj)
    if header is None:
        raise TraceError("empty trace", 1)
    return header, steps


def replay(path: str | Path, overrides: dict | None = None) -> CheckResult:
    """Rebuild the traced system (optionally with changed parameters) and
    re-validate every step and fault mark."""
    from .build import build_fault, build_system

    header, steps = read_trace(path)
    spec = dict(header["system"])
    if overrides:
        spec.update(overrides)
    ts = build_system(spec, "trace.system")
    faults = {}
    for j, fs in enumerate(header.get("faults", [])):
        f = build_fault(fs, ts, f"trace.faults[{j}]")
        faults[f.name] = f
    bound = {"trace": str(path), "steps": len(steps), "overrides": overrides or {}}
    cur = decode(header["start"]) if "start" in header else ts.initial
    if cur != ts.initial:
        return failed("replay", bound, {"step": None, "reason": "trace does not start at the initial state"})
    claimed = header.get("incorrect_step")
    if claimed is not None and claimed != len(steps) - 1:
        return failed("replay", bound, {"step": claimed, "reason": "claimed incorrect step is not the last step"})
    for st in steps:
        i, src, dst = st["i"], st["_src"], st["_dst"]
        where = {"step": i, "line": st["_line"]}
        if src != cur:
            return failed("replay", bound, {**where, "reason": "step does not continue the previous one"})
        mark = st["fault"]
        if i == claimed:
            # a counterexample trace: its last step must be rejected
            if mark is not None or ts.is_correct(src, dst):
                return failed("replay", bound, {**where, "reason": "claimed incorrect step is correct"})
        elif mark is None:
            if not ts.is_correct(src, dst):
                return failed("replay", bound, {**where, "reason": "step marked correct is not a correct transition"})
            if st["class"] != _label(ts, src, dst):
                return failed("replay", bound, {**where, "reason": "liveness class does not match"})
        else:
            f = faults.get(mark)
            if f is None:
                return failed("replay", bound, {**where, "reason": f"unknown fault {mark!r}"})
            if dst not in f.successors(src):
                return failed("replay", bound, {**where, "reason": f"step is not a {mark} transition"})
        cur = dst
    return passed("replay", bound, system=ts.kind, incorrect_step=claimed)
