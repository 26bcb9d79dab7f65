from __future__ import annotations

import json
from pathlib import Path

import pytest

from mtskit.cli import main
from mtskit.errors import StructuralError
from mtskit.scenario import Scenario, bundled_scenarios, run_scenario
from mtskit.trace import TraceError, read_trace, replay

SMALL = """\
schema: 1
name: small
seed: 1
systems:
  SC:  {kind: SC, alphabet: [0, 1]}
  LCC: {kind: LCC, agents: [a, b, c], alphabet: [0]}
faults:
  junk-a: {kind: junk_local, host: LCC, agent: a}
checks:
  - {id: sc-mono, check: monotonic, system: SC, order: prefix, depth: 3}
simulate:
  - {id: sc-run, system: SC, horizon: 5}
  - {id: lcc-junk, system: LCC, horizon: 12, faults: [junk-a], fault_rate: 0.5}
"""


def _write(tmp_path: Path, text: str, name: str = "s.yaml") -> str:
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def _report(out: Path) -> list:
    return [json.loads(ln) for ln in (out / "report.jsonl").read_text().splitlines()]


def test_small_scenario_exit_0_and_report(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["check", "--scenario", _write(tmp_path, SMALL), "--out", str(out)]) == 0
    lines = _report(out)
    assert lines[0]["type"] == "header" and "generated" in lines[0]
    assert all("generated" not in ln for ln in lines[1:])
    assert lines[-1] == {"type": "summary", "exit": 0, "counts": {"ok": 3}}
    assert (out / "traces" / "sc-run.run.jsonl").exists()
    assert "ok  sc-mono" in capsys.readouterr().out


def test_reruns_match_except_header(tmp_path):
    path = _write(tmp_path, SMALL)
    for d in ("x", "y"):
        assert main(["check", "--scenario", path, "--out", str(tmp_path / d), "--quiet"]) == 0
    x = (tmp_path / "x" / "report.jsonl").read_text().splitlines()[1:]
    y = (tmp_path / "y" / "report.jsonl").read_text().splitlines()[1:]
    assert x == y
    for t in ("sc-run.run.jsonl", "lcc-junk.run.jsonl"):
        assert (tmp_path / "x" / "traces" / t).read_bytes() == (tmp_path / "y" / "traces" / t).read_bytes()


def test_seed_override_changes_runs(tmp_path):
    path = _write(tmp_path, SMALL)
    main(["simulate", "--scenario", path, "--out", str(tmp_path / "x"), "--quiet"])
    main(["simulate", "--scenario", path, "--seed", "99", "--out", str(tmp_path / "y"), "--quiet"])
    a = (tmp_path / "x" / "traces" / "lcc-junk.run.jsonl").read_text()
    b = (tmp_path / "y" / "traces" / "lcc-junk.run.jsonl").read_text()
    assert a != b


def test_unmet_expectation_exit_1(tmp_path):
    text = SMALL.replace("check: monotonic, system: SC, order: prefix, depth: 3",
                         "check: asynchronous, system: LCC, order: pointwise-prefix, depth: 2")
    assert main(["check", "--scenario", _write(tmp_path, text), "--quiet"]) == 1


def test_inconclusive_only_exit_2(tmp_path):
    text = """\
schema: 1
name: inc
families:
  independent: {kind: counters, bound: 2}
checks:
  - {id: no-witness, check: grassroots, family: independent, P1: [a], P2: [b], depth: 2}
"""
    assert main(["grassroots", "--scenario", _write(tmp_path, text), "--quiet"]) == 2


@pytest.mark.parametrize("mutation, needle", [
    (("kind: SC,", "kind: SX,"), "systems.SC"),
    (("alphabet: [0, 1]}", "alphabet: [0, 1], colour: red}"), "colour"),
    (("system: SC, order", "system: NOPE, order"), "NOPE"),
    (("schema: 1", "schema: 7"), "schema"),
    (("check: monotonic", "check: frobnicate"), "check"),
    (("depth: 3}", "depth: 0}"), "depth"),
])
def test_structural_errors_exit_3(tmp_path, capsys, mutation, needle):
    text = SMALL.replace(*mutation)
    assert text != SMALL
    assert main(["check", "--scenario", _write(tmp_path, text), "--quiet"]) == 3
    assert needle in capsys.readouterr().err


def test_unreferenced_bad_declaration_exit_3(tmp_path, capsys):
    text = SMALL.replace("faults:\n", "  spare: {kind: SX}\nfaults:\n")
    assert main(["check", "--scenario", _write(tmp_path, text), "--quiet"]) == 3
    assert "systems.spare" in capsys.readouterr().err
    text = SMALL + "families:\n  odd: {kind: ABD, alphabet: [0], colour: red}\n"
    assert main(["check", "--scenario", _write(tmp_path, text), "--quiet"]) == 3


def test_bad_yaml_and_flags_exit_3(tmp_path):
    assert main(["check", "--scenario", _write(tmp_path, "schema: [1,"), "--quiet"]) == 3
    assert main(["check", "--scenario", _write(tmp_path, SMALL), "--depth", "0"]) == 3
    assert main(["check", "--scenario", "no-such-scenario"]) == 3


def test_scenario_name_resolution_is_structural():
    with pytest.raises(StructuralError, match="maps.m"):
        Scenario({"schema": 1, "maps": {"m": {"builtin": "sigma1", "lo": "X", "hi": "Y"}},
                  "checks": [{"check": "locally_safe", "map": "m", "depth": 1}]}).map("m", "checks[0].map")


def _sim_trace(tmp_path: Path) -> Path:
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", _write(tmp_path, SMALL), "--out", str(out), "--quiet"]) == 0
    return out / "traces" / "lcc-junk.run.jsonl"


def test_replay_round_trip(tmp_path, capsys):
    trace = _sim_trace(tmp_path)
    assert replay(trace).passed
    assert main(["replay", str(trace)]) == 0
    assert '"status":"pass"' in capsys.readouterr().out


def test_flipped_fault_mark_fails_at_that_step(tmp_path):
    trace = _sim_trace(tmp_path)
    lines = trace.read_text().splitlines()
    k = next(i for i, ln in enumerate(lines[1:], 1) if json.loads(ln)["fault"] is not None)
    step = json.loads(lines[k])
    step["fault"] = None
    lines[k] = json.dumps(step)
    trace.write_text("\n".join(lines) + "\n")
    res = replay(trace)
    assert res.status == "fail" and res.witness["step"] == step["i"]
    assert main(["replay", str(trace)]) == 1


def test_marking_a_correct_step_as_fault_fails(tmp_path):
    trace = _sim_trace(tmp_path)
    lines = trace.read_text().splitlines()
    k = next(i for i, ln in enumerate(lines[1:], 1) if json.loads(ln)["fault"] is None)
    step = json.loads(lines[k])
    step["fault"] = "junk-a"
    lines[k] = json.dumps(step)
    trace.write_text("\n".join(lines) + "\n")
    assert replay(trace).witness["step"] == step["i"]


def test_replay_under_smaller_bounds_reports_mismatch(tmp_path):
    out = tmp_path / "out"
    main(["simulate", "--scenario", _write(tmp_path, SMALL), "--out", str(out), "--quiet"])
    trace = out / "traces" / "sc-run.run.jsonl"
    assert replay(trace).passed
    res = replay(trace, {"alphabet": [0]})
    assert res.status == "fail"
    assert main(["replay", str(trace), "--params", '{"max_len": 2}']) == 1


def test_malformed_trace_lines_name_the_line(tmp_path, capsys):
    trace = _sim_trace(tmp_path)
    lines = trace.read_text().splitlines()
    lines[3] = "{not json"
    trace.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceError) as e:
        read_trace(trace)
    assert e.value.line == 4
    assert main(["replay", str(trace)]) == 3
    assert "line 4" in capsys.readouterr().err
    lines[3] = json.dumps({"i": 2, "src": None})
    trace.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceError, match="line 4"):
        read_trace(trace)


def test_replay_params_must_be_an_object(tmp_path):
    trace = _sim_trace(tmp_path)
    assert main(["replay", str(trace), "--params", "[1]"]) == 3
    assert main(["replay", str(trace), "--params", "{"]) == 3


def test_expected_failure_writes_witness_trace(tmp_path):
    out = tmp_path / "lcc"
    assert main(["grassroots", "--scenario", "lcc_not_grassroots", "--out", str(out), "--quiet"]) == 0
    traces = sorted((out / "traces").glob("lcc-subsidiarity.*.jsonl"))
    assert traces
    for t in traces:
        assert replay(t).passed
    header, steps = read_trace(next(t for t in traces if "joint" in t.name))
    assert header["incorrect_step"] == len(steps) - 1


def test_category_filter(tmp_path):
    sc = Scenario({"schema": 1, "name": "f", "systems": {"SC": {"kind": "SC", "alphabet": [0]}},
                   "checks": [{"id": "m", "check": "monotonic", "system": "SC", "order": "prefix", "depth": 2}]})
    rep = run_scenario(sc, None, category="faults", timestamp="t")
    assert [ln["type"] for ln in rep.lines] == ["header", "summary"]


def test_list_bundled(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in bundled_scenarios():
        assert name in out
