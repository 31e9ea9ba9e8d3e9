"""Acceptance gate. Each test checks one criterion at its stated tolerance and
records a one-line verdict, printed at the end of the session."""

from __future__ import annotations

import json
import math
import random
import re
import time
from fractions import Fraction

import httpx
import yaml

import test_btree
from conftest import ACCEPTANCE
from generators import (
    PRECEDENCE,
    ExprGen,
    brute_force,
    crossing_pairs,
    general_position,
    random_points,
    random_sim_world,
    tick_violations,
    walk_violations,
)
from missionbt.behaviors import allocate_min_conflict
from missionbt.bench import BenchmarkResult, MissionResult, dataset_root
from missionbt.engine import Reason, run_mission
from missionbt.orchestrator import LiveProvider, Transcript, account
from missionbt.orchestrator.stages import load_prompt
from missionbt.planlang import PlanError, eval_expr, parse_execution, parse_expr, sample_parametric, to_source
from missionbt.sim import SimConfig, step
from support import MISSION_IDS, mission, playbook, run
from test_orchestrator import FIXTURES
from test_planlang import world as dsl_world


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_assignment_matches_brute_force():
    rng = random.Random(101)
    worst, elapsed = 0.0, 0.0
    for _ in range(1000):
        n = rng.randint(2, 7)
        pts = random_points(rng, 2 * n)
        positions = dict(enumerate(pts[:n]))
        t0 = time.perf_counter()
        got = allocate_min_conflict(positions, pts[n:])
        elapsed += time.perf_counter() - t0
        worst = max(worst, abs(got.cost - brute_force(positions, pts[n:])))
    record(1, worst <= 1e-9 and elapsed < 10.0,
           f"1000 instances, max |dcost| {worst:.2e}, allocator time {elapsed:.2f} s")


def test_criterion_02_optimal_segments_do_not_cross():
    rng = random.Random(202)
    checked = violations = 0
    while checked < 1000:
        n = rng.randint(2, 6)
        pts = random_points(rng, 2 * n)
        if not general_position(pts):
            continue
        positions = dict(enumerate(pts[:n]))
        violations += len(crossing_pairs(positions, pts[n:], allocate_min_conflict(positions, pts[n:])))
        checked += 1
    record(2, violations == 0, f"{checked} general-position instances, {violations} crossing pairs")


def test_criterion_03_dsl():
    rng = random.Random(303)
    broken = 0
    for _ in range(1000):
        e = ExprGen(rng).cond() if rng.random() < 0.5 else ExprGen(rng).num()
        once = parse_expr(to_source(e))
        if once != e or parse_expr(to_source(once)) != once:
            broken += 1

    plan = parse_execution(
        "parametric(robot=1, x=0.1*t*cos(t), y=0.1*t*sin(t), t_start=0, t_end=2*pi, samples=5, speed=1)"
    )
    last = sample_parametric(plan.tracks[0])[-1].position
    tau = 2 * math.pi
    spiral_err = max(abs(last.x - 0.1 * tau * math.cos(tau)), abs(last.y - 0.1 * tau * math.sin(tau)))

    w = dsl_world()
    wrong = []
    for text, value in PRECEDENCE:
        if value is None:
            try:
                parse_expr(text)
                wrong.append(text)
            except PlanError:
                pass
        elif eval_expr(parse_expr(text), w) != value:
            wrong.append(text)
    ok = broken == 0 and spiral_err <= 1e-9 and not wrong
    record(3, ok, f"round-trip failures {broken}/1000, spiral error {spiral_err:.1e}, "
                  f"precedence mismatches {wrong or 'none'} of {len(PRECEDENCE)}")


def test_criterion_04_behavior_tree_semantics():
    examples = [getattr(test_btree, name) for name in dir(test_btree)
                if name.startswith("test_") and name != "test_random_walks_hold_invariants"]
    for fn in examples:
        fn()
    t0 = time.perf_counter()
    violations: list[str] = []
    for seed in range(10_000):
        violations += walk_violations(random.Random(seed))
    elapsed = time.perf_counter() - t0
    record(4, not violations,
           f"{len(examples)} example groups ok, 10000 random trees walked in {elapsed:.1f} s, "
           f"{len(violations)} violations{': ' + violations[0] if violations else ''}")


def test_criterion_05_simulator():
    violations: list[str] = []
    ticks = 0
    for seed in range(400):
        rng = random.Random(seed)
        cfg = SimConfig(dt=rng.choice([0.05, 0.1, 0.2]), object_noise=rng.choice([0.0, 0.1]))
        w = random_sim_world(rng)
        for _ in range(25):
            nxt = step(w, cfg).world
            violations += tick_violations(w, nxt, cfg)
            w = nxt
            ticks += 1
    a, _ = run("C3")
    b, _ = run("C3")
    same = a.trace_digest == b.trace_digest
    record(5, not violations and same,
           f"{ticks} random ticks, {len(violations)} violations; C3 digests "
           f"{'identical' if same else 'differ'} ({a.trace_digest[:12]})")


def test_criterion_06_end_to_end_offline():
    problems = []
    slowest = 0.0
    for mid in MISSION_IDS:
        report, _ = run(mid)
        slowest = max(slowest, report.wall_time)
        if not report.success or report.wall_time >= 10.0:
            problems.append(f"{mid}: {report.reason.value} in {report.wall_time:.2f} s")
    fail_errors = {}
    for mid in MISSION_IDS:
        expect = playbook(mid, "fail").expect
        report, _ = run(mid, "fail")
        fail_errors[mid] = report.usage.errors
        want = Reason.COMPLETED if expect == "completed" else Reason.IRREPARABLE
        if report.usage.errors < 1 or report.reason is not want:
            problems.append(f"{mid}.fail: {report.reason.value}, errors {report.usage.errors}, expected {expect}")
    record(6, not problems,
           f"correct path 9/9 success (slowest {slowest:.2f} s); failure injection errors {fail_errors}"
           if not problems else "; ".join(problems))


def test_criterion_07_ablation_without_template():
    problems = []
    for mid in MISSION_IDS:
        report, provider = run(mid, "raw")
        stages = report.transcript.stages()
        if not report.success or "standardize" in stages or provider.calls.get("standardize"):
            problems.append(f"{mid}: {report.reason.value}, stages {sorted(set(stages))}")
    record(7, not problems, "9/9 raw-text runs succeed without a standardize stage" if not problems
           else "; ".join(problems))


def test_criterion_08_accounting():
    want = yaml.safe_load((FIXTURES / "expected_accounting.yaml").read_text())
    mismatches = []
    for name, exp in want.items():
        got = account(Transcript.load(FIXTURES / name), price_in=2e-6, price_out=8e-6)
        if (got.input_tokens, got.output_tokens, got.errors, got.calls, got.tokens_per_error) != (
                exp["input_tokens"], exp["output_tokens"], exp["errors"], exp["calls"], exp["tokens_per_error"]):
            mismatches.append(name)
        if got.cost != exp["cost_at_2e-6_8e-6"] and abs(got.cost - exp["cost_at_2e-6_8e-6"]) > 1e-12:
            mismatches.append(f"{name} cost")
        # tokens per error divides output tokens only
        if got.errors and got.tokens_per_error != got.output_tokens / got.errors:
            mismatches.append(f"{name} tokens/error")
    clean = MissionResult("A1", "A", 1, 1, 100.0, 20.0, 0.0, 0, None, ["Completed"])
    table = BenchmarkResult(1, {"with_template": [clean]}).render()
    a_line = next(line for line in table.splitlines() if line.startswith("A "))
    dash = a_line.split()[-1] == "-"
    record(8, not mismatches and dash,
           f"fixtures {sorted(want)} exact, zero-error row renders {a_line.split()[-1]!r}"
           if not mismatches else f"mismatches {mismatches}")


def stage_signatures() -> dict[str, str]:
    """First prompt line of each stage. A fake endpoint uses it to tell stages apart."""
    names = ("standardize", "extract_tasks", "update_dependencies", "build_tree", "select_ready",
             "gen_plan", "gen_mission_finish")
    sigs = {name: load_prompt(name).template.lstrip().split("\n", 1)[0].split("$", 1)[0] for name in names}
    assert len(set(sigs.values())) == len(sigs)
    return sigs


def fake_endpoint(mission_id: str, variant: str, sigs: dict[str, str]) -> tuple[httpx.MockTransport, list[str]]:
    queues: dict[str, list[str]] = {}
    for stage, response in playbook(mission_id, variant).entries:
        queues.setdefault(stage, []).append(response)
    served: list[str] = []

    def handler(request: httpx.Request) -> httpx.Response:
        prompt = json.loads(request.content)["messages"][-1]["content"]
        stage = next(s for s, sig in sigs.items() if prompt.lstrip().startswith(sig))
        served.append(stage)
        text = queues[stage].pop(0)
        return httpx.Response(200, json={
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": len(prompt) // 4, "completion_tokens": len(text) // 4},
        })

    return httpx.MockTransport(handler), served


def test_criterion_09_live_mode_plumbing():
    """Hosted-model numbers cannot be reproduced offline. What is checked here is
    that the live provider path runs every mission end to end over HTTP, and that
    the documented live-mode expectation (success with template >= without, per
    category) is computed the same way the bench does."""
    sigs = stage_signatures()
    success: dict[tuple[str, bool], list[bool]] = {}
    problems = []
    for mid in MISSION_IDS:
        spec = mission(mid)
        for template in (True, False):
            transport, served = fake_endpoint(mid, "" if template else "raw", sigs)
            provider = LiveProvider("http://fake.test/v1", "offline", "k", transport=transport)
            report = run_mission(spec, provider, use_template=template)
            success.setdefault((spec.category, template), []).append(report.success)
            if served != report.transcript.stages():
                problems.append(f"{mid}: served {len(served)} calls, transcript has {len(report.transcript.records)}")
            if report.usage.input_tokens <= 0:
                problems.append(f"{mid}: no usage reported")
    ordering = all(
        sum(success[(c, True)]) >= sum(success[(c, False)]) for c in {c for c, _ in success}
    )
    total = sum(sum(v) for v in success.values())
    record(9, not problems and ordering,
           f"live provider over mock HTTP: {total}/18 runs succeed, template >= no-template per category; "
           "hosted-model success and token figures are not reproducible offline"
           if not problems else "; ".join(problems))


def _seg_dist2(p: tuple[Fraction, Fraction], a, b) -> Fraction:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy)
    t = min(Fraction(1), max(Fraction(0), t))
    cx, cy = ax + t * dx - p[0], ay + t * dy - p[1]
    return cx * cx + cy * cy


def expected_trigger_tick() -> int:
    """Straight-line kinematics in exact arithmetic, from the raw mission and playbook files."""
    root = dataset_root()
    data = json.loads((root / "missions" / "C1.json").read_text())
    robot = next(r for r in data["world"]["robots"] if r["id"] == 1)
    zone = next(r for r in data["world"]["regions"] if r["id"] == 0)
    dt = Fraction(str(data["sim"].get("dt", 0.1)))
    entries = yaml.safe_load((root / "playbooks" / "C1.yaml").read_text())["entries"]
    plan = next(e["response"] for e in entries
                if e["stage"] == "gen_plan" and "robot(1)" in e["response"]["trigger"])
    gx, gy = (Fraction(v) for v in re.search(r"points=\[\(([-\d.]+),\s*([-\d.]+)\)\]", plan["execution"]).groups())
    threshold = Fraction(re.search(r"<\s*([\d.]+)", plan["trigger"]).group(1))
    speed = min(Fraction(str(robot["max_speed"])),
                Fraction(re.search(r"speed=([\d.]+)", plan["execution"]).group(1)))
    sx, sy = (Fraction(v) for v in robot["position"])
    poly = [tuple(Fraction(c) for c in v) for v in zone["polygon"]]
    edges = list(zip(poly, poly[1:] + poly[:1]))
    length2 = (gx - sx) ** 2 + (gy - sy) ** 2
    for k in range(1, 10_000):
        s = speed * dt * k  # distance travelled; never reaches the goal before firing here
        assert s * s < length2
        # exact position needs sqrt(length2); this mission's path is axis-aligned
        assert gy == sy
        p = (sx + s * (1 if gx > sx else -1), sy)
        if min(_seg_dist2(p, a, b) for a, b in edges) < threshold * threshold:
            return k
    raise AssertionError("trigger never fires")


def test_criterion_10_trigger_timing():
    want = expected_trigger_tick()
    report, _ = run("C1")
    fired = [e.tick for e in report.events if e.kind == "TriggerFired"]
    record(10, fired == [want], f"oracle tick {want}, engine TriggerFired at {fired}")
