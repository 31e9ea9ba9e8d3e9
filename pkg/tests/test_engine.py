import json
import math
from dataclasses import replace

import pytest

from missionbt.engine import MissionRun, Reason, load_trace, replay, run_mission
from missionbt.orchestrator import ScriptedProvider
from missionbt.planlang import EvalContext, eval_expr
from missionbt.worldmodel import distance_to_region
from support import MISSION_IDS, mission, playbook, run


def test_a1_completes():
    report, provider = run("A1")
    assert report.success and report.reason is Reason.COMPLETED
    assert report.events[-1].kind == "MissionFinished"
    assert [e.kind for e in report.events].count("ActionFinished") == 1
    assert provider.remaining() == {}


def test_c1_trigger_and_replan():
    report, _ = run("C1")
    assert report.success
    fired = [e for e in report.events if e.kind == "TriggerFired"]
    assert len(fired) == 1 and fired[0].tick == 38
    stages = report.transcript.stages()
    assert "update_dependencies" in stages
    assert stages.count("build_tree") == 2
    finished = [e.node for e in report.events if e.kind == "ActionFinished"]
    assert 2 in finished  # the retreat task added by the trigger


def test_c1_holds_position_during_replan():
    report, _ = run("C1")
    tick = next(e.tick for e in report.events if e.kind == "TriggerFired")
    ticks = {r["tick"]: r for r in report.trace if r.get("kind") == "tick"}
    after = dict((rid, q) for rid, q in ticks[tick + 1]["overrides"])
    # every robot's queue was replaced after the replan, so no stale goal survives
    assert sorted(after) == [1, 2]
    assert after[1][-1][:2] == [3.0, 3.0]


def test_timeout():
    spec = mission("A1")
    report = run_mission(spec, ScriptedProvider(playbook("A1")), replace(spec.sim, max_ticks=5))
    assert not report.success and report.reason is Reason.TIMEOUT
    assert report.ticks == 5
    assert report.events[-1].kind == "Timeout"


def test_success_iff_completed():
    report, _ = run("B3", "fail")
    assert report.reason is Reason.IRREPARABLE and not report.success
    failed = [e for e in report.events if e.kind == "PlanFailed"]
    assert failed and "gen_plan" in failed[0].detail


@pytest.mark.parametrize("mission_id", MISSION_IDS)
def test_run_invariants(mission_id):
    spec = mission(mission_id)
    r = MissionRun(spec, ScriptedProvider(playbook(mission_id)))
    reason, _ = r.execute()
    assert reason is Reason.COMPLETED
    # mission finish holds on the final snapshot
    assert eval_expr(r.mission_finish, r.world, EvalContext(tasks_done=r.tasks_done())) is True
    # generated exactly once
    assert [rec.stage for rec in r.transcript if rec.valid].count("gen_mission_finish") == 1
    # emission order never goes back in time
    assert [e.tick for e in r.events] == sorted(e.tick for e in r.events)
    # no active task belongs to a node that is not Running
    assert all(r.tree.node(idx).status.value == "Running" for idx in r.active)


def test_event_order_in_report():
    report, _ = run("A3")
    keys = [(e.tick, e.node if e.node is not None else math.inf) for e in report.events]
    assert keys == sorted(keys)


def test_runs_are_deterministic():
    a, _ = run("C3")
    b, _ = run("C3")
    assert a.trace_digest == b.trace_digest
    assert a.transcript_digest == b.transcript_digest
    assert a.to_dict(include_wall_time=False) == b.to_dict(include_wall_time=False)


def test_replay_untouched_trace(tmp_path):
    report, _ = run("B1")
    paths = report.write(tmp_path)
    verdict = replay(paths["trace"], report.trace_digest)
    assert verdict.match and verdict.digest == report.trace_digest
    assert verdict.ticks == report.ticks
    saved = json.loads(paths["report"].read_text())
    assert saved["trace_digest"] == report.trace_digest and saved["success"]


def test_replay_edited_position(tmp_path):
    report, _ = run("A2")
    trace = load_trace(report.write(tmp_path)["trace"])
    trace[12]["robots"][0][1] += 0.01
    verdict = replay(trace)
    assert not verdict.match
    assert verdict.first_divergent_tick == trace[12]["tick"]


def test_replay_changed_dt(tmp_path):
    report, _ = run("A2")
    trace = load_trace(report.write(tmp_path)["trace"])
    trace[0]["sim"]["dt"] = 0.05
    verdict = replay(trace)
    assert not verdict.match and verdict.first_divergent_tick == 1


def test_replay_garbage():
    assert not replay([]).match
    assert not replay([{"kind": "header", "world": {}, "sim": {"dt": -1}}]).match


def test_replay_wrong_expected_digest():
    report, _ = run("A1")
    verdict = replay(report.trace, "0" * 64)
    assert not verdict.match and verdict.first_divergent_tick is None


def test_seed_override_changes_noisy_run():
    spec = mission("C3")
    base = run_mission(spec, ScriptedProvider(playbook("C3")))
    other = run_mission(spec, ScriptedProvider(playbook("C3")), replace(spec.sim, seed=spec.sim.seed + 1))
    assert base.trace_digest != other.trace_digest
    assert replay(other.trace).match


def test_trigger_tick_matches_geometry():
    report, _ = run("C1")
    tick = next(e.tick for e in report.events if e.kind == "TriggerFired")
    ticks = {r["tick"]: r for r in report.trace if r.get("kind") == "tick"}
    spec = mission("C1")
    zone = spec.world.region(0)
    from missionbt.worldmodel import Vec2

    def robot1(rec):
        _, x, y = next(r for r in rec["robots"] if r[0] == 1)
        return Vec2(x, y)

    assert distance_to_region(robot1(ticks[tick]), zone) < 1.0
    assert distance_to_region(robot1(ticks[tick - 1]), zone) >= 1.0
