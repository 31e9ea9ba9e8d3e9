import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from missionbt.bench import mission_files
from missionbt.missionspec import (
    MissionError,
    StandardizedMission,
    TaskClause,
    dump_mission,
    load_mission,
    load_mission_file,
    serialize_mission,
    sim_from_dict,
    standardize,
    validate_spec,
)
from missionbt.orchestrator import Playbook, ScriptedProvider, StageFailure, Transcript


def minimal(**overrides):
    doc = {
        "mission_id": "tiny",
        "raw_text": "Robot 1 visits (1, 1).",
        "standardized": {
            "overview": "one visit",
            "team": [1],
            "tasks": [{"label": "visit", "description": "robot 1 goes to (1, 1)", "finish": "robot 1 at (1, 1)",
                       "robot_ids": [1]}],
            "mission_finish": "robot 1 has arrived",
        },
        "world": {"robots": [{"id": 1, "position": [0, 0], "max_speed": 1.0}]},
    }
    doc.update(overrides)
    return doc


def three_visits():
    tasks = [
        {"label": f"visit_p{k}", "description": f"robot {k} visits P{k}", "finish": f"robot {k} reaches P{k}",
         "robot_ids": [k]}
        for k in (1, 2, 3)
    ]
    return {"overview": "three visits", "team": [1, 2, 3], "tasks": tasks, "mission_finish": "all points visited"}


IDS3 = {"robots": {1, 2, 3}, "objects": set(), "regions": set()}


def test_minimal_mission_loads():
    spec = load_mission(json.dumps(minimal()))
    assert spec.mission_id == "tiny"
    assert len(spec.standardized.tasks) == 1
    assert spec.world.robot(1).max_speed == 1.0


def test_unresolved_region_is_error():
    doc = minimal()
    doc["standardized"]["tasks"][0]["region_ids"] = [9]
    with pytest.raises(MissionError, match="unresolved region id 9"):
        load_mission(doc)


def test_dataset_a1(dataset):
    spec = load_mission_file(dataset / "missions" / "A1.json")
    assert len(spec.world.robots) == 3
    assert len(spec.standardized.tasks) == 1
    assert all(not t.trigger for t in spec.standardized.tasks)


def test_parse_errors_carry_location():
    with pytest.raises(MissionError, match="line 1"):
        load_mission('{"mission_id": ')
    with pytest.raises(MissionError, match="world"):
        load_mission({"mission_id": "x", "raw_text": ""})


def test_sim_block_type_checked():
    with pytest.raises(MissionError):
        sim_from_dict({"dt": "fast"})
    with pytest.raises(MissionError):
        sim_from_dict({"max_ticks": True})
    with pytest.raises(MissionError):
        sim_from_dict({"warp": 1})
    assert sim_from_dict({"dt": 0.05}).dt == 0.05


def test_round_trip_all_dataset_missions(dataset):
    for path in mission_files(dataset):
        spec = load_mission_file(path)
        again = load_mission(serialize_mission(spec))
        assert dump_mission(again) == dump_mission(spec)


@given(
    st.lists(st.integers(0, 20), min_size=1, max_size=4, unique=True),
    st.lists(st.text(min_size=1, max_size=12).filter(str.strip), min_size=1, max_size=4, unique=True),
    st.floats(-50, 50),
)
def test_round_trip_generated(robot_ids, labels, x):
    doc = {
        "mission_id": "gen",
        "raw_text": "generated",
        "standardized": {
            "overview": "gen",
            "team": robot_ids,
            "tasks": [{"label": lab, "description": "d", "finish": "f", "robot_ids": robot_ids[:1]} for lab in labels],
            "mission_finish": "done",
        },
        "world": {"robots": [{"id": i, "position": [x, i], "max_speed": 1.5} for i in robot_ids]},
    }
    spec = load_mission(doc)
    assert dump_mission(load_mission(serialize_mission(spec))) == dump_mission(spec)


def test_validate_spec_examples():
    good = StandardizedMission.from_dict(three_visits())
    assert validate_spec(good, IDS3) == []

    empty_finish = StandardizedMission.from_dict(three_visits())
    empty_finish.tasks[0].finish = ""
    diags = validate_spec(empty_finish, IDS3)
    assert len(diags) == 1
    assert diags[0].field == "tasks[0].finish"
    assert "completion criterion" in diags[0].reason

    stray = StandardizedMission.from_dict(three_visits())
    stray.tasks[1].robot_ids = [99]
    diags = validate_spec(stray, IDS3)
    assert [d.field for d in diags] == ["tasks[1].robot_ids"]
    assert "99" in diags[0].reason


def test_validate_spec_other_rules():
    s = StandardizedMission(overview="", team=[7], tasks=[], mission_finish=" ")
    fields = {d.field for d in validate_spec(s, IDS3)}
    assert fields == {"team", "tasks", "mission_finish"}
    dup = StandardizedMission.from_dict(three_visits())
    dup.tasks.append(TaskClause("visit_p1", "again", "done"))
    assert any("duplicate" in d.reason for d in validate_spec(dup, IDS3))


def provider_for(*responses):
    entries = [{"stage": "standardize", "response": r} for r in responses]
    return ScriptedProvider(Playbook.from_data({"entries": entries}))


def test_standardize_three_tasks():
    raw = "robots 1,2,3 each visit points P1..P3"
    out = standardize(raw, provider_for(three_visits()), IDS3)
    assert [t.label for t in out.tasks] == ["visit_p1", "visit_p2", "visit_p3"]


def test_standardize_idempotent():
    first = standardize("robots 1,2,3 each visit points P1..P3", provider_for(three_visits()), IDS3)
    text = json.dumps(first.to_dict())
    # the scripted provider echoes the standardized form back unchanged
    second = standardize(text, provider_for(text), IDS3)
    assert second == first


def test_standardize_repairs_twice():
    transcript = Transcript()
    out = standardize("raw", provider_for("not json", {"overview": "x"}, three_visits()), IDS3, transcript=transcript)
    assert len(out.tasks) == 3
    assert [r.attempt for r in transcript] == [0, 1, 2]
    assert [r.valid for r in transcript] == [False, False, True]
    assert max(r.attempt for r in transcript) == 2
    # diagnostics from the failed attempt are fed back in the repair prompt
    assert "not valid JSON" in transcript.records[1].prompt


def test_standardize_gives_up_after_two_retries():
    with pytest.raises(StageFailure):
        standardize("raw", provider_for("a", "b", "c", three_visits()), IDS3)


def test_standardize_rejects_invented_ids():
    bad = three_visits()
    bad["tasks"][0]["robot_ids"] = [4]
    bad["team"] = [1, 2, 3, 4]
    transcript = Transcript()
    standardize("raw", provider_for(bad, three_visits()), IDS3, transcript=transcript)
    assert any("unresolved id 4" in d for d in transcript.records[0].diagnostics)


def test_dataset_sim_blocks_are_finite(dataset):
    for path in mission_files(dataset):
        spec = load_mission_file(path)
        assert math.isfinite(spec.sim.dt) and spec.sim.max_ticks > 0
