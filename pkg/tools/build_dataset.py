"""Regenerate the shipped dataset: mission files and scripted playbooks.

Each mission below is authored once (world, raw text, template sections and
the scripted answers of a correct run). From that the script writes

    dataset/missions/<id>.json        mission file
    dataset/playbooks/<id>.yaml       correct path, template mode
    dataset/playbooks/<id>.raw.yaml   correct path, raw-text mode (no standardize entry)
    dataset/playbooks/<id>.fail.yaml  failure injection, annotated with the expected outcome

Run from the repository root:  python tools/build_dataset.py
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parents[1] / "src" / "missionbt" / "dataset"


# -- authoring helpers --------------------------------------------------------

def robot(rid, x, y, v=1.0):
    return {"id": rid, "position": [x, y], "max_speed": v}


def task(label, description, finish, robots, *, constraints=(), trigger="", hints=(), objects=(), regions=()):
    return {
        "label": label,
        "description": description,
        "constraints": list(constraints),
        "trigger": trigger,
        "finish": finish,
        "hints": list(hints),
        "robot_ids": list(robots),
        "object_ids": list(objects),
        "region_ids": list(regions),
    }


def action(idx, t, action_type, points=()):
    return {
        "idx": idx,
        "node_type": "Action",
        "task_name": t["label"],
        "status": "Idle",
        "constraints": t["constraints"],
        "trigger_condition": t["trigger"],
        "finish_condition": t["finish"],
        "hints": t["hints"],
        "children": [],
        "action_type": action_type,
        "robot_ids": t["robot_ids"],
        "object_ids": t["object_ids"],
        "region_ids": t["region_ids"],
        "points": [list(p) for p in points],
    }


def composite(kind, idx, name, children, finish="all children succeeded"):
    return {
        "idx": idx,
        "node_type": kind,
        "task_name": name,
        "status": "Idle",
        "constraints": [],
        "trigger_condition": "",
        "finish_condition": finish,
        "hints": [],
        "children": children,
    }


def plan(execution, finish, trigger=""):
    return {"execution": execution, "trigger": trigger, "finish": finish}


MISSIONS: list[dict] = []


def mission(**kw):
    MISSIONS.append(kw)


# -- Category A: straightforward ordering, no triggers ------------------------

t_visit = task(
    "visit_three_points",
    "Robots 1, 2 and 3 each visit one of the points (4, 0), (4, 1) and (4, 2), choosing assignments that keep paths from crossing.",
    "every one of the three points has a robot within 0.1 m",
    [1, 2, 3],
    hints=["use conflict-minimizing allocation"],
)
mission(
    mission_id="A1",
    category="A",
    archetype="visit predefined points",
    raw_text=(
        "Three robots (1, 2, 3) start on the left. Send them to visit the points (4, 0), (4, 1) and (4, 2), "
        "one point each, without their paths crossing."
    ),
    world={"robots": [robot(1, 0, 2), robot(2, 0, 0), robot(3, 0, 1)], "objects": [], "regions": []},
    sim={"max_ticks": 2000},
    standardized={
        "overview": "Three robots visit three fixed points, one each.",
        "team": [1, 2, 3],
        "objects": [],
        "regions": [],
        "tasks": [t_visit],
        "mission_finish": "all three points have been visited",
        "hints": [],
    },
    edges=[],
    tree=composite("Sequence", 0, "mission", [
        action(1, t_visit, "visit_points", [(4, 0), (4, 1), (4, 2)]),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2, 3], points=[(4, 0), (4, 1), (4, 2)], allocation=min_conflict)",
            "any(robots in [1, 2, 3], dist(robot(i), point(4, 0)) < 0.1) and "
            "any(robots in [1, 2, 3], dist(robot(i), point(4, 1)) < 0.1) and "
            "any(robots in [1, 2, 3], dist(robot(i), point(4, 2)) < 0.1)",
        )),
    ],
    failure={
        "kind": "prepend",
        "stage": "build_tree",
        "note": "first tree gives an Action node a child; the repair prompt carries the validator diagnostic",
        "expect": "completed",
        "responses": [composite("Sequence", 0, "mission", [
            {**action(1, t_visit, "visit_points", [(4, 0), (4, 1), (4, 2)]),
             "children": [action(2, t_visit, "visit_points", [(4, 0)]), action(3, t_visit, "visit_points", [(4, 1)])]},
        ])],
    },
)

CIRCLE4 = "all(robots in [1, 2, 3, 4], min(min(dist(robot(i), point(3, 3)), dist(robot(i), point(1.5, 4.5))), " \
          "min(dist(robot(i), point(0, 3)), dist(robot(i), point(1.5, 1.5)))) < 0.1)"
t_line = task(
    "form_line",
    "Robots 1-4 form a line from (0, 3) to (3, 3) with equal spacing.",
    "every slot of the line holds a robot within 0.1 m",
    [1, 2, 3, 4],
)
t_circle = task(
    "form_circle",
    "Robots 1-4 form a circle of radius 1.5 m centered at (1.5, 3).",
    "every robot is within 0.1 m of a circle slot",
    [1, 2, 3, 4],
)
mission(
    mission_id="A2",
    category="A",
    archetype="formation sequence: line then circle",
    raw_text=(
        "Four robots (1-4) wait along the x axis. First line them up evenly between (0, 3) and (3, 3). "
        "After the line is formed, rearrange them into a circle of radius 1.5 m around (1.5, 3)."
    ),
    world={"robots": [robot(1, 0, 0), robot(2, 1, 0), robot(3, 2, 0), robot(4, 3, 0)], "objects": [], "regions": []},
    sim={"max_ticks": 2000},
    standardized={
        "overview": "Four robots form a line and then a circle.",
        "team": [1, 2, 3, 4],
        "objects": [],
        "regions": [],
        "tasks": [t_line, t_circle],
        "mission_finish": "the circle is formed after the line",
        "hints": ["minimize crossing paths when switching formations"],
    },
    edges=[["form_line", "form_circle"]],
    tree=composite("Sequence", 0, "line then circle", [
        action(1, t_line, "visit_points", [(0, 3), (1, 3), (2, 3), (3, 3)]),
        action(2, t_circle, "visit_points"),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2, 3, 4], line=((0, 3), (3, 3), 4), allocation=min_conflict)",
            "all(robots in [1, 2, 3, 4], abs(y(robot(i)) - 3) < 0.1) and "
            "any(robots in [1, 2, 3, 4], dist(robot(i), point(0, 3)) < 0.1) and "
            "any(robots in [1, 2, 3, 4], dist(robot(i), point(3, 3)) < 0.1)",
        )),
        ("select_ready", [2]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2, 3, 4], circle=((1.5, 3), 1.5, 4, 0), allocation=min_conflict)",
            CIRCLE4,
        )),
    ],
    failure={
        "kind": "prepend",
        "stage": "extract_tasks",
        "note": "first analysis has a dependency cycle; the DAG check rejects it and the retry succeeds",
        "expect": "completed",
        "responses": [{"tasks": [t_line, t_circle], "edges": [["form_line", "form_circle"], ["form_circle", "form_line"]]}],
    },
)

t_west = task("survey_west", "Robots 1 and 2 visit (-3, 3) and (-3, -3).", "both west points visited", [1, 2])
t_east = task("survey_east", "Robots 3 and 4 visit (3, 3) and (3, -3).", "both east points visited", [3, 4])
t_gather = task(
    "gather",
    "All four robots gather on a line from (-1.5, 0) to (1.5, 0) while avoiding the rock (region 0).",
    "every gather slot holds a robot within 0.1 m",
    [1, 2, 3, 4],
    constraints=["never enter region 0"],
    regions=[0],
)
GATHER = " and ".join(
    f"any(robots in [1, 2, 3, 4], dist(robot(i), point({x}, 0)) < 0.1)" for x in ("-1.5", "-0.5", "0.5", "1.5")
)
mission(
    mission_id="A3",
    category="A",
    archetype="parallel team survey, then gather",
    raw_text=(
        "Split the team: robots 1 and 2 survey the west points (-3, 3) and (-3, -3) while robots 3 and 4 survey "
        "the east points (3, 3) and (3, -3). Once both surveys are done, all four gather on a line from "
        "(-1.5, 0) to (1.5, 0). Keep clear of the rock (region 0)."
    ),
    world={
        "robots": [robot(1, -1, 1), robot(2, -1, -1), robot(3, 1, 1), robot(4, 1, -1)],
        "objects": [],
        "regions": [{"id": 0, "name": "rock", "kind": "forbidden", "circle": {"center": [2.2, 1.5], "radius": 0.4}}],
    },
    sim={"max_ticks": 3000},
    standardized={
        "overview": "Two pairs survey in parallel, then the whole team gathers on a line.",
        "team": [1, 2, 3, 4],
        "objects": [],
        "regions": [0],
        "tasks": [t_west, t_east, t_gather],
        "mission_finish": "all tasks complete",
        "hints": [],
    },
    edges=[["survey_west", "gather"], ["survey_east", "gather"]],
    tree=composite("Sequence", 0, "mission", [
        composite("Parallel", 1, "surveys", [
            action(2, t_west, "visit_points", [(-3, 3), (-3, -3)]),
            action(3, t_east, "visit_points", [(3, 3), (3, -3)]),
        ]),
        action(4, t_gather, "visit_points"),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [2, 3]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2], points=[(-3, 3), (-3, -3)], allocation=min_conflict)",
            "any(robots in [1, 2], dist(robot(i), point(-3, 3)) < 0.1) and "
            "any(robots in [1, 2], dist(robot(i), point(-3, -3)) < 0.1)",
        )),
        ("gen_plan", plan(
            "visit_points(robots=[3, 4], points=[(3, 3), (3, -3)], allocation=min_conflict, avoid=[0])",
            "any(robots in [3, 4], dist(robot(i), point(3, 3)) < 0.1) and "
            "any(robots in [3, 4], dist(robot(i), point(3, -3)) < 0.1)",
        )),
        ("select_ready", [4]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2, 3, 4], line=((-1.5, 0), (1.5, 0), 4), allocation=min_conflict, avoid=[0])",
            GATHER,
        )),
    ],
    failure={
        "kind": "replace",
        "stage": "select_ready",
        "occurrence": 0,
        "note": "the gather node is proposed before its sequence predecessor has finished, twice; "
                "the structural ready set is used instead",
        "expect": "completed",
        "responses": [[2, 3, 4], [2, 4]],
    },
)


# -- Category B: explicit trajectories -----------------------------------------

t_spiral = task(
    "spiral_out",
    "Robot 1 flies an outward Archimedean spiral r = 0.2 t for t from 0 to 4 pi around the origin.",
    "robot 1 reaches the spiral end point (0.8 pi, 0)",
    [1],
    constraints=["speed at most 0.8 m/s"],
)
t_spiral2 = task(
    "inspect_center",
    "Robot 2 visits the spiral center (0, 0) after robot 1 has finished.",
    "robot 2 within 0.1 m of the origin",
    [2],
)
mission(
    mission_id="B1",
    category="B",
    archetype="spiral trajectory",
    raw_text=(
        "Robot 1 should sweep outward from the origin along a spiral whose radius grows 0.2 m per radian, two full "
        "turns, at no more than 0.8 m/s. Afterwards robot 2 inspects the center point."
    ),
    world={"robots": [robot(1, 0, 0), robot(2, -2, -2)], "objects": [], "regions": []},
    sim={"max_ticks": 3000},
    standardized={
        "overview": "A two-turn spiral sweep by robot 1, followed by robot 2 visiting the center.",
        "team": [1, 2],
        "objects": [],
        "regions": [],
        "tasks": [t_spiral, t_spiral2],
        "mission_finish": "both tasks complete",
        "hints": ["the spiral is not a formation; describe it as a parametric path"],
    },
    edges=[["spiral_out", "inspect_center"]],
    tree=composite("Sequence", 0, "mission", [
        action(1, t_spiral, "visit_points"),
        action(2, t_spiral2, "visit_points", [(0, 0)]),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            "parametric(robot=1, x=0.2 * t * cos(t), y=0.2 * t * sin(t), t_start=0, t_end=4 * pi, samples=81, speed=0.8)",
            "dist(robot(1), point(0.8 * pi, 0)) < 0.1",
        )),
        ("select_ready", [2]),
        ("gen_plan", plan("visit_points(robots=[2], points=[(0, 0)])", "dist(robot(2), point(0, 0)) < 0.1")),
    ],
    failure={
        "kind": "prepend",
        "stage": "gen_plan",
        "note": "first spiral plan has an unbalanced parenthesis; the parse diagnostic drives the repair",
        "expect": "completed",
        "responses": [plan(
            "parametric(robot=1, x=0.2 * t * cos(t, y=0.2 * t * sin(t), t_start=0, t_end=4 * pi, samples=81, speed=0.8)",
            "dist(robot(1), point(0.8 * pi, 0)) < 0.1",
        )],
    },
)

ZZ1 = [(1, 1), (2, 0), (3, 1), (4, 0), (5, 1), (6, 0)]
ZZ2 = [(1, -1), (2, -2), (3, -1), (4, -2), (5, -1), (6, -2)]


def pts(ps):
    return "[" + ", ".join(f"({x}, {y})" for x, y in ps) + "]"


t_zig = task(
    "zigzag",
    "Robots 1 and 2 follow parallel zigzag paths eastward to x = 6 with 1 m amplitude.",
    "robot 1 at (6, 0) and robot 2 at (6, -2), each within 0.1 m",
    [1, 2],
    constraints=["speed at most 0.8 m/s"],
)
t_back = task(
    "return_start",
    "Robots 1 and 2 return to the start positions (0, 0) and (0, -2).",
    "both start positions occupied within 0.1 m",
    [1, 2],
)
mission(
    mission_id="B2",
    category="B",
    archetype="zigzag trajectories",
    raw_text=(
        "Robots 1 and 2 patrol eastward in zigzags of 1 m amplitude and 1 m period until x = 6, robot 1 along "
        "y = 0..1 and robot 2 along y = -2..-1, at most 0.8 m/s. Then both come back to where they started."
    ),
    world={"robots": [robot(1, 0, 0), robot(2, 0, -2)], "objects": [], "regions": []},
    sim={"max_ticks": 3000},
    standardized={
        "overview": "Two robots zigzag east side by side and then return.",
        "team": [1, 2],
        "objects": [],
        "regions": [],
        "tasks": [t_zig, t_back],
        "mission_finish": "both tasks complete",
        "hints": [],
    },
    edges=[["zigzag", "return_start"]],
    tree=composite("Sequence", 0, "mission", [
        action(1, t_zig, "visit_points"),
        action(2, t_back, "visit_points", [(0, 0), (0, -2)]),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            f"waypoints(robot=1, points={pts(ZZ1)}, speed=0.8); waypoints(robot=2, points={pts(ZZ2)}, speed=0.8)",
            "dist(robot(1), point(6, 0)) < 0.1 and dist(robot(2), point(6, -2)) < 0.1",
        )),
        ("select_ready", [2]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2], points=[(0, 0), (0, -2)])",
            "dist(robot(1), point(0, 0)) < 0.1 and dist(robot(2), point(0, -2)) < 0.1",
        )),
    ],
    failure={
        "kind": "prepend",
        "stage": "gen_mission_finish",
        "note": "first mission finish applies coverage() to a robot; the type checker rejects it",
        "expect": "completed",
        "responses": ["coverage(robot(1)) >= 1"],
    },
)

t_eight = task(
    "figure_eight",
    "Robot 1 flies one figure-eight x = 1.5 cos t, y = 0.75 sin 2t, returning to (1.5, 0).",
    "robot 1 back at (1.5, 0) after at least 5 s",
    [1],
)
t_follow = task(
    "escort",
    "Robot 2 keeps 1.5 m west of object 0 for 5 seconds.",
    "5 seconds have elapsed",
    [2],
    objects=[0],
)
mission(
    mission_id="B3",
    category="B",
    archetype="figure-eight trajectory with a concurrent escort",
    raw_text=(
        "Robot 1 traces a figure-eight (1.5 m wide, 0.75 m tall lobes) starting and ending at (1.5, 0). "
        "At the same time robot 2 escorts object 0, staying 1.5 m to its west, for five seconds."
    ),
    world={
        "robots": [robot(1, 1.5, 0), robot(2, -4, 3)],
        "objects": [{"id": 0, "position": [-3, 3], "v_max": 0.0, "flee_radius": 1.0, "flee_gain": 1.0}],
        "regions": [],
    },
    sim={"max_ticks": 3000},
    standardized={
        "overview": "A figure-eight flight and a timed escort, running concurrently.",
        "team": [1, 2],
        "objects": [0],
        "regions": [],
        "tasks": [t_eight, t_follow],
        "mission_finish": "both tasks complete",
        "hints": [],
    },
    edges=[],
    tree=composite("Parallel", 0, "mission", [
        action(1, t_eight, "visit_points"),
        action(2, t_follow, "follow_targets"),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1, 2]),
        ("gen_plan", plan(
            "parametric(robot=1, x=1.5 * cos(t), y=0.75 * sin(2 * t), t_start=0, t_end=2 * pi, samples=65, speed=1.0)",
            "elapsed() > 5 and dist(robot(1), point(1.5, 0)) < 0.1",
        )),
        ("gen_plan", plan(
            "follow_targets(robots=[2], objects=[0], offset=(-1.5, 0))",
            "elapsed() >= 5",
        )),
    ],
    failure={
        "kind": "replace",
        "stage": "gen_plan",
        "occurrence": 0,
        "note": "the figure-eight plan keeps referencing an undeclared robot; after three rejected answers the "
                "node fails and the mission cannot complete",
        "expect": "irreparable",
        "responses": [
            plan("parametric(robot=7, x=1.5 * cos(t), y=0.75 * sin(2 * t), t_start=0, t_end=2 * pi, samples=65, "
                 "speed=1.0)", "elapsed() > 5 and dist(robot(7), point(1.5, 0)) < 0.1"),
        ] * 3,
    },
)


# -- Category C: triggers, coverage, herding -----------------------------------

t_adv = task(
    "advance_east",
    "Robot 1 drives east toward (8, 0) at 0.8 m/s.",
    "robot 1 within 0.1 m of (8, 0)",
    [1],
    trigger="robot 1 comes within 1 m of the forbidden zone (region 0)",
    regions=[0],
)
t_south = task("scout_south", "Robot 2 scouts the point (0, -3).", "robot 2 within 0.1 m of (0, -3)", [2])
t_north = task(
    "retreat_north",
    "Robot 1 abandons the eastward drive and moves to the lookout (3, 3).",
    "robot 1 within 0.1 m of (3, 3)",
    [1],
)
mission(
    mission_id="C1",
    category="C",
    archetype="forbidden-region proximity trigger (1 m)",
    raw_text=(
        "Robot 1 heads east from the origin toward (8, 0) at 0.8 m/s. A forbidden zone (region 0) lies in the way; "
        "if robot 1 gets within 1 meter of it, it must stop that task and go to the lookout at (3, 3) instead. "
        "Meanwhile robot 2 scouts (0, -3)."
    ),
    world={
        "robots": [robot(1, 0, 0, 0.8), robot(2, 0, -1)],
        "objects": [],
        "regions": [{"id": 0, "name": "no-go", "kind": "forbidden", "polygon": [[4, -1], [6, -1], [6, 1], [4, 1]]}],
    },
    sim={"max_ticks": 2000},
    standardized={
        "overview": "Robot 1 advances east but switches to a lookout task near the forbidden zone; robot 2 scouts south.",
        "team": [1, 2],
        "objects": [],
        "regions": [0],
        "tasks": [t_adv, t_south, t_north],
        "mission_finish": "robot 2 has scouted and robot 1 reached either (8, 0) or the lookout",
        "hints": ["retreat_north is only activated by the trigger of advance_east"],
    },
    extract_tasks=[t_adv, t_south],
    edges=[],
    tree=composite("Parallel", 0, "mission", [
        action(1, t_adv, "visit_points", [(8, 0)]),
        action(2, t_south, "visit_points", [(0, -3)]),
    ]),
    mission_finish="mission_tasks_done()",
    steps=[
        ("select_ready", [1, 2]),
        ("gen_plan", plan(
            "visit_points(robots=[1], points=[(8, 0)], speed=0.8)",
            "dist(robot(1), point(8, 0)) < 0.1",
            trigger="dist(robot(1), region(0)) < 1.0",
        )),
        ("gen_plan", plan("visit_points(robots=[2], points=[(0, -3)])", "dist(robot(2), point(0, -3)) < 0.1")),
        ("update_dependencies", {"new_tasks": [t_north], "edges": []}),
        ("build_tree", composite("Parallel", 0, "mission after trigger", [
            action(1, t_south, "visit_points", [(0, -3)]),
            action(2, t_north, "visit_points", [(3, 3)]),
        ])),
        ("select_ready", [2]),
        ("gen_plan", plan("visit_points(robots=[1], points=[(3, 3)])", "dist(robot(1), point(3, 3)) < 0.1")),
    ],
    failure={
        "kind": "prepend",
        "stage": "update_dependencies",
        "note": "first update keeps an edge into the removed task; the validator asks for a repair",
        "expect": "completed",
        "responses": [{"new_tasks": [t_north], "edges": [["advance_east", "retreat_north"]]}],
    },
)

LANES1 = [(0, 0.5), (4, 0.5), (4, 1.5), (0, 1.5)]
LANES2 = [(0, 2.5), (4, 2.5), (4, 2.0), (0, 2.0)]
t_cover = task(
    "sweep_field",
    "Robots 1 and 2 sweep the field (region 0) in lawnmower lanes 1 m apart.",
    "at least 60% of the field has been sensed",
    [1, 2],
    regions=[0],
)
mission(
    mission_id="C2",
    category="C",
    archetype="coverage threshold (60%)",
    raw_text=(
        "Survey the 4 m by 3 m field (region 0) with robots 1 and 2 using lawnmower lanes. The mission is done "
        "once at least 60% of the field has been covered by the robots' 0.5 m sensors."
    ),
    world={
        "robots": [robot(1, 0, 0.5), robot(2, 0, 2.5)],
        "objects": [],
        "regions": [{"id": 0, "name": "field", "kind": "plain", "polygon": [[0, 0], [4, 0], [4, 3], [0, 3]]}],
    },
    sim={"max_ticks": 3000, "sense_radius": 0.5},
    standardized={
        "overview": "Two robots sweep a rectangular field until 60% of it is covered.",
        "team": [1, 2],
        "objects": [],
        "regions": [0],
        "tasks": [t_cover],
        "mission_finish": "coverage of region 0 is at least 60%",
        "hints": ["lanes spaced at twice the sensing radius"],
    },
    edges=[],
    tree=composite("Sequence", 0, "mission", [action(1, t_cover, "visit_points")]),
    mission_finish="coverage(region(0)) >= 0.6",
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            f"waypoints(robot=1, points={pts(LANES1[1:])}, speed=1); waypoints(robot=2, points={pts(LANES2[1:])}, speed=1)",
            "coverage(region(0)) >= 0.6",
        )),
    ],
    failure={
        "kind": "prepend",
        "stage": "standardize",
        "note": "first standardization leaves the task finish criterion empty",
        "expect": "completed",
        "responses": [{
            "overview": "Two robots sweep a field.",
            "team": [1, 2], "objects": [], "regions": [0],
            "tasks": [{**t_cover, "finish": ""}],
            "mission_finish": "coverage of region 0 is at least 60%",
            "hints": [],
        }],
    },
)

HERDED = "all(objects in [0, 1], in_region(object(i), region(2)))"
t_stage = task(
    "take_positions",
    "Robots 1 and 2 take positions behind objects 0 and 1, on the side away from the pen, without disturbing them.",
    "both robots within 0.1 m of their staging points",
    [1, 2],
    objects=[0, 1],
)
t_herd = task(
    "herd_into_pen",
    "Robots 1 and 2 herd objects 0 and 1 into the pen (region 2).",
    "both objects inside region 2",
    [1, 2],
    objects=[0, 1],
    regions=[2],
    constraints=["herding speed at most 0.5 m/s"],
)
mission(
    mission_id="C3",
    category="C",
    archetype="herding with a staging dependency",
    raw_text=(
        "Two skittish objects (0 and 1) graze near the paddock. Robots 1 and 2 must first sneak behind them, "
        "then herd both into the pen (region 2). Stay out of the pond (region 0)."
    ),
    world={
        "robots": [robot(1, 0, 1.2), robot(2, 0, -1.2)],
        "objects": [
            {"id": 0, "position": [3, 0.6], "v_max": 0.4, "flee_radius": 1.0, "flee_gain": 1.0},
            {"id": 1, "position": [3, -0.6], "v_max": 0.4, "flee_radius": 1.0, "flee_gain": 1.0},
        ],
        "regions": [
            {"id": 0, "name": "pond", "kind": "forbidden", "circle": {"center": [4.5, 3.5], "radius": 0.8}},
            {"id": 1, "name": "paddock", "kind": "plain", "polygon": [[-1, -2], [4, -2], [4, 2], [-1, 2]]},
            {"id": 2, "name": "pen", "kind": "target", "circle": {"center": [7, 0], "radius": 1.2}},
        ],
    },
    sim={"max_ticks": 4000, "object_noise": 0.02, "seed": 7},
    standardized={
        "overview": "Stage behind two objects, then herd them into the pen.",
        "team": [1, 2],
        "objects": [0, 1],
        "regions": [0, 1, 2],
        "tasks": [t_stage, t_herd],
        "mission_finish": "both objects are inside region 2",
        "hints": ["approach from the side away from the pen"],
    },
    edges=[["take_positions", "herd_into_pen"]],
    tree=composite("Sequence", 0, "mission", [
        action(1, t_stage, "visit_points", [(1.8, 0.6), (1.8, -0.6)]),
        action(2, t_herd, "herd"),
    ]),
    mission_finish=HERDED,
    steps=[
        ("select_ready", [1]),
        ("gen_plan", plan(
            "visit_points(robots=[1, 2], points=[(1.8, 0.6), (1.8, -0.6)], allocation=min_conflict, speed=0.5)",
            "any(robots in [1, 2], dist(robot(i), point(1.8, 0.6)) < 0.1) and "
            "any(robots in [1, 2], dist(robot(i), point(1.8, -0.6)) < 0.1)",
        )),
        ("select_ready", [2]),
        ("gen_plan", plan(
            "herd(robots=[1, 2], objects=[0, 1], region=2, d_behind=0.7, allocation=min_conflict, speed=0.5)",
            HERDED,
        )),
    ],
    failure={
        "kind": "replace",
        "stage": "build_tree",
        "occurrence": 0,
        "note": "every proposed tree runs the staging and herding tasks in parallel, violating their ordering; "
                "after the repair budget is spent the mission is reported irreparable",
        "expect": "irreparable",
        "responses": [composite("Parallel", 0, "mission", [
            action(1, t_stage, "visit_points", [(1.8, 0.6), (1.8, -0.6)]),
            action(2, t_herd, "herd"),
        ])] * 3,
    },
)


# -- emit -----------------------------------------------------------------------

def entries_for(m: dict, template: bool) -> list[dict]:
    out = []
    if template:
        out.append({"stage": "standardize", "response": m["standardized"]})
    out.append({"stage": "extract_tasks", "response": {
        "tasks": m.get("extract_tasks", m["standardized"]["tasks"]),
        "edges": m["edges"],
    }})
    out.append({"stage": "build_tree", "response": m["tree"]})
    out.append({"stage": "gen_mission_finish", "response": m["mission_finish"]})
    out += [{"stage": s, "response": r} for s, r in m["steps"]]
    return out


def inject(entries: list[dict], failure: dict) -> list[dict]:
    stage = failure["stage"]
    positions = [k for k, e in enumerate(entries) if e["stage"] == stage]
    at = positions[failure.get("occurrence", 0)]
    bad = [{"stage": stage, "response": r} for r in failure["responses"]]
    if failure["kind"] == "prepend":
        return entries[:at] + bad + entries[at:]
    return entries[:at] + bad + entries[at + 1:]


def dump_yaml(path: Path, doc: dict) -> None:
    path.write_text(yaml.safe_dump(doc, sort_keys=False, width=120, allow_unicode=False))


def main() -> None:
    missions_dir, playbooks_dir = ROOT / "missions", ROOT / "playbooks"
    missions_dir.mkdir(parents=True, exist_ok=True)
    playbooks_dir.mkdir(parents=True, exist_ok=True)
    for m in MISSIONS:
        mid = m["mission_id"]
        doc = {
            "mission_id": mid,
            "category": m["category"],
            "archetype": m["archetype"],
            "raw_text": m["raw_text"],
            "standardized": m["standardized"],
            "world": m["world"],
            "sim": m["sim"],
        }
        (missions_dir / f"{mid}.json").write_text(json.dumps(doc, indent=2) + "\n")
        correct = entries_for(m, template=True)
        dump_yaml(playbooks_dir / f"{mid}.yaml",
                  {"mission_id": mid, "mode": "template", "expect": "completed", "entries": correct})
        dump_yaml(playbooks_dir / f"{mid}.raw.yaml",
                  {"mission_id": mid, "mode": "raw", "expect": "completed", "entries": entries_for(m, template=False)})
        f = m["failure"]
        dump_yaml(playbooks_dir / f"{mid}.fail.yaml", {
            "mission_id": mid,
            "mode": "template",
            "expect": f["expect"],
            "note": f["note"],
            "entries": inject(copy.deepcopy(correct), f),
        })
    print(f"wrote {len(MISSIONS)} missions to {ROOT}")


if __name__ == "__main__":
    main()
