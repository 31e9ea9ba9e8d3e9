"""The provider-facing analysis and generation stages.

Every stage follows the same loop: render prompt, call the provider, parse and
validate the answer, and on failure re-prompt with the diagnostics attached.
Nothing leaves a stage without passing its validator.
"""

from __future__ import annotations

import graphlib
import json
import logging
from dataclasses import dataclass, field, replace
from functools import cache
from importlib import resources
from string import Template
from typing import Any, Callable, TypeVar

from missionbt.btree import BehaviorTree, BehaviorTreeNode, NodeType, TreeError, ready_actions, validate_tree
from missionbt.missionspec import MissionError, TaskClause
from missionbt.orchestrator.provider import Provider, ProviderError
from missionbt.orchestrator.transcript import Transcript, TranscriptRecord
from missionbt.planlang import FALSE, Expr, PlanDoc, PlanError, TrackProgram, parse_condition, parse_plan, strip_fences
from missionbt.planlang.ast import referenced_ids
from missionbt.planlang.plan import ParametricPath, execution_ids, sample_parametric
from missionbt.worldmodel import WorldError, WorldState

log = logging.getLogger(__name__)

MAX_RETRIES = 2
SELECT_RETRIES = 1

T = TypeVar("T")
Validator = Callable[[str], tuple[Any, list[str]]]


class StageFailure(RuntimeError):
    """A stage exhausted its repair budget or the provider failed."""

    def __init__(self, stage: str, diagnostics: list[str]):
        super().__init__(f"{stage}: " + "; ".join(diagnostics))
        self.stage = stage
        self.diagnostics = diagnostics


# -- prompt assets ----------------------------------------------------------

@cache
def load_prompt(name: str) -> Template:
    text = resources.files("missionbt.orchestrator").joinpath("prompts", f"{name}.txt").read_text()
    # first line is a version header for humans, not part of the prompt
    body = text.split("\n", 1)[1] if text.startswith("# prompt:") else text
    return Template(body)


def render(name: str, **slots: str) -> str:
    return load_prompt(name).substitute(**slots)


def dsl_reference() -> str:
    return load_prompt("dsl_reference").template.rstrip("\n")


def world_summary(world_ids: dict[str, set[int]] | WorldState) -> str:
    if isinstance(world_ids, WorldState):
        from missionbt.missionspec import world_to_dict

        return json.dumps(world_to_dict(world_ids), sort_keys=True)
    return json.dumps({k: sorted(v) for k, v in sorted(world_ids.items())})


def standardize_prompt(raw: str, world: dict[str, set[int]] | WorldState) -> str:
    return render("standardize", raw_text=raw, world=world_summary(world))


# -- the generic loop -------------------------------------------------------

def run_stage(
    stage: str,
    prompt: str,
    provider: Provider,
    validate: Validator,
    transcript: Transcript | None,
    retries: int = MAX_RETRIES,
    on_exhausted: Callable[[list[str]], T] | None = None,
) -> T:
    """Call, validate, and repair up to ``retries`` times."""
    transcript = transcript if transcript is not None else Transcript()
    current = prompt
    diags: list[str] = []
    for attempt in range(retries + 1):
        try:
            response, usage = provider.complete(stage, current)
        except ProviderError as exc:
            if on_exhausted is not None:
                return on_exhausted([str(exc)])
            raise StageFailure(stage, [str(exc)]) from None
        try:
            result, diags = validate(response)
        except Exception as exc:  # a validator bug must not look like a model error
            raise StageFailure(stage, [f"validator crashed: {exc!r}"]) from exc
        ok = result is not None and not diags
        transcript.append(
            TranscriptRecord(
                stage=stage,
                attempt=attempt,
                prompt=current,
                response=response,
                input_tokens=usage.input_tokens,
                output_tokens=usage.output_tokens,
                valid=ok,
                diagnostics=tuple(diags),
            )
        )
        if ok:
            return result  # type: ignore[return-value]
        log.info("%s attempt %d rejected: %s", stage, attempt, "; ".join(diags))
        current = prompt + "\n" + render(
            "repair", diagnostics="\n".join(f"- {d}" for d in diags), previous=response
        )
    if on_exhausted is not None:
        return on_exhausted(diags)
    raise StageFailure(stage, diags)


def _load_json(text: str) -> Any:
    return json.loads(strip_fences(text))


def _id_diags(where: str, ids: dict[str, set[int]], world_ids: dict[str, set[int]]) -> list[str]:
    out = []
    for key in ("robots", "objects", "regions"):
        for missing in sorted(ids.get(key, set()) - world_ids.get(key, set())):
            out.append(f"{where}: unresolved {key[:-1]} id {missing}")
    return out


# -- dependency analysis ----------------------------------------------------

@dataclass
class DependencyAnalysis:
    tasks: list[TaskClause]
    edges: list[tuple[str, str]] = field(default_factory=list)

    def labels(self) -> list[str]:
        return [t.label for t in self.tasks]

    def task(self, label: str) -> TaskClause:
        for t in self.tasks:
            if t.label == label:
                return t
        raise KeyError(label)

    def to_dict(self) -> dict[str, Any]:
        return {"tasks": [t.to_dict() for t in self.tasks], "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def problems(self, world_ids: dict[str, set[int]] | None = None) -> list[str]:
        diags = []
        labels = self.labels()
        seen: set[str] = set()
        for label in labels:
            if not label.strip():
                diags.append("task with empty label")
            elif label in seen:
                diags.append(f"duplicate task label {label!r}")
            seen.add(label)
        for before, after in self.edges:
            for label in (before, after):
                if label not in seen:
                    diags.append(f"edge ({before!r}, {after!r}) references unknown task {label!r}")
            if before == after:
                diags.append(f"edge ({before!r}, {after!r}) is a self-loop")
        if not diags:
            sorter = graphlib.TopologicalSorter({label: set() for label in labels})
            for before, after in self.edges:
                sorter.add(after, before)
            try:
                sorter.prepare()
            except graphlib.CycleError as exc:
                diags.append(f"dependency cycle: {' -> '.join(exc.args[1])}")
        if world_ids is not None:
            for t in self.tasks:
                ids = {"robots": set(t.robot_ids), "objects": set(t.object_ids), "regions": set(t.region_ids)}
                diags.extend(_id_diags(f"task {t.label!r}", ids, world_ids))
        return diags


def _parse_tasks(raw: Any, key: str) -> list[TaskClause]:
    if not isinstance(raw, list):
        raise MissionError(f"{key!r} must be a list")
    return [TaskClause.from_dict(t) for t in raw]


def _parse_edges(raw: Any) -> list[tuple[str, str]]:
    if raw is None:
        return []
    if not isinstance(raw, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e) for e in raw
    ):
        raise MissionError("'edges' must be a list of [before, after] label pairs")
    return [(e[0], e[1]) for e in raw]


def parse_dependencies(text: str, world_ids: dict[str, set[int]]) -> tuple[DependencyAnalysis | None, list[str]]:
    try:
        data = _load_json(text)
        if not isinstance(data, dict):
            return None, ["response must be a JSON object with 'tasks' and 'edges'"]
        dep = DependencyAnalysis(_parse_tasks(data.get("tasks"), "tasks"), _parse_edges(data.get("edges")))
    except json.JSONDecodeError as exc:
        return None, [f"response is not valid JSON: {exc}"]
    except MissionError as exc:
        return None, [str(exc)]
    if not dep.tasks:
        return None, ["at least one task is required"]
    diags = dep.problems(world_ids)
    return (dep, []) if not diags else (None, diags)


def extract_tasks(
    mission_text: str,
    world: WorldState,
    provider: Provider,
    transcript: Transcript | None = None,
) -> DependencyAnalysis:
    prompt = render("extract_tasks", mission=mission_text, world=world_summary(world))
    ids = world.ids()
    return run_stage("extract_tasks", prompt, provider, lambda r: parse_dependencies(r, ids), transcript)


def apply_dependency_update(
    dep: DependencyAnalysis, fired_task: str, new_tasks: list[TaskClause], new_edges: list[tuple[str, str]]
) -> DependencyAnalysis:
    """dep minus the fired task (and its edges) plus the activated tasks."""
    tasks = [t for t in dep.tasks if t.label != fired_task] + list(new_tasks)
    edges = [e for e in dep.edges if fired_task not in e] + list(new_edges)
    return DependencyAnalysis(tasks, edges)


def update_dependencies(
    dep: DependencyAnalysis,
    fired_task: str,
    mission_text: str,
    world: WorldState,
    provider: Provider,
    transcript: Transcript | None = None,
) -> DependencyAnalysis:
    if fired_task not in dep.labels():
        raise ValueError(f"task {fired_task!r} is not part of the dependency analysis")
    ids = world.ids()

    def validate(text: str) -> tuple[DependencyAnalysis | None, list[str]]:
        try:
            data = _load_json(text)
            if not isinstance(data, dict):
                return None, ["response must be a JSON object with 'new_tasks' and 'edges'"]
            new_tasks = _parse_tasks(data.get("new_tasks") or [], "new_tasks")
            new_edges = _parse_edges(data.get("edges"))
        except json.JSONDecodeError as exc:
            return None, [f"response is not valid JSON: {exc}"]
        except MissionError as exc:
            return None, [str(exc)]
        diags = [
            f"edge ({a!r}, {b!r}) references the removed task {fired_task!r}"
            for a, b in new_edges
            if fired_task in (a, b)
        ]
        result = apply_dependency_update(dep, fired_task, new_tasks, new_edges)
        diags += result.problems(ids)
        return (result, []) if not diags else (None, diags)

    prompt = render(
        "update_dependencies",
        fired_task=fired_task,
        mission=mission_text,
        dependencies=dep.to_json(),
        world=world_summary(world),
    )
    return run_stage("update_dependencies", prompt, provider, validate, transcript)


# -- comprehensive analysis: the behavior tree ------------------------------

def _edge_realized(tree: BehaviorTree, index: dict[int, tuple[int, ...]], a: int, b: int) -> bool:
    pa, pb = index[a], index[b]
    k = 0
    while k < min(len(pa), len(pb)) and pa[k] == pb[k]:
        k += 1
    lca = tree.root
    for step in pa[:k]:
        lca = lca.children[step]
    return lca.node_type is NodeType.SEQUENCE and pa[k] < pb[k]


def tree_problems(tree: BehaviorTree, dep: DependencyAnalysis, world_ids: dict[str, set[int]]) -> list[str]:
    diags = validate_tree(tree)
    if diags:
        return diags
    by_label: dict[str, int] = {}
    for node in tree.actions():
        if node.task_name in by_label:
            diags.append(f"task {node.task_name!r} appears in more than one Action node")
        by_label[node.task_name] = node.idx
        ids = {
            "robots": set(node.robot_ids or ()),
            "objects": set(node.object_ids or ()),
            "regions": set(node.region_ids or ()),
        }
        diags.extend(_id_diags(f"node {node.idx}", ids, world_ids))
    labels = set(dep.labels())
    for missing in sorted(labels - set(by_label)):
        diags.append(f"task {missing!r} has no Action node")
    for extra in sorted(set(by_label) - labels):
        diags.append(f"Action node for unknown task {extra!r}")
    if diags:
        return diags
    index = tree.index
    for before, after in dep.edges:
        if not _edge_realized(tree, index, by_label[before], by_label[after]):
            diags.append(
                f"dependency ({before!r} before {after!r}) is not enforced: "
                "both must sit under a Sequence with the first task earlier"
            )
    return diags


def parse_tree(text: str) -> BehaviorTree:
    try:
        return BehaviorTree.from_json(strip_fences(text))
    except (TypeError, ValueError, WorldError) as exc:
        raise TreeError(str(exc)) from None


def build_tree(
    mission_text: str,
    dep: DependencyAnalysis,
    world: WorldState,
    provider: Provider,
    transcript: Transcript | None = None,
) -> BehaviorTree:
    ids = world.ids()

    def validate(text: str) -> tuple[BehaviorTree | None, list[str]]:
        try:
            tree = parse_tree(text)
        except TreeError as exc:
            return None, [str(exc)]
        diags = tree_problems(tree, dep, ids)
        return (tree, []) if not diags else (None, diags)

    prompt = render("build_tree", mission=mission_text, dependencies=dep.to_json(), world=world_summary(world))
    return run_stage("build_tree", prompt, provider, validate, transcript)


# -- ready-to-run selection -------------------------------------------------

def select_ready(
    tree: BehaviorTree,
    provider: Provider,
    transcript: Transcript | None = None,
) -> list[int]:
    """Ask for the executable action nodes; the structural ready set is the judge."""
    expected = ready_actions(tree)
    transcript = transcript if transcript is not None else Transcript()

    def validate(text: str) -> tuple[list[int] | None, list[str]]:
        try:
            data = _load_json(text)
        except json.JSONDecodeError as exc:
            return None, [f"response is not valid JSON: {exc}"]
        if not isinstance(data, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in data):
            return None, ["response must be a JSON array of integer idx values"]
        got = set(data)
        diags = [f"node {i} is not ready to run" for i in sorted(got - set(expected))]
        diags += [f"node {i} is ready to run but was not listed" for i in sorted(set(expected) - got)]
        return (sorted(got), []) if not diags else (None, diags)

    def fallback(diags: list[str]) -> list[int]:
        log.info("select_ready: using structural ready set %s (%s)", expected, "; ".join(diags))
        if transcript.records and transcript.records[-1].stage == "select_ready":
            last = transcript.records[-1]
            transcript.records[-1] = replace(last, note=f"fallback to structural ready set {expected}")
        return expected

    prompt = render("select_ready", tree=tree.to_json())
    return run_stage("select_ready", prompt, provider, validate, transcript, SELECT_RETRIES, fallback)


# -- code generation --------------------------------------------------------

def node_summary(node: BehaviorTreeNode) -> str:
    d = node.to_dict()
    d.pop("children", None)
    return json.dumps(d, sort_keys=True)


def plan_problems(plan: PlanDoc, node: BehaviorTreeNode, world: WorldState) -> list[str]:
    diags = []
    used = execution_ids(plan.execution)
    allowed = set(node.robot_ids or ())
    for rid in sorted(used["robots"] - allowed):
        diags.append(f"execution: robot {rid} is not assigned to node {node.idx}")
    if not node.trigger_condition.strip() and plan.trigger != FALSE:
        diags.append("trigger: node has no trigger condition, so the trigger must be empty")
    if node.trigger_condition.strip() and plan.trigger == FALSE:
        diags.append("trigger: node declares a trigger condition but the plan has none")
    if isinstance(plan.execution, TrackProgram):
        for track in plan.execution.tracks:
            if isinstance(track, ParametricPath):
                try:
                    sample_parametric(track, world)
                except PlanError as exc:
                    diags.append(f"execution: robot {track.robot} trajectory: {exc}")
    return diags


def gen_plan(
    node: BehaviorTreeNode,
    mission_text: str,
    world: WorldState,
    provider: Provider,
    transcript: Transcript | None = None,
) -> PlanDoc:
    ids = world.ids()

    def validate(text: str) -> tuple[PlanDoc | None, list[str]]:
        try:
            plan = parse_plan(text, node.idx, ids)
        except PlanError as exc:
            return None, list(exc.diagnostics) or [str(exc)]
        diags = plan_problems(plan, node, world)
        return (plan, []) if not diags else (None, diags)

    prompt = render(
        "gen_plan",
        mission=mission_text,
        node=node_summary(node),
        world=world_summary(world),
        dsl_reference=dsl_reference(),
    )
    return run_stage("gen_plan", prompt, provider, validate, transcript)


def parse_finish_expression(text: str, world_ids: dict[str, set[int]]) -> tuple[Expr | None, list[str]]:
    body = strip_fences(text)
    try:
        expr = parse_condition(body)
    except PlanError as exc:
        return None, list(exc.diagnostics) or [str(exc)]
    diags = _id_diags("mission finish", referenced_ids(expr), world_ids)
    return (expr, []) if not diags else (None, diags)


def gen_mission_finish(
    mission_text: str,
    world: WorldState,
    provider: Provider,
    transcript: Transcript | None = None,
) -> Expr:
    ids = world.ids()
    prompt = render(
        "gen_mission_finish", mission=mission_text, world=world_summary(world), dsl_reference=dsl_reference()
    )
    return run_stage("gen_mission_finish", prompt, provider, lambda r: parse_finish_expression(r, ids), transcript)
