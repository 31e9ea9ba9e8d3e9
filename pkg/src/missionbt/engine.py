"""The closed loop: analyze the mission, plan ready actions, tick the simulator,
react to finish and trigger conditions, replan, and stop on mission finish."""

from __future__ import annotations

import enum
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from missionbt.behaviors import (
    BehaviorError,
    UnreachableError,
    allocate_default,
    allocate_min_conflict,
    gen_follow_targets,
    gen_herd,
    gen_visit_points,
    plan_path,
)
from missionbt.btree import (
    ActionType,
    BehaviorTree,
    NodeStatus,
    TreeError,
    apply_action_finish,
    apply_composite_finish,
    apply_trigger_fired,
    mark_failed,
    mark_running,
    propagate_success,
    ready_actions,
)
from missionbt.missionspec import MissionError, MissionSpec, sim_from_dict, standardize, world_from_dict, world_to_dict
from missionbt.orchestrator import (
    Accounting,
    DependencyAnalysis,
    Provider,
    ProviderError,
    StageFailure,
    Transcript,
    account,
    build_tree,
    extract_tasks,
    gen_mission_finish,
    gen_plan,
    select_ready,
    update_dependencies,
)
from missionbt.planlang import EvalContext, Expr, MetaCall, PlanDoc, PlanError, eval_expr, parse_condition
from missionbt.planlang.plan import ParametricPath, WaypointPath, sample_parametric
from missionbt.sim import SimConfig, step, tick_record, trace_hash
from missionbt.worldmodel import Vec2, Waypoint, WorldState

log = logging.getLogger(__name__)


class Reason(str, enum.Enum):
    COMPLETED = "Completed"
    TIMEOUT = "Timeout"
    IRREPARABLE = "IrreparableFailure"


@dataclass(frozen=True)
class Event:
    # TriggerFired | ActionFinished | CompositeFinished | MissionFinished | Timeout
    # | Unreachable | PlanFailed | ConditionError
    kind: str
    tick: int
    time: float
    node: int | None = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class MissionReport:
    mission_id: str
    success: bool
    reason: Reason
    ticks: int
    sim_time: float
    wall_time: float
    events: list[Event]
    usage: Accounting
    trace_digest: str
    transcript_digest: str
    template: bool
    detail: str = ""
    trace: list[dict] = field(default_factory=list, repr=False)
    transcript: Transcript = field(default_factory=Transcript, repr=False)

    def to_dict(self, include_wall_time: bool = True) -> dict[str, Any]:
        out = {
            "mission_id": self.mission_id,
            "success": self.success,
            "reason": self.reason.value,
            "detail": self.detail,
            "template": self.template,
            "ticks": self.ticks,
            "sim_time": self.sim_time,
            "events": [e.to_dict() for e in self.events],
            "usage": self.usage.to_dict(),
            "trace_digest": self.trace_digest,
            "transcript_digest": self.transcript_digest,
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write report.json, trace.jsonl and transcript.jsonl into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "report": out / "report.json",
            "trace": out / "trace.jsonl",
            "transcript": out / "transcript.jsonl",
        }
        paths["report"].write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        paths["trace"].write_text("".join(json.dumps(r) + "\n" for r in self.trace))
        self.transcript.write(paths["transcript"])
        return paths


class _Abort(Exception):
    def __init__(self, reason: Reason, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


@dataclass
class ActiveTask:
    idx: int
    plan: PlanDoc
    start_time: float
    robots: tuple[int, ...]
    caps: dict[int, float]
    deferred: list[Vec2] = field(default_factory=list)
    per_tick: bool = False


def _encode_queue(queue: Iterable[Waypoint]) -> list[list[float]]:
    return [[w.position.x, w.position.y, w.speed_cap] for w in queue]


def _decode_overrides(raw: list) -> dict[int, list[Waypoint]]:
    return {int(rid): [Waypoint(Vec2(x, y), cap) for x, y, cap in q] for rid, q in raw}


class MissionRun:
    """One execution of one mission; single-threaded and deterministic."""

    def __init__(
        self,
        spec: MissionSpec,
        provider: Provider,
        config: SimConfig | None = None,
        *,
        use_template: bool = True,
    ):
        self.spec = spec
        self.provider = provider
        self.config = config or spec.sim
        self.use_template = use_template
        self.world = spec.world
        if self.world.rng_seed != self.config.seed:
            self.world = world_from_dict(world_to_dict(spec.world), self.config)
        self.transcript = Transcript()
        self.events: list[Event] = []
        self.trace: list[dict] = [
            {
                "kind": "header",
                "mission_id": spec.mission_id,
                "world": world_to_dict(self.world),
                "sim": asdict(self.config),
            }
        ]
        self.mission_text = spec.raw_text
        self.dep: DependencyAnalysis | None = None
        self.tree: BehaviorTree | None = None
        self.mission_finish: Expr | None = None
        self.active: dict[int, ActiveTask] = {}
        self.pending: dict[int, list[Waypoint]] = {}
        self.node_start: dict[int, float] = {}
        self.composite_finish: dict[int, Expr | None] = {}

    # -- helpers -------------------------------------------------------------

    def emit(self, kind: str, node: int | None = None, detail: str = "") -> None:
        self.events.append(Event(kind, self.world.tick, self.world.time, node, detail))
        log.debug("tick %d: %s %s %s", self.world.tick, kind, node, detail)

    def tasks_done(self) -> bool:
        return self.tree is not None and self.tree.root.status is NodeStatus.SUCCESS

    def mission_finished(self) -> bool:
        assert self.mission_finish is not None
        ctx = EvalContext(node_start_time=0.0, tasks_done=self.tasks_done())
        try:
            return bool(eval_expr(self.mission_finish, self.world, ctx))
        except PlanError as exc:
            raise _Abort(Reason.IRREPARABLE, f"mission finish condition failed to evaluate: {exc}") from None

    def fail_node(self, idx: int, kind: str, detail: str) -> None:
        assert self.tree is not None
        self.emit(kind, idx, detail)
        self.deactivate(idx)
        self.tree = mark_failed(self.tree, idx)

    def deactivate(self, idx: int) -> None:
        task = self.active.pop(idx, None)
        if task is not None:
            for rid in task.robots:
                self.pending[rid] = []

    # -- analysis ------------------------------------------------------------

    def analyze(self) -> None:
        if self.use_template:
            std = standardize(self.spec.raw_text, self.provider, self.world.ids(), transcript=self.transcript)
            self.mission_text = json.dumps(std.to_dict(), indent=2)
        self.dep = extract_tasks(self.mission_text, self.world, self.provider, self.transcript)
        self.set_tree(build_tree(self.mission_text, self.dep, self.world, self.provider, self.transcript), None)
        self.mission_finish = gen_mission_finish(self.mission_text, self.world, self.provider, self.transcript)

    def set_tree(self, tree: BehaviorTree, previous: BehaviorTree | None) -> None:
        """Install a freshly built tree: statuses reset to Idle, finished tasks carried over."""
        new = tree.copy()
        carried: dict[str, NodeStatus] = {}
        if previous is not None:
            carried = {n.task_name: n.status for n in previous.actions() if n.status.terminal}
        for node in new.nodes():
            node.status = NodeStatus.IDLE
        succeeded = []
        for node in new.actions():
            status = carried.get(node.task_name)
            if status is not None:
                node.status = status
                if status is NodeStatus.SUCCESS:
                    succeeded.append(node.idx)
        for idx in succeeded:
            new, _ = propagate_success(new, idx)
        self.tree = new
        self.node_start = {}
        self.composite_finish = {}
        for node in new.nodes():
            if node.is_action:
                continue
            try:
                self.composite_finish[node.idx] = parse_condition(node.finish_condition)
            except PlanError:
                self.composite_finish[node.idx] = None  # descriptive text, children decide

    # -- scheduling ----------------------------------------------------------

    def schedule(self) -> None:
        assert self.tree is not None
        if not ready_actions(self.tree):
            return
        selected = select_ready(self.tree, self.provider, self.transcript)
        self.tree = mark_running(self.tree, selected)
        for idx in selected:
            for node in [*self.tree.parent_chain(idx), self.tree.node(idx)]:
                self.node_start.setdefault(node.idx, self.world.time)
        for idx in sorted(selected):
            node = self.tree.node(idx)
            try:
                plan = gen_plan(node, self.mission_text, self.world, self.provider, self.transcript)
            except StageFailure as exc:
                self.fail_node(idx, "PlanFailed", str(exc))
                continue
            try:
                self.activate(idx, plan)
            except UnreachableError as exc:
                self.fail_node(idx, "Unreachable", str(exc))
            except (BehaviorError, PlanError, KeyError) as exc:
                self.fail_node(idx, "PlanFailed", str(exc))

    def activate(self, idx: int, plan: PlanDoc) -> None:
        world = self.world
        execution = plan.execution
        queues: dict[int, list[Waypoint]] = {}
        if isinstance(execution, MetaCall):
            robots = execution.robots
            caps = {
                rid: min(execution.speed, world.robot(rid).max_speed) if execution.speed else world.robot(rid).max_speed
                for rid in robots
            }
            task = ActiveTask(idx, plan, world.time, robots, caps)
            if execution.primitive is ActionType.VISIT_POINTS:
                line = circle = None
                if execution.line is not None:
                    line = (execution.line.start, execution.line.end, execution.line.n)
                if execution.circle is not None:
                    c = execution.circle
                    circle = (c.center, c.radius, c.n, c.phase)
                goals = gen_visit_points(execution.points or None, line=line, circle=circle).goals
                assignment = self.allocate(execution, robots, goals)
                for rid, g in sorted(assignment.mapping.items()):
                    queues[rid] = self.route(task, rid, goals[g])
                for rid in assignment.stay:
                    queues[rid] = []
                task.deferred = [goals[g] for g in assignment.deferred]
            else:
                task.per_tick = True
        else:
            robots = execution.robots
            task = ActiveTask(idx, plan, world.time, robots, {rid: world.robot(rid).max_speed for rid in robots})
            ctx = EvalContext(node_start_time=world.time)
            for track in execution.tracks:
                if isinstance(track, WaypointPath):
                    wps = [Waypoint(p, track.speed_cap) for p in track.points]
                elif isinstance(track, ParametricPath):
                    wps = sample_parametric(track, world, ctx)
                else:  # pragma: no cover
                    raise PlanError(f"unknown track {track!r}")
                queues.setdefault(track.robot, []).extend(wps)
        self.active[idx] = task
        self.pending.update(queues)

    def allocate(self, execution: MetaCall, robots: tuple[int, ...], goals: tuple[Vec2, ...]):
        if execution.allocation == "min_conflict":
            return allocate_min_conflict({rid: self.world.robot(rid).position for rid in robots}, goals)
        return allocate_default(robots, len(goals))

    def route(self, task: ActiveTask, rid: int, goal: Vec2) -> list[Waypoint]:
        execution = task.plan.execution
        avoid = [self.world.region(g) for g in execution.avoid] if isinstance(execution, MetaCall) else []
        return plan_path(self.world.robot(rid).position, goal, avoid, speed_cap=task.caps[rid])

    def per_tick_goals(self, task: ActiveTask) -> dict[int, list[Waypoint]]:
        execution = task.plan.execution
        assert isinstance(execution, MetaCall)
        if execution.primitive is ActionType.FOLLOW_TARGETS:
            goals = gen_follow_targets(execution.objects, execution.offset, self.world).goals
        else:
            region = self.world.region(execution.region)  # type: ignore[arg-type]
            goals = gen_herd(execution.objects, region, execution.d_behind, self.world).goals
        out: dict[int, list[Waypoint]] = {rid: [] for rid in task.robots}
        if goals:
            assignment = self.allocate(execution, task.robots, goals)
            for rid, g in assignment.mapping.items():
                out[rid] = self.route(task, rid, goals[g]) if execution.avoid else [Waypoint(goals[g], task.caps[rid])]
        return out

    def assign_deferred(self) -> None:
        for idx in sorted(self.active):
            task = self.active[idx]
            for rid in task.robots:
                if not task.deferred:
                    break
                if rid in self.pending or self.world.robot(rid).waypoint_queue:
                    continue
                goal = task.deferred.pop(0)
                try:
                    self.pending[rid] = self.route(task, rid, goal)
                except UnreachableError as exc:
                    self.fail_node(idx, "Unreachable", str(exc))
                    break

    # -- replanning ----------------------------------------------------------

    def replan(self, fired: list[str]) -> None:
        assert self.dep is not None and self.tree is not None
        # hold position until the new tree assigns fresh plans
        for idx in list(self.active):
            self.deactivate(idx)
        for r in self.world.robots:
            self.pending[r.id] = []
        for name in fired:
            self.dep = update_dependencies(
                self.dep, name, self.mission_text, self.world, self.provider, self.transcript
            )
        new = build_tree(self.mission_text, self.dep, self.world, self.provider, self.transcript)
        self.set_tree(new, self.tree)

    # -- main loop -----------------------------------------------------------

    def record_tick(self, overrides: dict[int, list[Waypoint]], sim_events) -> None:
        rec: dict[str, Any] = {"kind": "tick", **tick_record(self.world)}
        rec["coverage"] = [[gid, g.fraction] for gid, g in sorted(self.world.coverage_grids.items())]
        rec["overrides"] = [[rid, _encode_queue(q)] for rid, q in sorted(overrides.items())]
        rec["sim_events"] = [[e.kind, e.entity, e.region] for e in sim_events]
        self.trace.append(rec)

    def evaluate_nodes(self) -> tuple[list[int], list[int], list[int]]:
        assert self.tree is not None
        fired, finished, composites = [], [], []
        done = self.tasks_done()
        for idx in sorted(self.active):
            task = self.active[idx]
            ctx = EvalContext(node_start_time=task.start_time, tasks_done=done)
            try:
                if bool(eval_expr(task.plan.trigger, self.world, ctx)):
                    fired.append(idx)
                elif bool(eval_expr(task.plan.finish, self.world, ctx)):
                    finished.append(idx)
            except PlanError as exc:
                self.fail_node(idx, "ConditionError", str(exc))
        for node in self.tree.nodes():
            expr = self.composite_finish.get(node.idx)
            if expr is None or node.status is not NodeStatus.RUNNING:
                continue
            ctx = EvalContext(node_start_time=self.node_start.get(node.idx, 0.0), tasks_done=done)
            try:
                if bool(eval_expr(expr, self.world, ctx)):
                    composites.append(node.idx)
            except PlanError:
                self.composite_finish[node.idx] = None
        return fired, finished, composites

    def apply_events(self, fired: list[int], finished: list[int], composites: list[int]) -> list[str]:
        assert self.tree is not None
        for idx in finished:
            if self.tree.node(idx).status is not NodeStatus.RUNNING:
                continue
            self.deactivate(idx)
            self.emit("ActionFinished", idx)
            self.tree, flipped = apply_action_finish(self.tree, idx)
            for c in flipped:
                self.emit("CompositeFinished", c)
        for idx in composites:
            if self.tree.node(idx).status is not NodeStatus.RUNNING:
                continue
            for desc in self.tree.node(idx).walk():
                self.deactivate(desc.idx)
            self.emit("CompositeFinished", idx)
            self.tree = apply_composite_finish(self.tree, idx)
            self.tree, flipped = propagate_success(self.tree, idx)
            for c in flipped:
                self.emit("CompositeFinished", c)
        names = []
        for idx in fired:
            if self.tree.node(idx).status is not NodeStatus.RUNNING:
                continue
            self.deactivate(idx)
            self.emit("TriggerFired", idx)
            self.tree, name = apply_trigger_fired(self.tree, idx)
            names.append(name)
        return names

    def stalled(self) -> bool:
        """Nothing runs, nothing can start, and some task already failed."""
        assert self.tree is not None
        if self.active or ready_actions(self.tree):
            return False
        return any(n.status is NodeStatus.FAILURE for n in self.tree.actions())

    def loop(self) -> tuple[Reason, str]:
        cfg = self.config
        if self.stalled():
            return Reason.IRREPARABLE, "no task can run after a task failed"
        while self.world.tick < cfg.max_ticks:
            overrides, self.pending = self.pending, {}
            for idx in sorted(self.active):
                task = self.active[idx]
                if task.per_tick:
                    try:
                        overrides.update(self.per_tick_goals(task))
                    except (BehaviorError, KeyError) as exc:
                        self.fail_node(idx, "PlanFailed", str(exc))
                        overrides.update(self.pending)
                        self.pending = {}
            outcome = step(self.world, cfg, overrides)
            self.world = outcome.world
            self.record_tick(overrides, outcome.events)
            self.assign_deferred()

            if self.mission_finished():
                self.emit("MissionFinished")
                return Reason.COMPLETED, ""
            fired, finished, composites = self.evaluate_nodes()
            names = self.apply_events(fired, finished, composites)
            if self.mission_finished():
                self.emit("MissionFinished")
                return Reason.COMPLETED, ""
            if names:
                self.replan(names)
            self.schedule()
            if self.stalled():
                return Reason.IRREPARABLE, "no task can run after a task failed"
        self.emit("Timeout")
        return Reason.TIMEOUT, f"mission finish condition not met within {cfg.max_ticks} ticks"

    def execute(self) -> tuple[Reason, str]:
        try:
            self.analyze()
            self.schedule()
            return self.loop()
        except _Abort as exc:
            return exc.reason, exc.detail
        except StageFailure as exc:
            return Reason.IRREPARABLE, str(exc)
        except (ProviderError, TreeError, MissionError) as exc:
            return Reason.IRREPARABLE, f"{type(exc).__name__}: {exc}"


def _event_order(e: Event) -> tuple[int, int]:
    return e.tick, e.node if e.node is not None else 1 << 30


def run_mission(
    spec: MissionSpec,
    provider: Provider,
    sim_config: SimConfig | None = None,
    *,
    use_template: bool = True,
    price_in: float = 0.0,
    price_out: float = 0.0,
) -> MissionReport:
    """Execute ``spec`` end to end. Failures end up in the report, never as exceptions."""
    started = time.perf_counter()
    run = MissionRun(spec, provider, sim_config, use_template=use_template)
    reason, detail = run.execute()
    ticks = [r for r in run.trace if r.get("kind") == "tick"]
    return MissionReport(
        mission_id=spec.mission_id,
        success=reason is Reason.COMPLETED,
        reason=reason,
        ticks=run.world.tick,
        sim_time=run.world.time,
        wall_time=time.perf_counter() - started,
        events=sorted(run.events, key=_event_order),
        usage=account(run.transcript, price_in, price_out),
        trace_digest=trace_hash(ticks),
        transcript_digest=run.transcript.digest(),
        template=use_template,
        detail=detail,
        trace=run.trace,
        transcript=run.transcript,
    )


# -- replay ---------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayVerdict:
    match: bool
    ticks: int
    digest: str
    first_divergent_tick: int | None = None
    detail: str = ""


def load_trace(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def replay(trace: list[dict] | str | Path, expected_digest: str | None = None) -> ReplayVerdict:
    """Re-run the recorded waypoint streams and compare every tick with the log."""
    records = load_trace(trace) if isinstance(trace, (str, Path)) else trace
    if not records or records[0].get("kind") != "header":
        return ReplayVerdict(False, 0, "", 0, "trace has no header record")
    ticks = [r for r in records[1:] if r.get("kind") == "tick"]
    digest = trace_hash(ticks)
    try:
        config = sim_from_dict(records[0]["sim"])
        world: WorldState = world_from_dict(records[0]["world"], config)
    except (MissionError, KeyError, TypeError) as exc:
        return ReplayVerdict(False, len(ticks), digest, 0, f"cannot rebuild initial state: {exc}")
    for rec in ticks:
        try:
            overrides = _decode_overrides(rec.get("overrides") or [])
            world = step(world, config, overrides).world
        except (ValueError, TypeError, KeyError) as exc:
            return ReplayVerdict(False, len(ticks), digest, rec.get("tick"), f"cannot re-execute: {exc}")
        expected = {k: rec.get(k) for k in ("tick", "time", "robots", "objects")}
        if json.loads(json.dumps(tick_record(world))) != expected:
            return ReplayVerdict(False, len(ticks), digest, rec.get("tick"), "recorded state differs from re-execution")
    if expected_digest is not None and expected_digest != digest:
        return ReplayVerdict(False, len(ticks), digest, None, "trace digest differs from the expected digest")
    return ReplayVerdict(True, len(ticks), digest)
