"""Behavior-tree records and the deterministic status semantics the engine relies on.

Trees are plain nested dataclasses mirroring the node field table one to one, so
the JSON wire format used in prompts and the in-memory form share field names.
All mutating operations return a new tree; the input is never modified.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from missionbt.worldmodel import Vec2

FIELD_ORDER = (
    "idx",
    "node_type",
    "task_name",
    "status",
    "constraints",
    "trigger_condition",
    "finish_condition",
    "hints",
    "children",
    "action_type",
    "robot_ids",
    "object_ids",
    "region_ids",
    "points",
)
ACTION_ONLY = ("action_type", "robot_ids", "object_ids", "region_ids", "points")


class TreeError(ValueError):
    """Contract violation on a behavior-tree operation."""


class NodeStatus(str, enum.Enum):
    IDLE = "Idle"
    RUNNING = "Running"
    SUCCESS = "Success"
    FAILURE = "Failure"

    @property
    def terminal(self) -> bool:
        return self in (NodeStatus.SUCCESS, NodeStatus.FAILURE)


class NodeType(str, enum.Enum):
    PARALLEL = "Parallel"
    SEQUENCE = "Sequence"
    ACTION = "Action"


class ActionType(str, enum.Enum):
    VISIT_POINTS = "visit_points"
    FOLLOW_TARGETS = "follow_targets"
    HERD = "herd"


@dataclass
class BehaviorTreeNode:
    idx: int
    node_type: NodeType
    task_name: str
    status: NodeStatus = NodeStatus.IDLE
    constraints: list[str] = field(default_factory=list)
    trigger_condition: str = ""
    finish_condition: str = ""
    hints: list[str] = field(default_factory=list)
    children: list[BehaviorTreeNode] = field(default_factory=list)
    action_type: ActionType | None = None
    robot_ids: list[int] | None = None
    object_ids: list[int] | None = None
    region_ids: list[int] | None = None
    points: list[Vec2] | None = None

    @property
    def is_action(self) -> bool:
        return self.node_type is NodeType.ACTION

    def walk(self) -> Iterator[BehaviorTreeNode]:
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "idx": self.idx,
            "node_type": self.node_type.value,
            "task_name": self.task_name,
            "status": self.status.value,
            "constraints": list(self.constraints),
            "trigger_condition": self.trigger_condition,
            "finish_condition": self.finish_condition,
            "hints": list(self.hints),
            "children": [c.to_dict() for c in self.children],
        }
        if self.is_action:
            out["action_type"] = self.action_type.value if self.action_type else None
            out["robot_ids"] = list(self.robot_ids or [])
            out["object_ids"] = list(self.object_ids or [])
            out["region_ids"] = list(self.region_ids or [])
            out["points"] = [p.as_list() for p in self.points or []]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BehaviorTreeNode:
        if not isinstance(data, dict):
            raise TreeError(f"node must be an object, got {type(data).__name__}")
        unknown = set(data) - set(FIELD_ORDER)
        if unknown:
            raise TreeError(f"unknown node field(s): {sorted(unknown)}")
        for required in ("idx", "node_type", "task_name"):
            if required not in data:
                raise TreeError(f"node missing required field {required!r}")
        try:
            node_type = NodeType(data["node_type"])
            status = NodeStatus(data.get("status", "Idle"))
            action_type = ActionType(data["action_type"]) if data.get("action_type") else None
        except ValueError as exc:
            raise TreeError(str(exc)) from None
        idx = data["idx"]
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise TreeError(f"idx must be an integer, got {idx!r}")
        node = cls(
            idx=idx,
            node_type=node_type,
            task_name=str(data["task_name"]),
            status=status,
            constraints=[str(c) for c in data.get("constraints") or []],
            trigger_condition=str(data.get("trigger_condition") or ""),
            finish_condition=str(data.get("finish_condition") or ""),
            hints=[str(h) for h in data.get("hints") or []],
            children=[cls.from_dict(c) for c in data.get("children") or []],
            action_type=action_type,
        )
        # action-only fields are kept verbatim (even on composites) so the
        # validator can report misplaced ones instead of silently dropping them
        for name in ("robot_ids", "object_ids", "region_ids"):
            if name in data and data[name] is not None:
                setattr(node, name, [int(v) for v in data[name]])
        if "points" in data and data["points"] is not None:
            node.points = [Vec2.of(p) for p in data["points"]]
        return node


@dataclass
class BehaviorTree:
    root: BehaviorTreeNode

    def nodes(self) -> Iterator[BehaviorTreeNode]:
        return self.root.walk()

    @property
    def index(self) -> dict[int, tuple[int, ...]]:
        """Map idx -> child-position path from the root."""
        out: dict[int, tuple[int, ...]] = {}

        def visit(node: BehaviorTreeNode, path: tuple[int, ...]) -> None:
            out.setdefault(node.idx, path)
            for k, child in enumerate(node.children):
                visit(child, path + (k,))

        visit(self.root, ())
        return out

    def node(self, idx: int) -> BehaviorTreeNode:
        for n in self.nodes():
            if n.idx == idx:
                return n
        raise TreeError(f"idx {idx} not found")

    def parent_chain(self, idx: int) -> list[BehaviorTreeNode]:
        """Ancestors of ``idx`` from the root down (excluding the node itself)."""
        path = self.index.get(idx)
        if path is None:
            raise TreeError(f"idx {idx} not found")
        chain = [self.root]
        for k in path[:-1]:
            chain.append(chain[-1].children[k])
        return chain if path else []

    def actions(self) -> list[BehaviorTreeNode]:
        return [n for n in self.nodes() if n.is_action]

    def copy(self) -> BehaviorTree:
        return copy.deepcopy(self)

    def to_dict(self) -> dict[str, Any]:
        return self.root.to_dict()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BehaviorTree:
        if isinstance(data, dict) and "root" in data and "idx" not in data:
            data = data["root"]
        return cls(BehaviorTreeNode.from_dict(data))

    @classmethod
    def from_json(cls, text: str) -> BehaviorTree:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TreeError(f"tree is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def validate_tree(tree: BehaviorTree) -> list[str]:
    """Structural and status-coherence diagnostics; empty means valid."""
    diags: list[str] = []
    seen: set[int] = set()
    for node in tree.nodes():
        where = f"node {node.idx}"
        if node.idx in seen:
            diags.append(f"{where}: duplicate idx {node.idx}")
        seen.add(node.idx)
        if not node.task_name.strip():
            diags.append(f"{where}: empty task_name")
        if node.is_action:
            if node.children:
                diags.append(
                    f"{where}: Action node has {len(node.children)} children; "
                    "children must be empty for Action nodes"
                )
            if node.action_type is None:
                diags.append(f"{where}: Action node missing action_type")
            if not node.robot_ids:
                diags.append(f"{where}: Action node has no robot_ids")
        else:
            if not node.children:
                diags.append(f"{where}: {node.node_type.value} node needs at least one child")
            misplaced = [
                name
                for name in ACTION_ONLY
                if getattr(node, name) not in (None, [])
            ]
            if misplaced:
                diags.append(f"{where}: action-only field(s) {misplaced} on composite node")
            statuses = [c.status for c in node.children]
            if node.status.terminal and NodeStatus.RUNNING in statuses:
                diags.append(f"{where}: {node.status.value} composite has Running children")
            if node.status is NodeStatus.IDLE and any(s is NodeStatus.RUNNING for s in statuses):
                diags.append(f"{where}: Idle composite has Running children")
            if node.status is NodeStatus.RUNNING and node.children and all(
                s is NodeStatus.IDLE for s in statuses
            ):
                diags.append(f"{where}: Running composite has no started child")
    return diags


def _explore(node: BehaviorTreeNode, out: list[int]) -> None:
    if node.status.terminal:
        return
    if node.is_action:
        if node.status is NodeStatus.IDLE:
            out.append(node.idx)
        return
    if node.node_type is NodeType.SEQUENCE:
        for child in node.children:
            if child.status is NodeStatus.FAILURE:
                return  # a failed step blocks the rest of the sequence
            if not child.status.terminal:
                _explore(child, out)
                return
        return
    for child in node.children:
        _explore(child, out)


def ready_actions(tree: BehaviorTree) -> list[int]:
    """Idle Action nodes whose ordering dependencies are met, sorted by idx."""
    out: list[int] = []
    _explore(tree.root, out)
    return sorted(out)


def mark_running(tree: BehaviorTree, selected: list[int]) -> BehaviorTree:
    """Mark the selected Action nodes and all their ancestors Running."""
    new = tree.copy()
    if not selected:
        return new
    ready = set(ready_actions(tree))
    for idx in selected:
        node = new.node(idx)
        if node.status is NodeStatus.RUNNING and node.is_action:
            continue
        if idx not in ready:
            raise TreeError(f"node {idx} is not ready to run")
    for idx in selected:
        node = new.node(idx)
        node.status = NodeStatus.RUNNING
        for ancestor in new.parent_chain(idx):
            ancestor.status = NodeStatus.RUNNING
    return new


def _propagate_success(new: BehaviorTree, start_idx: int) -> list[int]:
    flipped: list[int] = []
    for ancestor in reversed(new.parent_chain(start_idx)):
        if ancestor.status.terminal:
            break
        if all(c.status is NodeStatus.SUCCESS for c in ancestor.children):
            ancestor.status = NodeStatus.SUCCESS
            flipped.append(ancestor.idx)
        else:
            break
    return flipped


def apply_action_finish(tree: BehaviorTree, idx: int) -> tuple[BehaviorTree, list[int]]:
    """Mark a Running action Success and flip ancestors whose children all succeeded."""
    new = tree.copy()
    node = new.node(idx)
    if not node.is_action:
        raise TreeError(f"node {idx} is not an Action node")
    if node.status is not NodeStatus.RUNNING:
        raise TreeError(f"node {idx} is {node.status.value}, expected Running")
    node.status = NodeStatus.SUCCESS
    return new, _propagate_success(new, idx)


def apply_composite_finish(tree: BehaviorTree, idx: int) -> BehaviorTree:
    """A composite's own finish condition held: fail unfinished descendants, succeed it."""
    new = tree.copy()
    node = new.node(idx)
    if node.is_action:
        raise TreeError(f"node {idx} is an Action node")
    if node.status is not NodeStatus.RUNNING:
        raise TreeError(f"node {idx} is {node.status.value}, expected Running")
    for desc in node.walk():
        if desc is not node and desc.status in (NodeStatus.IDLE, NodeStatus.RUNNING):
            desc.status = NodeStatus.FAILURE
    node.status = NodeStatus.SUCCESS
    return new


def apply_trigger_fired(tree: BehaviorTree, idx: int) -> tuple[BehaviorTree, str]:
    """Terminate a Running action whose trigger fired; return its task name."""
    new = tree.copy()
    node = new.node(idx)
    if not node.is_action:
        raise TreeError(f"node {idx} is not an Action node")
    if not node.trigger_condition.strip():
        raise TreeError(f"node {idx} has no trigger_condition")
    if node.status is not NodeStatus.RUNNING:
        raise TreeError(f"node {idx} is {node.status.value}, expected Running")
    node.status = NodeStatus.FAILURE
    return new, node.task_name


def running_actions(tree: BehaviorTree) -> list[int]:
    return sorted(n.idx for n in tree.actions() if n.status is NodeStatus.RUNNING)


def propagate_success(tree: BehaviorTree, idx: int) -> tuple[BehaviorTree, list[int]]:
    """Flip non-terminal ancestors of ``idx`` to Success while all their children succeeded."""
    new = tree.copy()
    return new, _propagate_success(new, idx)


def mark_failed(tree: BehaviorTree, idx: int) -> BehaviorTree:
    """Terminate a non-terminal Action node as Failure (unreachable goal, irreparable plan)."""
    new = tree.copy()
    node = new.node(idx)
    if not node.is_action:
        raise TreeError(f"node {idx} is not an Action node")
    if node.status.terminal:
        raise TreeError(f"node {idx} is already {node.status.value}")
    node.status = NodeStatus.FAILURE
    return new
