"""Goal allocation: id-ordered default mapping and minimum-total-distance assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from missionbt.behaviors.goals import BehaviorError
from missionbt.worldmodel import Vec2, distance

COST_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    """robot id -> goal index. Surplus robots hold position; surplus goals wait."""

    mapping: dict[int, int]
    stay: tuple[int, ...] = ()
    deferred: tuple[int, ...] = ()
    cost: float = field(default=0.0, compare=False)


def _pad(robot_ids: Sequence[int], n_goals: int) -> tuple[list[int], list[int], tuple[int, ...], tuple[int, ...]]:
    robots = sorted(robot_ids)
    if len(set(robots)) != len(robots):
        raise BehaviorError("duplicate robot ids")
    k = min(len(robots), n_goals)
    active, stay = robots[:k], tuple(robots[k:])
    goals = list(range(k))
    deferred = tuple(range(k, n_goals))
    return active, goals, stay, deferred


def allocate_default(robot_ids: Sequence[int], n_goals: int) -> Assignment:
    """k-th smallest robot id takes goal k."""
    active, goals, stay, deferred = _pad(robot_ids, n_goals)
    return Assignment(dict(zip(active, goals)), stay, deferred)


def hungarian(cost: Sequence[Sequence[float]]) -> tuple[float, list[int]]:
    """Optimal assignment for an n x m cost matrix with n <= m.

    Shortest-augmenting-path form with row/column potentials, O(n^2 m).
    Returns (total cost, column chosen for each row).
    """
    n = len(cost)
    if n == 0:
        return 0.0, []
    m = len(cost[0])
    if m < n:
        raise BehaviorError("hungarian() needs at least as many columns as rows")
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j] = row (1-based) matched to column j
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = -1
            row = cost[i0 - 1]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    cols = [0] * n
    for j in range(1, m + 1):
        if p[j]:
            cols[p[j] - 1] = j - 1
    total = sum(cost[r][cols[r]] for r in range(n))
    return total, cols


def allocate_min_conflict(
    robot_positions: Mapping[int, Vec2],
    goals: Sequence[Vec2],
) -> Assignment:
    """Minimum total straight-line distance assignment.

    With straight-line motion, an optimal assignment never has two crossing
    paths (swapping the endpoints of a crossing pair strictly shortens it).
    Among equal-cost optima, the lexicographically smallest goal sequence in
    robot-id order wins.
    """
    for rid, pos in robot_positions.items():
        if not (math.isfinite(pos.x) and math.isfinite(pos.y)):
            raise BehaviorError(f"robot {rid} has a non-finite position")
    active, goal_idx, stay, deferred = _pad(list(robot_positions), len(goals))
    cost = [[distance(robot_positions[r], goals[g]) for g in goal_idx] for r in active]
    best, _ = hungarian(cost)
    mapping: dict[int, int] = {}
    free = list(goal_idx)
    fixed_cost = 0.0
    for k, rid in enumerate(active):
        rest_rows = active[k + 1 :]
        for g in free:
            remaining = [x for x in free if x != g]
            sub = [[distance(robot_positions[r], goals[x]) for x in remaining] for r in rest_rows]
            sub_cost, _ = hungarian(sub) if rest_rows else (0.0, [])
            if fixed_cost + cost[k][g] + sub_cost <= best + COST_TOL:
                mapping[rid] = g
                fixed_cost += cost[k][g]
                free.remove(g)
                break
        else:  # pragma: no cover - the optimum is always reachable
            raise BehaviorError("assignment tie-break failed")
    return Assignment(mapping, stay, deferred, cost=fixed_cost)
