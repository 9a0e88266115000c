"""A* over symbolic states with a clustered ordered-landmark heuristic.

The heuristic counts unreached landmarks per goal-object sequence (a
landmark counts as reached only once its predecessors are) and adds unit
penalties for a last action that touches no goal object or reaches no new
landmark. The search is greedy about returning the first goal it pops and
can be continued for further distinct plans, with object exclusions and
failure-memory bindings re-triggering grounding and imagination.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .hierarchy import TypeHierarchy
from .imagination import ImaginationResult, PlanningTask, imagine
from .landmarks import LandmarkClusters, UnreachableGoalError, cluster_landmarks, extract_landmarks
from .symbolic import ActionSchema, GroundedAction, State, ground_schema


@dataclass(frozen=True)
class PlannerConfig:
    penalty_non_goal_object: float = 1.0
    penalty_no_new_landmark: float = 1.0
    node_budget: int = 200_000
    use_imagination: bool = True

    def __post_init__(self) -> None:
        if self.node_budget <= 0:
            raise ValueError("node budget must be positive")
        if self.penalty_non_goal_object < 0 or self.penalty_no_new_landmark < 0:
            raise ValueError("penalties must be non-negative")


@dataclass(frozen=True)
class PlanResult:
    status: str  # "found" | "unsolvable" | "budget"
    plan: tuple[GroundedAction, ...] | None
    stats: dict
    remaining_unreachable: frozenset = frozenset()

    @property
    def found(self) -> bool:
        return self.status == "found"

    def plan_to_list(self) -> list[dict]:
        return [g.to_dict() for g in self.plan or ()]


def ground_all(
    schemas: Sequence[ActionSchema],
    task: PlanningTask,
    h: TypeHierarchy,
    excluded: frozenset = frozenset(),
    blocked: frozenset = frozenset(),
) -> list[GroundedAction]:
    """All groundings over the task objects minus exclusions and blocked bindings."""
    out: list[GroundedAction] = []
    for s in schemas:
        out.extend(ground_schema(s, task.objects, h, excluded=excluded, blocked=blocked))
    return out


@dataclass
class _Node:
    state: State
    parent: int  # index into node store, -1 for root
    action: GroundedAction | None
    g: int
    reached: frozenset
    h: float


class PlannerSession:
    """One planning session: supports plan() and continuation via next_plan()."""

    def __init__(
        self,
        task: PlanningTask,
        schemas: Sequence[ActionSchema],
        hierarchy: TypeHierarchy,
        config: PlannerConfig = PlannerConfig(),
        excluded: frozenset = frozenset(),
        blocked=frozenset(),
    ):
        self.task = task
        self.base_schemas = tuple(schemas)
        self.h = hierarchy
        self.config = config
        self.excluded = frozenset(excluded)
        self.blocked = blocked  # live view, e.g. a FailureMemory's binding set
        self.returned: set[tuple] = set()
        self.imagination: ImaginationResult | None = None
        self._search_ready = False

    # -- setup ------------------------------------------------------------

    def _prepare(self) -> frozenset | None:
        """Ground, imagine, extract landmarks. Returns unreachable goal atoms
        when the task is hopeless, else None."""
        schemas: Sequence[ActionSchema] = self.base_schemas
        if self.config.use_imagination:
            self.imagination = imagine(
                self.base_schemas, self.h, self.task, self.excluded, self.blocked
            )
            schemas = self.imagination.enhanced
            if not self.imagination.goal_reachable:
                return self.imagination.remaining_unreachable
        self.grounded = ground_all(schemas, self.task, self.h, self.excluded, self.blocked)
        try:
            lms = extract_landmarks(self.task, self.grounded)
        except UnreachableGoalError:
            return frozenset(self.task.goal)
        self.clusters: LandmarkClusters = cluster_landmarks(lms, self.task)
        self._lm_index = {lm.atom: i for i, lm in enumerate(self.clusters.landmarks)}
        self._lm_preds = {
            i: frozenset(self._lm_index[p] for p in lm.preds)
            for i, lm in enumerate(self.clusters.landmarks)
        }
        self._cluster_ids = [
            tuple(self._lm_index[a] for a in seq) for _, seq in self.clusters.clusters
        ]
        self._goal_objects = frozenset(
            o for a in self.task.goal for o in a.objects()
        )
        self._init_search()
        return None

    def _gate(self, reached: frozenset, state: State) -> frozenset:
        """Landmarks reached so far: atom true now (or before) and predecessors reached."""
        out = set(reached)
        changed = True
        while changed:
            changed = False
            for atom, i in self._lm_index.items():
                if i in out:
                    continue
                if atom in state and self._lm_preds[i] <= out:
                    out.add(i)
                    changed = True
        return frozenset(out)

    def _heuristic(self, node: _Node, new_landmark: bool) -> float:
        base = 0.0
        for ids in self._cluster_ids:
            base += sum(1 for i in ids if i not in node.reached)
        if node.action is not None:
            if not (set(node.action.objects()) & self._goal_objects):
                base += self.config.penalty_non_goal_object
            if not new_landmark:
                base += self.config.penalty_no_new_landmark
        return base

    def _init_search(self) -> None:
        self._nodes: list[_Node] = []
        self._open: list[tuple[float, float, int, int]] = []
        self._best_g: dict[State, int] = {}
        self._counter = 0
        self.expansions = 0
        root = _Node(self.task.init, -1, None, 0, frozenset(), 0.0)
        root.reached = self._gate(frozenset(), self.task.init)
        root.h = self._heuristic(root, True)
        self._push(root)
        self._search_ready = True

    def _push(self, node: _Node) -> None:
        self._nodes.append(node)
        idx = len(self._nodes) - 1
        heapq.heappush(
            self._open, (node.g + node.h, node.h, self._counter, idx)
        )
        self._counter += 1

    def _extract_plan(self, idx: int) -> tuple[GroundedAction, ...]:
        plan = []
        while idx >= 0:
            node = self._nodes[idx]
            if node.action is not None:
                plan.append(node.action)
            idx = node.parent
        return tuple(reversed(plan))

    # -- public API ---------------------------------------------------------

    def plan(self) -> PlanResult:
        """First (greedy) plan for the session task."""
        t0 = time.perf_counter()
        unreachable = self._prepare()
        if unreachable is not None:
            return PlanResult(
                "unsolvable", None, self._stats(t0, 0), frozenset(unreachable)
            )
        return self._search(t0)

    def next_plan(self, new_exclusions: frozenset = frozenset()) -> PlanResult:
        """Another, never previously returned plan; new exclusions re-trigger
        grounding and imagination."""
        if not self._search_ready:
            raise RuntimeError("call plan() first")
        t0 = time.perf_counter()
        if new_exclusions or self.blocked:
            self.excluded = self.excluded | frozenset(new_exclusions)
            unreachable = self._prepare()
            if unreachable is not None:
                return PlanResult(
                    "unsolvable", None, self._stats(t0, 0), frozenset(unreachable)
                )
        return self._search(t0)

    def _stats(self, t0: float, plan_len: int) -> dict:
        return {
            "expansions": getattr(self, "expansions", 0),
            "time_s": time.perf_counter() - t0,
            "grounded_actions": len(getattr(self, "grounded", ())),
            "lifted_actions": len(self.base_schemas),
            "imagined_added": len(self.imagination.added) if self.imagination else 0,
            "plan_length": plan_len,
        }

    def _search(self, t0: float) -> PlanResult:
        goal = self.task.goal
        while self._open:
            if self.expansions > self.config.node_budget:
                return PlanResult("budget", None, self._stats(t0, 0))
            f, hh, _, idx = heapq.heappop(self._open)
            node = self._nodes[idx]
            best = self._best_g.get(node.state)
            if best is not None and best < node.g:
                continue
            self._best_g[node.state] = node.g
            if goal <= node.state:
                plan = self._extract_plan(idx)
                key = tuple((g.name, g.binding) for g in plan)
                if key in self.returned:
                    continue
                self.returned.add(key)
                return PlanResult("found", plan, self._stats(t0, len(plan)))
            self.expansions += 1
            for g in self.grounded:
                if not g.pre <= node.state:
                    continue
                nxt = (node.state - g.delete) | g.add
                prev = self._best_g.get(nxt)
                if prev is not None and prev <= node.g + 1:
                    continue
                reached = self._gate(node.reached, nxt)
                child = _Node(nxt, idx, g, node.g + 1, reached, 0.0)
                child.h = self._heuristic(child, len(reached) > len(node.reached))
                self._push(child)
        return PlanResult("unsolvable", None, self._stats(t0, 0))


def plan(
    task: PlanningTask,
    schemas: Sequence[ActionSchema],
    hierarchy: TypeHierarchy,
    config: PlannerConfig = PlannerConfig(),
) -> PlanResult:
    """One-shot convenience wrapper around a fresh session."""
    return PlannerSession(task, schemas, hierarchy, config).plan()
