"""Monitored plan execution with object exclusion, failure memory and replanning.

Each plan proposal is executed step by step in the simulator; after every
step the observed effect must equal the expected one, otherwise execution
aborts, the non-goal objects of the failed action are excluded, the exact
grounding is remembered, and the planner is asked for the next proposal.
Aborted proposals are abandoned wholesale: the next proposal starts from the
task's initial situation in a fresh simulator instance, matching the
planner's unchanged initial state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .hierarchy import TypeHierarchy
from .imagination import PlanningTask
from .kitchen import Kitchen, UnreachableTargetError
from .planner import PlannerConfig, PlannerSession, PlanResult
from .symbolic import ActionSchema, Effect, EMPTY_EFFECT, GroundedAction, Obj


@dataclass
class FailureMemory:
    """Exact (schema name, binding) pairs that failed; never retried."""

    entries: set = field(default_factory=set)

    def add(self, g: GroundedAction) -> None:
        self.entries.add((g.name, tuple(o.name for o in g.binding)))

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def to_list(self) -> list:
        return [{"schema": s, "binding": list(b)} for s, b in sorted(self.entries)]


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str  # "success" | "mismatch" | "exhausted" | "unsolvable"
    executed: int = 0
    mismatch_step: int | None = None
    expected: Effect | None = None
    observed: Effect | None = None
    involved: tuple[Obj, ...] = ()

    def __post_init__(self) -> None:
        if (self.status == "mismatch") != (self.mismatch_step is not None):
            raise ValueError("mismatch_step present iff status is mismatch")


def run_plan(
    plan: Sequence[GroundedAction], kitchen: Kitchen, goal: frozenset
) -> ExecutionOutcome:
    """Execute in order; abort on the first expected/observed effect mismatch."""
    for i, g in enumerate(plan):
        before = kitchen.parse()
        expected = Effect(g.add - before, frozenset(g.delete & before))
        try:
            observed = kitchen.execute_symbolic(g)
        except UnreachableTargetError:
            observed = EMPTY_EFFECT
        if observed != expected:
            return ExecutionOutcome(
                "mismatch", i, i, expected, observed, tuple(g.binding)
            )
    final = kitchen.parse()
    if not goal <= final:
        raise AssertionError("all effects matched but the goal does not hold")
    return ExecutionOutcome("success", len(plan))


@dataclass(frozen=True)
class SolveResult:
    outcome: ExecutionOutcome
    proposals: int  # plans executed (1 + mismatches on success)
    plan: tuple[GroundedAction, ...] | None
    stats: dict
    trace: tuple[dict, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "status": self.outcome.status,
                "proposals": self.proposals,
                "plan": [g.to_dict() for g in self.plan or ()],
                "stats": self.stats,
                "trace": list(self.trace),
            },
            indent=2,
            sort_keys=True,
        )


def solve(
    task: PlanningTask,
    schemas: Sequence[ActionSchema],
    hierarchy: TypeHierarchy,
    kitchen_factory: Callable[[], Kitchen],
    config: PlannerConfig = PlannerConfig(),
    max_proposals: int = 10,
) -> SolveResult:
    """Plan-execute-replan loop until success, proposal cap or planner exhaustion."""
    memory = FailureMemory()
    session = PlannerSession(
        task, schemas, hierarchy, config, blocked=memory.entries
    )
    trace: list[dict] = []
    exclusions: frozenset = frozenset()
    proposals = 0
    last_stats: dict = {}
    result: PlanResult | None = None
    for attempt in range(max_proposals):
        result = session.plan() if attempt == 0 else session.next_plan(exclusions)
        last_stats = result.stats
        if not result.found:
            trace.append({"planner": result.status})
            return SolveResult(
                ExecutionOutcome(result.status), proposals, None, last_stats, tuple(trace)
            )
        kitchen = kitchen_factory()
        outcome = run_plan(result.plan, kitchen, task.goal)
        proposals += 1
        trace.append(
            {
                "plan": [str(g) for g in result.plan],
                "status": outcome.status,
                "mismatch_step": outcome.mismatch_step,
            }
        )
        if outcome.status == "success":
            return SolveResult(outcome, proposals, result.plan, last_stats, tuple(trace))
        failed = result.plan[outcome.mismatch_step]
        memory.add(failed)
        # A failed unvalidated proposal refutes the proposal, not the object:
        # its exact grounding is remembered, but the object stays usable.
        # For learned actions the object itself is the suspect (broken tool).
        if failed.schema.provenance == "imagined":
            newly = frozenset()
        else:
            goal_objects = {o for a in task.goal for o in a.objects()}
            newly = frozenset(
                o
                for o in failed.binding
                if o.type != "agent" and o not in goal_objects
            )
        exclusions = newly
        trace[-1]["excluded"] = sorted(o.name for o in newly)
    return SolveResult(
        ExecutionOutcome("exhausted"), proposals, None, last_stats, tuple(trace)
    )
