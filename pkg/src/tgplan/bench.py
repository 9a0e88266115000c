"""Evaluation harness: four-variant comparison over S1-S6, failure scenarios,
and the demonstration-subset study."""

from __future__ import annotations

import csv
import itertools
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .demos import DEMO_SPECS, Demonstration, record_all
from .executor import SolveResult, solve
from .kitchen import KITCHEN_HIERARCHY
from .learner import LearnResult, learn
from .planner import PlannerConfig
from .tasks import EvalTask, all_tasks, scenarios, task_sets

VARIANTS = {
    "individual": (False, False),
    "individual+imagined": (False, True),
    "generalized": (True, False),
    "generalized+imagined": (True, True),
}


@dataclass
class TaskOutcome:
    tid: str
    set_id: str
    variant: str
    solved: bool
    plan_length: int
    proposals: int
    planning_time: float
    grounded_actions: int
    status: str


@dataclass
class ResultRow:
    set_id: str
    variant: str
    solved_fraction: float
    mean_plan_length: float
    max_plan_length: int
    mean_proposals: float
    mean_planning_time: float
    lifted_actions: int
    mean_grounded_actions: float

    def as_dict(self) -> dict:
        return {
            "set": self.set_id,
            "variant": self.variant,
            "solved": round(self.solved_fraction, 3),
            "mean_plan_length": round(self.mean_plan_length, 2),
            "max_plan_length": self.max_plan_length,
            "mean_proposals": round(self.mean_proposals, 2),
            "mean_planning_time_s": round(self.mean_planning_time, 4),
            "lifted_actions": self.lifted_actions,
            "mean_grounded_actions": round(self.mean_grounded_actions, 1),
        }


def run_task(
    task: EvalTask,
    schemas,
    use_imagination: bool,
    config: PlannerConfig | None = None,
    max_proposals: int = 10,
) -> tuple[SolveResult, TaskOutcome]:
    cfg = config or PlannerConfig()
    cfg = PlannerConfig(
        cfg.penalty_non_goal_object,
        cfg.penalty_no_new_landmark,
        cfg.node_budget,
        use_imagination,
    )
    t0 = time.perf_counter()
    result = solve(
        task.planning_task(),
        schemas,
        KITCHEN_HIERARCHY,
        task.kitchen,
        cfg,
        max_proposals=max_proposals,
    )
    elapsed = time.perf_counter() - t0
    solved = result.outcome.status == "success"
    outcome = TaskOutcome(
        task.tid,
        task.set_id,
        "",
        solved,
        len(result.plan or ()),
        result.proposals,
        elapsed,
        result.stats.get("grounded_actions", 0),
        result.outcome.status,
    )
    return result, outcome


def aggregate(outcomes: Sequence[TaskOutcome], lifted: int) -> ResultRow:
    solved = [o for o in outcomes if o.solved]
    return ResultRow(
        outcomes[0].set_id,
        outcomes[0].variant,
        len(solved) / len(outcomes),
        statistics.mean(o.plan_length for o in solved) if solved else 0.0,
        max((o.plan_length for o in solved), default=0),
        statistics.mean(o.proposals for o in solved) if solved else 0.0,
        statistics.mean(o.planning_time for o in outcomes),
        lifted,
        statistics.mean(o.grounded_actions for o in outcomes),
    )


@dataclass
class MatrixResult:
    rows: list[ResultRow]
    outcomes: list[TaskOutcome]
    learned: dict[str, LearnResult] = field(default_factory=dict)

    def row(self, set_id: str, variant: str) -> ResultRow:
        for r in self.rows:
            if r.set_id == set_id and r.variant == variant:
                return r
        raise KeyError((set_id, variant))

    def outcome(self, tid: str, variant: str) -> TaskOutcome:
        for o in self.outcomes:
            if o.tid == tid and o.variant == variant:
                return o
        raise KeyError((tid, variant))


def run_matrix(
    demos: Sequence[Demonstration] | None = None,
    variants: Sequence[str] = tuple(VARIANTS),
    sets: dict[str, tuple[EvalTask, ...]] | None = None,
    config: PlannerConfig | None = None,
) -> MatrixResult:
    """Evaluate every requested variant over every task set."""
    demos = list(demos) if demos is not None else list(record_all())
    sets = sets or task_sets()
    learned = {
        False: learn(demos, KITCHEN_HIERARCHY, generalize=False),
        True: learn(demos, KITCHEN_HIERARCHY, generalize=True),
    }
    rows: list[ResultRow] = []
    outcomes: list[TaskOutcome] = []
    for variant in variants:
        generalize, imagination = VARIANTS[variant]
        schemas = learned[generalize].schemas
        for set_id, tasks in sets.items():
            set_outcomes = []
            for task in tasks:
                _, o = run_task(task, schemas, imagination, config)
                o.variant = variant
                set_outcomes.append(o)
                outcomes.append(o)
            rows.append(aggregate(set_outcomes, len(schemas)))
    return MatrixResult(
        rows, outcomes, {"individual": learned[False], "generalized": learned[True]}
    )


def run_scenarios(
    demos: Sequence[Demonstration] | None = None,
    config: PlannerConfig | None = None,
) -> list[dict]:
    """Broken/exception/faithful scenarios under the full approach."""
    demos = list(demos) if demos is not None else list(record_all())
    schemas = learn(demos, KITCHEN_HIERARCHY, generalize=True).schemas
    out = []
    for task in scenarios():
        result, o = run_task(task, schemas, use_imagination=True, config=config)
        out.append(
            {
                "tid": task.tid,
                "title": task.title,
                "status": result.outcome.status,
                "proposals": result.proposals,
                "plan_length": len(result.plan or ()),
                "plan": [str(g) for g in result.plan or ()],
            }
        )
    return out


def median_planning_times(
    demos: Sequence[Demonstration],
    variant: str,
    tasks: Sequence[EvalTask],
    reps: int = 5,
    config: PlannerConfig | None = None,
) -> tuple[float, float]:
    """(median planning time, mean grounded-action count) over tasks x reps."""
    generalize, imagination = VARIANTS[variant]
    schemas = learn(list(demos), KITCHEN_HIERARCHY, generalize=generalize).schemas
    times = []
    grounded = []
    for task in tasks:
        for _ in range(reps):
            result, o = run_task(task, schemas, imagination, config)
            times.append(o.planning_time)
            grounded.append(o.grounded_actions)
    return statistics.median(times), statistics.mean(grounded)


@dataclass
class SubsetPoint:
    k: int
    combo: tuple[str, ...]
    solved_fraction: float


def subset_study(
    ks: Sequence[int] = tuple(range(2, 9)),
    config: PlannerConfig | None = None,
    tasks: Sequence[EvalTask] | None = None,
) -> list[SubsetPoint]:
    """Learn from every k-subset of the 8 demonstrations and evaluate the full
    approach (generalized+imagined) on all tasks."""
    tasks = list(tasks) if tasks is not None else list(all_tasks())
    demos = record_all()
    points: list[SubsetPoint] = []
    for k in ks:
        for combo in itertools.combinations(range(len(demos)), k):
            subset = [demos[i] for i in combo]
            schemas = learn(subset, KITCHEN_HIERARCHY, generalize=True).schemas
            solved = 0
            for task in tasks:
                _, o = run_task(task, schemas, use_imagination=True, config=config)
                solved += o.solved
            points.append(
                SubsetPoint(
                    k,
                    tuple(DEMO_SPECS[i].task_id for i in combo),
                    solved / len(tasks),
                )
            )
    return points


def subset_summary(points: Sequence[SubsetPoint]) -> list[dict]:
    out = []
    for k in sorted({p.k for p in points}):
        fr = [p.solved_fraction for p in points if p.k == k]
        out.append(
            {
                "k": k,
                "combinations": len(fr),
                "median": statistics.median(fr),
                "min": min(fr),
                "max": max(fr),
            }
        )
    return out


# -- writers ------------------------------------------------------------------


def write_rows(rows: Sequence[ResultRow], out_dir: Path, stem: str = "results") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    data = [r.as_dict() for r in rows]
    (out_dir / f"{stem}.json").write_text(json.dumps(data, indent=2) + "\n")
    with open(out_dir / f"{stem}.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(data[0]))
        writer.writeheader()
        writer.writerows(data)
    (out_dir / f"{stem}.txt").write_text(format_table(rows) + "\n")


def format_table(rows: Sequence[ResultRow]) -> str:
    headers = [
        "set",
        "variant",
        "solved",
        "mean|p|",
        "max|p|",
        "mean#p",
        "time[s]",
        "|A|",
        "|A_g|",
    ]
    cells = [
        [
            r.set_id,
            r.variant,
            f"{r.solved_fraction:.2f}",
            f"{r.mean_plan_length:.1f}",
            str(r.max_plan_length),
            f"{r.mean_proposals:.1f}",
            f"{r.mean_planning_time:.3f}",
            str(r.lifted_actions),
            f"{r.mean_grounded_actions:.0f}",
        ]
        for r in rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for c in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(c, widths)))
    return "\n".join(lines)
