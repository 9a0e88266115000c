"""Ordered landmark extraction by backchaining over the delete-relaxed graph,
and clustering of landmarks into per-goal-object sequences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .imagination import PlanningTask
from .symbolic import Atom, GroundedAction


class UnreachableGoalError(RuntimeError):
    """The goal cannot be reached even under delete relaxation."""


def relaxed_levels(
    init: frozenset, grounded: Sequence[GroundedAction]
) -> dict[Atom, int]:
    """First relaxed-graph level at which each atom becomes true."""
    levels: dict[Atom, int] = {a: 0 for a in init}
    pending = list(grounded)
    level = 0
    while True:
        level += 1
        new_atoms: set[Atom] = set()
        remaining = []
        for g in pending:
            if all(p in levels for p in g.pre):
                new_atoms.update(a for a in g.add if a not in levels)
            else:
                remaining.append(g)
        applied = len(pending) - len(remaining)
        if not new_atoms and applied == 0:
            return levels
        for a in new_atoms:
            levels[a] = level
        pending = remaining
        if not new_atoms:
            return levels


@dataclass(frozen=True)
class Landmark:
    """A grounded atom every solution must make true, with its predecessors."""

    atom: Atom
    preds: frozenset
    level: int


def extract_landmarks(
    task: PlanningTask, grounded: Sequence[GroundedAction]
) -> tuple[Landmark, ...]:
    """Goal atoms are landmarks; an atom required by every first achiever of a
    landmark is itself a landmark ordered before it. Orders follow strictly
    decreasing relaxed levels, so the graph is acyclic."""
    levels = relaxed_levels(task.init, grounded)
    missing = [a for a in task.goal if a not in levels]
    if missing:
        raise UnreachableGoalError(f"unreachable goal atoms: {sorted(missing, key=str)}")
    preds: dict[Atom, set[Atom]] = {}
    queue = sorted(task.goal, key=lambda a: (a.name, a.args))
    while queue:
        atom = queue.pop(0)
        if atom in preds:
            continue
        preds[atom] = set()
        lvl = levels[atom]
        if lvl == 0:
            continue
        achievers = [
            g
            for g in grounded
            if atom in g.add
            and all(p in levels and levels[p] < lvl for p in g.pre)
        ]
        if not achievers:
            continue
        shared = set.intersection(*(set(g.pre) for g in achievers))
        for p in sorted(shared, key=lambda a: (a.name, a.args)):
            if levels[p] < lvl:
                preds[atom].add(p)
                queue.append(p)
    return tuple(
        Landmark(a, frozenset(ps), levels[a])
        for a, ps in sorted(preds.items(), key=lambda kv: (kv[0].name, kv[0].args))
    )


@dataclass(frozen=True)
class LandmarkClusters:
    """One ordered landmark sequence per goal object (shared landmarks repeat)."""

    clusters: tuple[tuple[str, tuple[Atom, ...]], ...]
    landmarks: tuple[Landmark, ...]

    def total(self) -> int:
        return sum(len(seq) for _, seq in self.clusters)


def cluster_landmarks(lms: Sequence[Landmark], task: PlanningTask) -> LandmarkClusters:
    goal_objects = sorted({o for a in task.goal for o in a.objects()})
    by_level = sorted(lms, key=lambda lm: (lm.level, lm.atom.name, lm.atom.args))
    clusters = []
    for obj in goal_objects:
        seq = tuple(
            lm.atom
            for lm in by_level
            if obj in lm.atom.objects()
            or not any(go in lm.atom.objects() for go in goal_objects)
        )
        clusters.append((obj.name, seq))
    if not clusters:  # goal-free task: keep one catch-all sequence
        clusters.append(("", tuple(lm.atom for lm in by_level)))
    return LandmarkClusters(tuple(clusters), tuple(lms))
