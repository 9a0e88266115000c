"""On-the-fly synthesis of type-widened action proposals for unreachable goals.

When a goal atom cannot be reached under delete relaxation, every action
producing that predicate is copied with its parameters widened to lowest
common ancestors: the goal-matched parameter toward the goal object's type,
and any parameter no available object fits toward the nearest-fitting
available objects. Unreachable preconditions of the proposals recurse.
Proposals are session-scoped and unvalidated until executed.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .hierarchy import TypeHierarchy
from .symbolic import (
    ActionSchema,
    Atom,
    GroundedAction,
    Obj,
    State,
    Term,
    Var,
    ground_schema,
)


@dataclass(frozen=True)
class PlanningTask:
    """Objects, initial symbolic state and goal atoms of one problem."""

    objects: frozenset
    init: State
    goal: frozenset

    def __post_init__(self) -> None:
        declared = set(self.objects)
        for atom in self.goal | self.init:
            for o in atom.objects():
                if o not in declared:
                    raise ValueError(f"undeclared object {o} in {atom}")

    def to_dict(self) -> dict:
        return {
            "objects": [{"obj": o.name, "type": o.type} for o in sorted(self.objects)],
            "init": [a.to_dict() for a in sorted(self.init)],
            "goal": [a.to_dict() for a in sorted(self.goal)],
        }


ParamWidening = tuple[tuple[int, str, str], ...]  # (param index, old type, new type)


def reachable_atoms(init: State, grounded: Sequence[GroundedAction]) -> frozenset:
    """Least fixpoint of delete-relaxed application starting from init."""
    atoms = set(init)
    pending = list(grounded)
    changed = True
    while changed:
        changed = False
        remaining = []
        for g in pending:
            if g.pre <= atoms:
                if not g.add <= atoms:
                    atoms |= g.add
                changed = True
            else:
                remaining.append(g)
        pending = remaining
    return frozenset(atoms)


def get_unreachable_goals(task: PlanningTask, grounded: Sequence[GroundedAction]) -> frozenset:
    return frozenset(task.goal - reachable_atoms(task.init, grounded))


def get_potential_actions(schemas: Sequence[ActionSchema], u: Atom) -> list[ActionSchema]:
    """Schemas whose add effect contains u's predicate at u's arity."""
    return [
        a
        for a in schemas
        if any(
            e.name == u.name and len(e.args) == len(u.args) for e in a.effect.add
        )
    ]


def _nearest_widening(param: Var, available: Sequence[Obj], h: TypeHierarchy) -> str:
    """LCA of the parameter type with the nearest-fitting available object type.

    Nearest means the deepest resulting LCA (minimal widening); ties break
    on the type name for determinism.
    """
    best: tuple[int, str] | None = None
    for o in sorted(available):
        t = h.lca(param.type, o.type)
        d = h.depth(t)
        if best is None or d > best[0] or (d == best[0] and t < best[1]):
            best = (d, t)
    return best[1] if best else param.type


def widened_name(source: str, widening: ParamWidening) -> str:
    """Stable, content-derived name so failure memory survives re-imagination."""
    parts = [f"w{i}_{new}" for i, _, new in widening]
    return "_".join([source, *parts])


def create_imagined_action(
    a: ActionSchema,
    u: Atom,
    task: PlanningTask,
    h: TypeHierarchy,
    available: frozenset,
) -> tuple[ActionSchema, ParamWidening] | None:
    """Widened copy of a whose effect can produce u; None if no widening needed."""
    matches = [
        e
        for e in sorted(a.effect.add)
        if e.name == u.name and len(e.args) == len(u.args)
    ]
    if not matches:
        return None
    match = matches[0]
    new_types: dict[Var, str] = {}
    for term, goal_term in zip(match.args, u.args):
        if isinstance(term, Var) and isinstance(goal_term, Obj):
            new_types[term] = h.lca(term.type, goal_term.type)
    for p in a.params:
        if p in new_types:
            continue
        if any(h.is_subtype(o.type, p.type) for o in available):
            continue
        widened = _nearest_widening(p, sorted(available), h)
        if widened != p.type:
            new_types[p] = widened
    widening = tuple(
        (p.index, p.type, new_types[p])
        for p in a.params
        if p in new_types and new_types[p] != p.type
    )
    if not widening:
        return None
    sub: dict[Term, Term] = {
        p: Var(p.index, new_types.get(p, p.type)) for p in a.params
    }
    schema = ActionSchema(
        widened_name(a.name, widening),
        tuple(sub[p] for p in a.params),
        frozenset(atom.substitute(sub) for atom in a.pre),
        a.effect.substitute(sub),
        "imagined",
        a.clusters,
    )
    return schema, widening


def get_unreachable_preconds(
    a_i: ActionSchema,
    task: PlanningTask,
    reachable: frozenset,
    h: TypeHierarchy,
    available: frozenset,
) -> frozenset:
    """Grounded instances of a_i's preconditions (over available objects)
    that are not reachable; these feed the work queue."""
    objs = sorted(available)
    out = set()
    for atom in a_i.pre:
        variables = atom.variables()
        pools = [
            [o for o in objs if h.is_subtype(o.type, v.type)] for v in variables
        ]
        for combo in itertools.product(*pools):
            if len(set(combo)) != len(combo):
                continue
            grounded = atom.substitute(dict(zip(variables, combo)))
            if grounded not in reachable:
                out.add(grounded)
    return frozenset(out)


def create_substituted_actions(
    schemas: Sequence[ActionSchema],
    source: ActionSchema,
    widening: ParamWidening,
) -> list[ActionSchema]:
    """Propagate a widening to every schema with source's exact parameter type list."""
    source_types = tuple(p.type for p in source.params)
    new_types = {idx: new for idx, _, new in widening}
    existing = {s.signature() for s in schemas}
    out = []
    for b in schemas:
        if b is source:
            continue
        if tuple(p.type for p in b.params) != source_types:
            continue
        sub: dict[Term, Term] = {
            p: Var(p.index, new_types.get(p.index, p.type)) for p in b.params
        }
        schema = ActionSchema(
            widened_name(b.name, widening),
            tuple(sub[p] for p in b.params),
            frozenset(a.substitute(sub) for a in b.pre),
            b.effect.substitute(sub),
            "imagined",
            b.clusters,
        )
        if schema.signature() in existing:
            continue
        existing.add(schema.signature())
        out.append(schema)
    return out


@dataclass(frozen=True)
class ImaginationResult:
    enhanced: tuple[ActionSchema, ...]
    added: tuple[tuple[ActionSchema, ActionSchema, ParamWidening], ...]
    remaining_unreachable: frozenset

    @property
    def goal_reachable(self) -> bool:
        return not self.remaining_unreachable

    def to_dict(self) -> dict:
        return {
            "added": [
                {
                    "schema": schema.name,
                    "source": source.name,
                    "widening": [
                        {"param": i, "from": old, "to": new} for i, old, new in w
                    ],
                }
                for schema, source, w in self.added
            ],
            "remaining_unreachable": [a.to_dict() for a in sorted(self.remaining_unreachable)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def imagine(
    schemas: Sequence[ActionSchema],
    h: TypeHierarchy,
    task: PlanningTask,
    excluded: frozenset = frozenset(),
    blocked: frozenset = frozenset(),
) -> ImaginationResult:
    """Work-queue widening loop; returns the enhanced set and what is still out
    of reach. Never mutates or removes existing schemas."""
    available = frozenset(o for o in task.objects if o not in excluded)
    current: list[ActionSchema] = list(schemas)
    added: list[tuple[ActionSchema, ActionSchema, ParamWidening]] = []

    def ground_all() -> list[GroundedAction]:
        out = []
        for s in current:
            out.extend(ground_schema(s, available, h, blocked=blocked))
        return out

    reach = reachable_atoms(task.init, ground_all())
    queue = deque(sorted(task.goal - reach, key=lambda a: (a.name, a.args)))
    visited: set[Atom] = set()
    while queue:
        u = queue.popleft()
        if u in visited:
            continue
        visited.add(u)
        if u in reach:
            continue
        signatures = {s.signature() for s in current}
        for a in list(get_potential_actions(current, u)):
            made = create_imagined_action(a, u, task, h, available)
            if made is None:
                continue
            schema, widening = made
            if schema.signature() in signatures:
                continue
            signatures.add(schema.signature())
            current.append(schema)
            added.append((schema, a, widening))
            for sub_schema in create_substituted_actions(current, a, widening):
                signatures.add(sub_schema.signature())
                current.append(sub_schema)
                added.append((sub_schema, a, widening))
            reach = reachable_atoms(task.init, ground_all())
            for atom in sorted(
                get_unreachable_preconds(schema, task, reach, h, available),
                key=lambda x: (x.name, x.args),
            ):
                queue.append(atom)
    reach = reachable_atoms(task.init, ground_all())
    return ImaginationResult(
        tuple(current), tuple(added), frozenset(task.goal - reach)
    )
