"""Typed first-order atoms, states, effects, action schemas and grounding.

States are plain frozensets of grounded atoms under the closed-world
assumption; everything here is immutable and hashable so the planner can
use states directly as search keys.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Union

from .hierarchy import TypeHierarchy


class Obj(NamedTuple):
    """A concrete object instance, e.g. tomato_1:tomato."""

    name: str
    type: str

    def __str__(self) -> str:
        return f"{self.name}:{self.type}"


class Var(NamedTuple):
    """A typed schema parameter, rendered ?x0:cutboard."""

    index: int
    type: str

    def __str__(self) -> str:
        return f"?x{self.index}:{self.type}"


Term = Union[Obj, Var]


class Atom(NamedTuple):
    """A predicate applied to terms. Grounded iff all terms are objects."""

    name: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    @property
    def is_ground(self) -> bool:
        return all(isinstance(a, Obj) for a in self.args)

    def objects(self) -> tuple[Obj, ...]:
        return tuple(a for a in self.args if isinstance(a, Obj))

    def variables(self) -> tuple[Var, ...]:
        return tuple(a for a in self.args if isinstance(a, Var))

    def substitute(self, sub: dict[Term, Term]) -> Atom:
        return Atom(self.name, tuple(sub.get(a, a) for a in self.args))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "args": [
                {"var": a.index, "type": a.type}
                if isinstance(a, Var)
                else {"obj": a.name, "type": a.type}
                for a in self.args
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Atom:
        args: list[Term] = []
        for a in data["args"]:
            if "var" in a:
                args.append(Var(a["var"], a["type"]))
            else:
                args.append(Obj(a["obj"], a["type"]))
        return cls(data["name"], tuple(args))


State = frozenset  # frozenset[Atom], all grounded

EMPTY_STATE: State = frozenset()


def state_to_list(s: State) -> list[dict]:
    return [a.to_dict() for a in sorted(s)]


def state_from_list(data: Iterable[dict]) -> State:
    return frozenset(Atom.from_dict(d) for d in data)


class Effect(NamedTuple):
    """Add and delete sets of atoms; grounded effects come from state diffs."""

    add: frozenset
    delete: frozenset

    @property
    def is_empty(self) -> bool:
        return not self.add and not self.delete

    def atoms(self) -> frozenset:
        return self.add | self.delete

    def objects(self) -> set[Obj]:
        return {o for a in self.atoms() for o in a.objects()}

    def substitute(self, sub: dict[Term, Term]) -> Effect:
        return Effect(
            frozenset(a.substitute(sub) for a in self.add),
            frozenset(a.substitute(sub) for a in self.delete),
        )

    def to_dict(self) -> dict:
        return {
            "add": [a.to_dict() for a in sorted(self.add)],
            "delete": [a.to_dict() for a in sorted(self.delete)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Effect:
        return cls(
            frozenset(Atom.from_dict(d) for d in data["add"]),
            frozenset(Atom.from_dict(d) for d in data["delete"]),
        )


EMPTY_EFFECT = Effect(frozenset(), frozenset())


def diff(s: State, s_next: State) -> Effect:
    """Grounded effect of a transition: add = s' \\ s, delete = s \\ s'."""
    return Effect(frozenset(s_next - s), frozenset(s - s_next))


class SubstitutionTypeError(ValueError):
    """A variable was bound to an object whose type is not a subtype of the variable's."""


def check_binding(var: Var, obj: Obj, h: TypeHierarchy) -> None:
    if not h.is_subtype(obj.type, var.type):
        raise SubstitutionTypeError(f"{obj} is not a {var.type}")


def substitute_atom(atom: Atom, sub: dict[Term, Term], h: TypeHierarchy | None = None) -> Atom:
    """Replace bound terms; with a hierarchy, reject type-violating bindings."""
    if h is not None:
        for k, v in sub.items():
            if isinstance(k, Var) and isinstance(v, Obj):
                check_binding(k, v, h)
    return atom.substitute(sub)


@dataclass(frozen=True)
class ActionSchema:
    """A lifted action: typed parameters, preconditions and effect.

    provenance is one of "individual", "generalized", "imagined";
    clusters lists the ids of the observation clusters supporting it.
    """

    name: str
    params: tuple[Var, ...]
    pre: frozenset
    effect: Effect
    provenance: str = "individual"
    clusters: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.params:
            raise ValueError(f"{self.name}: params must be non-empty")
        indices = [p.index for p in self.params]
        if sorted(indices) != list(range(len(indices))):
            raise ValueError(f"{self.name}: parameter indices must be 0..n-1")
        if self.effect.add & self.effect.delete:
            raise ValueError(f"{self.name}: add and delete effects overlap")
        param_set = set(self.params)
        for atom in self.pre | self.effect.atoms():
            for v in atom.variables():
                if v not in param_set:
                    raise ValueError(f"{self.name}: unbound variable {v} in {atom}")

    @property
    def primitive(self) -> str:
        """The executor-facing primitive name (prefix before any suffix)."""
        return self.name.split("_")[0]

    def substitute(self, sub: dict[Term, Term]) -> ActionSchema:
        """Rename/retype terms in preconditions and effect (params must be re-given)."""
        params = tuple(sub.get(p, p) for p in self.params)
        return ActionSchema(
            self.name,
            params,
            frozenset(a.substitute(sub) for a in self.pre),
            self.effect.substitute(sub),
            self.provenance,
            self.clusters,
        )

    def signature(self) -> tuple:
        """Identity modulo name/provenance; used for duplicate detection."""
        return (self.params, self.pre, self.effect)

    def __str__(self) -> str:
        pre = ", ".join(str(a) for a in sorted(self.pre))
        add = ", ".join(str(a) for a in sorted(self.effect.add))
        dele = ", ".join(str(a) for a in sorted(self.effect.delete))
        pars = ", ".join(str(p) for p in self.params)
        return f"{self.name}({pars})\n  pre: {pre}\n  add: {add}\n  del: {dele}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": [{"index": p.index, "type": p.type} for p in self.params],
            "pre": [a.to_dict() for a in sorted(self.pre)],
            "effect": self.effect.to_dict(),
            "provenance": self.provenance,
            "clusters": list(self.clusters),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ActionSchema:
        return cls(
            data["name"],
            tuple(Var(p["index"], p["type"]) for p in data["params"]),
            frozenset(Atom.from_dict(d) for d in data["pre"]),
            Effect.from_dict(data["effect"]),
            data.get("provenance", "individual"),
            tuple(data.get("clusters", ())),
        )


@dataclass(frozen=True)
class GroundedAction:
    """A schema plus a total binding, with grounded pre/add/delete precomputed."""

    schema: ActionSchema
    binding: tuple[Obj, ...]
    pre: frozenset = field(compare=False)
    add: frozenset = field(compare=False)
    delete: frozenset = field(compare=False)

    @property
    def name(self) -> str:
        return self.schema.name

    def __str__(self) -> str:
        return f"{self.schema.name}({', '.join(o.name for o in self.binding)})"

    def objects(self) -> tuple[Obj, ...]:
        return self.binding

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.name,
            "binding": [{"obj": o.name, "type": o.type} for o in self.binding],
        }


def ground(schema: ActionSchema, binding: tuple[Obj, ...], h: TypeHierarchy) -> GroundedAction:
    if len(binding) != len(schema.params):
        raise ValueError(f"{schema.name}: binding arity mismatch")
    for var, obj in zip(schema.params, binding):
        check_binding(var, obj, h)
    sub: dict[Term, Term] = dict(zip(schema.params, binding))
    return GroundedAction(
        schema,
        binding,
        frozenset(a.substitute(sub) for a in schema.pre),
        frozenset(a.substitute(sub) for a in schema.effect.add),
        frozenset(a.substitute(sub) for a in schema.effect.delete),
    )


def ground_schema(
    schema: ActionSchema,
    objects: Iterable[Obj],
    h: TypeHierarchy,
    excluded: frozenset = frozenset(),
    blocked: frozenset = frozenset(),
) -> list[GroundedAction]:
    """All injective type-respecting bindings of schema over the objects.

    excluded removes objects wholesale; blocked removes exact
    (schema name, binding names) pairs (failure memory).
    """
    pool = sorted(o for o in objects if o not in excluded)
    candidates = [
        [o for o in pool if h.is_subtype(o.type, p.type)] for p in schema.params
    ]
    out: list[GroundedAction] = []
    chosen: list[Obj] = []

    def backtrack(i: int) -> None:
        if i == len(candidates):
            binding = tuple(chosen)
            if (schema.name, tuple(o.name for o in binding)) not in blocked:
                out.append(ground(schema, binding, h))
            return
        for o in candidates[i]:
            if o in chosen:
                continue
            chosen.append(o)
            backtrack(i + 1)
            chosen.pop()

    backtrack(0)
    return out


def applicable(s: State, g: GroundedAction) -> bool:
    return g.pre <= s


class NotApplicableError(ValueError):
    pass


def apply(s: State, g: GroundedAction) -> State:
    if not applicable(s, g):
        raise NotApplicableError(f"{g} not applicable")
    return (s - g.delete) | g.add


def unify_effects(e1: Effect, e2: Effect) -> dict[Obj, Obj] | None:
    """Bijective same-typed object mapping making e1 equal to e2, if any.

    Among multiple valid bijections the lexicographically smallest is
    returned: objects of e1 are taken in sorted order and candidate image
    tuples are tried in sorted order.
    """
    return extend_object_bijection({}, e1, e2)


def extend_object_bijection(
    base: dict[Obj, Obj], e1: Effect, e2: Effect
) -> dict[Obj, Obj] | None:
    """Extend a partial object mapping to a full bijection unifying the effects."""
    if len(e1.add) != len(e2.add) or len(e1.delete) != len(e2.delete):
        return None
    objs1 = sorted(e1.objects())
    objs2 = sorted(e2.objects())
    if len(objs1) != len(objs2):
        return None
    objs2_set = set(objs2)
    for o in objs1:
        if o in base and base[o] not in objs2_set:
            return None
    used = set(base.values())
    free1 = [o for o in objs1 if o not in base]
    free2 = [o for o in objs2 if o not in used]
    if len(free1) != len(free2):
        return None
    # same-typed images only; try images in sorted order for determinism
    for perm in itertools.permutations(free2):
        if any(a.type != b.type for a, b in zip(free1, perm)):
            continue
        mapping = dict(base)
        mapping.update(zip(free1, perm))
        sub: dict[Term, Term] = dict(mapping)
        if e1.substitute(sub) == e2:
            return mapping
    return None
