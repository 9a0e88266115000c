"""Two-phase action-model learner.

Phase 1 clusters observed transitions by action description and unifiable
effect, lifts each cluster and extracts preconditions as the intersection
of the member states. The intersection is taken over the full states:
atoms about surrounding entities survive (lifted into extra parameters)
whenever they held in every observation, which deliberately over-specializes
single-observation actions.

Phase 2 repeatedly merges pairs of actions with structurally equal effects,
widening parameter types to lowest common ancestors and re-selecting
preconditions from intersection-plus-powerset candidates by recall over the
supporting observations. Context atoms that do not hold across the merged
observations lose recall and are dropped, so generalized actions shed the
over-specialization.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .demos import ActionDesc, Demonstration
from .hierarchy import TypeHierarchy
from .symbolic import (
    ActionSchema,
    Atom,
    Effect,
    Obj,
    State,
    Term,
    Var,
    extend_object_bijection,
)

POWERSET_CAP = 20


class PowersetBlowupError(RuntimeError):
    """Precondition difference too large to enumerate its powerset."""


def atom_key(a: Atom) -> tuple:
    return (
        a.name,
        tuple(
            ("v", t.index, t.type) if isinstance(t, Var) else ("o", t.name, t.type)
            for t in a.args
        ),
    )


def sort_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms, key=atom_key)


class Member(NamedTuple):
    """One observed transition, plus its object mapping into the cluster canon."""

    state: State
    desc: ActionDesc
    effect: Effect
    to_canon: dict[Obj, Obj]

    def universe(self) -> set[Obj]:
        objs = {o for atom in self.state for o in atom.objects()}
        objs.update(self.desc.entities)
        return objs


@dataclass
class ObservationCluster:
    cid: str
    action_name: str
    canonical_desc: tuple[Obj, ...]
    canonical_effect: Effect
    vars: tuple[Var, ...]
    var_of: dict[Obj, Var]
    members: list[Member]

    def lifted_effect(self) -> Effect:
        return self.canonical_effect.substitute(dict(self.var_of))


def cluster_lifted_effects(demos: Sequence[Demonstration]) -> list[ObservationCluster]:
    """Partition all transitions; same cluster iff same action description shape
    and the effects unify under a type-preserving object bijection."""
    clusters: list[ObservationCluster] = []
    seq: dict[str, int] = defaultdict(int)
    for demo in demos:
        for t in demo.transitions:
            eff = t.effect
            placed = False
            for c in clusters:
                if c.action_name != t.desc.name:
                    continue
                if len(c.canonical_desc) != len(t.desc.entities):
                    continue
                base: dict[Obj, Obj] = {}
                ok = True
                for om, oc in zip(t.desc.entities, c.canonical_desc):
                    if om.type != oc.type or base.get(om, oc) != oc:
                        ok = False
                        break
                    base[om] = oc
                if not ok or len(set(base.values())) != len(base):
                    continue
                mapping = extend_object_bijection(base, eff, c.canonical_effect)
                if mapping is None:
                    continue
                mapping.update(base)
                c.members.append(Member(t.state, t.desc, eff, mapping))
                placed = True
                break
            if placed:
                continue
            core = list(t.desc.entities)
            core += [o for o in sorted(eff.objects()) if o not in set(core)]
            variables = tuple(Var(i, o.type) for i, o in enumerate(core))
            cid = f"{t.desc.name}#{seq[t.desc.name]}"
            seq[t.desc.name] += 1
            clusters.append(
                ObservationCluster(
                    cid,
                    t.desc.name,
                    t.desc.entities,
                    eff,
                    variables,
                    dict(zip(core, variables)),
                    [Member(t.state, t.desc, eff, {o: o for o in core})],
                )
            )
    return clusters


def _pair_scenery(
    canonical: Sequence[Obj], scenery: Sequence[Obj]
) -> dict[Obj, Obj]:
    """Match surrounding objects across observations by type, in name order."""
    by_type_c: dict[str, list[Obj]] = defaultdict(list)
    for o in sorted(canonical):
        by_type_c[o.type].append(o)
    pairing: dict[Obj, Obj] = {}
    by_type_m: dict[str, list[Obj]] = defaultdict(list)
    for o in sorted(scenery):
        by_type_m[o.type].append(o)
    for ty, objs in by_type_m.items():
        for om, oc in zip(objs, by_type_c.get(ty, [])):
            pairing[om] = oc
    return pairing


def extract_preconditions(
    cluster: ObservationCluster,
) -> tuple[frozenset, tuple[Var, ...]]:
    """Intersection of the (relabeled) member states; surviving atoms about
    surrounding objects are lifted into extra typed parameters."""
    canon = cluster.members[0]
    core_objs = set(cluster.var_of)
    canon_scenery = sorted(
        {o for a in canon.state for o in a.objects()} - core_objs
    )
    inter: frozenset | None = None
    for m in cluster.members:
        scenery = sorted({o for a in m.state for o in a.objects()} - set(m.to_canon))
        full: dict[Term, Term] = dict(m.to_canon)
        full.update(_pair_scenery(canon_scenery, scenery))
        relabeled = frozenset(
            a.substitute(full)
            for a in m.state
            if all(o in full for o in a.objects())
        )
        inter = relabeled if inter is None else (inter & relabeled)
    assert inter is not None
    used_scenery = sorted(
        {o for a in inter for o in a.objects() if o not in core_objs}
    )
    extras = tuple(
        Var(len(cluster.vars) + i, o.type) for i, o in enumerate(used_scenery)
    )
    lift: dict[Term, Term] = dict(cluster.var_of)
    lift.update(zip(used_scenery, extras))
    pre = frozenset(a.substitute(lift) for a in inter)
    return pre, extras


@dataclass(frozen=True)
class LearnedAction:
    """A schema plus learner bookkeeping: how many leading parameters came from
    the action description/effect (the core), its recall, and its clusters."""

    schema: ActionSchema
    core: int
    score: float
    cluster_ids: tuple[str, ...]


def create_action(cluster: ObservationCluster, name: str) -> ActionSchema:
    pre, extras = extract_preconditions(cluster)
    return ActionSchema(
        name,
        cluster.vars + extras,
        pre,
        cluster.lifted_effect(),
        "individual",
        (cluster.cid,),
    )


def _effect_bindings(
    effect: Effect, member: Member, binding: dict[Var, Obj]
) -> list[dict[Var, Obj]]:
    """All extensions of binding under which the grounded effect equals the
    member effect (several when same-typed parameters admit automorphisms)."""

    def match_side(lifted: list[Atom], grounded: set[Atom], b: dict[Var, Obj]):
        if not lifted:
            yield b
            return
        head, rest = lifted[0], lifted[1:]
        for g in sort_atoms(grounded):
            if g.name != head.name or len(g.args) != len(head.args):
                continue
            nb = dict(b)
            ok = True
            for lt, gt in zip(head.args, g.args):
                if isinstance(lt, Obj):
                    if lt != gt:
                        ok = False
                        break
                else:
                    cur = nb.get(lt)
                    if cur is None:
                        if gt in nb.values():
                            ok = False  # injective
                            break
                        nb[lt] = gt
                    elif cur != gt:
                        ok = False
                        break
            if ok:
                yield from match_side(rest, grounded - {g}, nb)

    if len(effect.add) != len(member.effect.add):
        return []
    if len(effect.delete) != len(member.effect.delete):
        return []
    out = []
    for b1 in match_side(sort_atoms(effect.add), set(member.effect.add), binding):
        for b2 in match_side(
            sort_atoms(effect.delete), set(member.effect.delete), b1
        ):
            out.append(b2)
    return out


def _satisfiable(
    schema: ActionSchema,
    binding: dict[Var, Obj],
    state: State,
    universe: Sequence[Obj],
    h: TypeHierarchy,
) -> bool:
    """Can the remaining parameters be bound (injectively, type-correctly)
    so that all preconditions hold in the state?"""
    unbound = [p for p in schema.params if p not in binding]

    def check_pre(b: dict[Var, Obj]) -> bool:
        for atom in schema.pre:
            if all(not isinstance(t, Var) or t in b for t in atom.args):
                if atom.substitute(dict(b)) not in state:
                    return False
        return True

    if not check_pre(binding):
        return False

    def backtrack(i: int, b: dict[Var, Obj]) -> bool:
        if i == len(unbound):
            return True
        p = unbound[i]
        used = set(b.values())
        for o in universe:
            if o in used or not h.is_subtype(o.type, p.type):
                continue
            nb = dict(b)
            nb[p] = o
            if check_pre(nb):
                if backtrack(i + 1, nb):
                    return True
        return False

    return backtrack(0, dict(binding))


def _seed_binding(
    params: tuple[Var, ...], core: int, member: Member, h: TypeHierarchy
) -> dict[Var, Obj] | None:
    """Core binding pinned by the member's action description."""
    desc_objs = member.desc.entities
    if len(desc_objs) > core:
        return None
    binding: dict[Var, Obj] = {}
    for p, o in zip(params[: len(desc_objs)], desc_objs):
        if not h.is_subtype(o.type, p.type):
            return None
        binding[p] = o
    if len(set(binding.values())) != len(binding):
        return None
    return binding


def match_member(
    schema: ActionSchema, core: int, member: Member, h: TypeHierarchy
) -> bool:
    """True if some grounding consistent with the member's observed objects is
    applicable in the member state and reproduces its effect exactly."""
    seed = _seed_binding(schema.params, core, member, h)
    if seed is None:
        return False
    universe = sorted(member.universe())
    return any(
        _satisfiable(schema, b, member.state, universe, h)
        for b in _effect_bindings(schema.effect, member, seed)
    )


def score_action(
    schema: ActionSchema,
    core: int,
    clusters: Sequence[ObservationCluster],
    h: TypeHierarchy,
) -> float:
    """Recall: fraction of supporting transitions the schema reproduces."""
    total = sum(len(c.members) for c in clusters)
    if total == 0:
        return 0.0
    hits = sum(
        match_member(schema, core, m, h) for c in clusters for m in c.members
    )
    return hits / total


def _erased(effect: Effect) -> tuple[frozenset, frozenset]:
    """Effect structure with parameter types erased (indices kept)."""

    def erase(atoms: frozenset) -> frozenset:
        return frozenset(
            (
                a.name,
                tuple(
                    ("v", t.index) if isinstance(t, Var) else ("o", t.name)
                    for t in a.args
                ),
            )
            for a in atoms
        )

    return erase(effect.add), erase(effect.delete)


def create_gen_pars(
    a_i: LearnedAction, a_j: LearnedAction, h: TypeHierarchy
) -> tuple[str, ...] | None:
    """LCA-widened core parameter types, or None when the effects differ."""
    if a_i.core != a_j.core:
        return None
    if _erased(a_i.schema.effect) != _erased(a_j.schema.effect):
        return None
    return tuple(
        h.lca(p.type, q.type)
        for p, q in zip(a_i.schema.params[: a_i.core], a_j.schema.params[: a_j.core])
    )


def candidate_preconditions(
    pre_i: frozenset, pre_j: frozenset
) -> list[frozenset]:
    """Intersection plus every subset of the difference, by size then lexicographic."""
    inter = pre_i & pre_j
    d = sort_atoms((pre_i | pre_j) - inter)
    if len(d) > POWERSET_CAP:
        raise PowersetBlowupError(f"|difference| = {len(d)} exceeds {POWERSET_CAP}")
    out = []
    for size in range(len(d) + 1):
        for combo in itertools.combinations(d, size):
            out.append(inter | frozenset(combo))
    return out


def _candidates_best_first(pre_i: frozenset, pre_j: frozenset):
    """candidate_preconditions reordered so that the winner under the
    (recall, cardinality, enumeration) ranking is found as early as possible:
    larger candidates first, lexicographic within a size."""
    inter = pre_i & pre_j
    d = sort_atoms((pre_i | pre_j) - inter)
    if len(d) > POWERSET_CAP:
        raise PowersetBlowupError(f"|difference| = {len(d)} exceeds {POWERSET_CAP}")
    for size in range(len(d), -1, -1):
        for combo in itertools.combinations(d, size):
            yield inter | frozenset(combo)


def _renumber(
    core_vars: tuple[Var, ...], pre: frozenset, effect: Effect
) -> tuple[tuple[Var, ...], frozenset, Effect]:
    extras = sorted(
        {v for a in pre for v in a.variables() if v not in set(core_vars)},
        key=lambda v: v.index,
    )
    sub: dict[Term, Term] = {}
    params = list(core_vars)
    for v in extras:
        nv = Var(len(params), v.type)
        sub[v] = nv
        params.append(nv)
    return (
        tuple(params),
        frozenset(a.substitute(sub) for a in pre),
        effect.substitute(sub),
    )


def create_gen_action(
    a_i: LearnedAction,
    a_j: LearnedAction,
    core_types: tuple[str, ...],
    clusters: Sequence[ObservationCluster],
    h: TypeHierarchy,
    name: str,
) -> LearnedAction:
    """Best-recall generalized merge of two actions over the shared parameters."""
    core = a_i.core
    new_core = tuple(Var(i, t) for i, t in enumerate(core_types))
    sub_i: dict[Term, Term] = dict(zip(a_i.schema.params[:core], new_core))
    sub_j: dict[Term, Term] = dict(zip(a_j.schema.params[:core], new_core))
    extras_i = sorted(a_i.schema.params[core:], key=lambda v: (v.type, v.index))
    extras_j = sorted(a_j.schema.params[core:], key=lambda v: (v.type, v.index))
    nxt = core
    by_type_j = defaultdict(list)
    for v in extras_j:
        by_type_j[v.type].append(v)
    for v in extras_i:
        partner = by_type_j[v.type].pop(0) if by_type_j[v.type] else None
        shared = Var(nxt, v.type)
        nxt += 1
        sub_i[v] = shared
        if partner is not None:
            sub_j[partner] = shared
    for vs in by_type_j.values():
        for v in vs:
            sub_j[v] = Var(nxt, v.type)
            nxt += 1
    pre_i = frozenset(a.substitute(sub_i) for a in a_i.schema.pre)
    pre_j = frozenset(a.substitute(sub_j) for a in a_j.schema.pre)
    effect = a_i.schema.effect.substitute(sub_i)
    cluster_ids = tuple(sorted(set(a_i.cluster_ids) | set(a_j.cluster_ids)))
    supporting = [c for c in clusters if c.cid in cluster_ids]
    # the core binding and effect matching are candidate-independent: fix them
    # once per member, then try each candidate's preconditions on top
    contexts = []
    for c in supporting:
        for m in c.members:
            seed = _seed_binding(new_core, core, m, h)
            bindings = (
                [] if seed is None else _effect_bindings(effect, m, seed)
            )
            contexts.append((m, bindings, sorted(m.universe())))
    total = len(contexts)
    best: tuple[float, int] | None = None
    best_schema: ActionSchema | None = None
    # descending size: the first perfect-recall candidate dominates all that
    # follow (they are smaller), and ties within a size keep first-seen,
    # matching the (recall, cardinality, enumeration-order) ranking.
    for cand in _candidates_best_first(pre_i, pre_j):
        params, pre, eff = _renumber(new_core, cand, effect)
        schema = ActionSchema(name, params, pre, eff, "generalized", cluster_ids)
        hits = sum(
            any(_satisfiable(schema, b, m.state, uni, h) for b in bindings)
            for m, bindings, uni in contexts
        )
        v = hits / total if total else 0.0
        key = (v, len(pre))
        if best is None or key > best:
            best = key
            best_schema = schema
        if v >= 1.0 - 1e-12:
            break
    assert best is not None and best_schema is not None
    return LearnedAction(best_schema, core, best[0], cluster_ids)


@dataclass(frozen=True)
class LearnResult:
    actions: tuple[LearnedAction, ...]
    clusters: tuple[ObservationCluster, ...]
    merges: tuple[tuple[str, float, float, float], ...]  # (name, v_i, v_j, v_g)

    @property
    def schemas(self) -> tuple[ActionSchema, ...]:
        return tuple(a.schema for a in self.actions)

    def cluster_map(self) -> dict[str, ObservationCluster]:
        return {c.cid: c for c in self.clusters}


def learn(
    demos: Sequence[Demonstration],
    h: TypeHierarchy,
    generalize: bool = True,
) -> LearnResult:
    """Learn individual actions, then merge to fixpoint when generalize is set."""
    clusters = cluster_lifted_effects(demos)
    registry = {c.cid: c for c in clusters}
    counters: dict[str, int] = defaultdict(int)
    actions: list[LearnedAction] = []
    for c in clusters:
        name = f"{c.action_name}_{counters[c.action_name]}"
        counters[c.action_name] += 1
        schema = create_action(c, name)
        score = score_action(schema, len(c.vars), [c], h)
        actions.append(LearnedAction(schema, len(c.vars), score, (c.cid,)))
    merges: list[tuple[str, float, float, float]] = []
    if generalize:
        gen_seq = 0
        rejected: set[tuple[str, str]] = set()
        while True:
            merged = None
            for i in range(len(actions)):
                for j in range(i + 1, len(actions)):
                    a_i, a_j = actions[i], actions[j]
                    if (a_i.schema.name, a_j.schema.name) in rejected:
                        continue
                    core_types = create_gen_pars(a_i, a_j, h)
                    if core_types is None:
                        continue
                    name = f"{a_i.schema.primitive}_g{gen_seq}"
                    gen = create_gen_action(
                        a_i, a_j, core_types, list(registry.values()), h, name
                    )
                    if gen.score + 1e-9 >= (a_i.score + a_j.score) / 2:
                        merged = (i, j, gen)
                        break
                    rejected.add((a_i.schema.name, a_j.schema.name))
                if merged:
                    break
            if not merged:
                break
            i, j, gen = merged
            assert gen.score + 1e-9 >= (actions[i].score + actions[j].score) / 2
            merges.append((gen.schema.name, actions[i].score, actions[j].score, gen.score))
            actions = [a for k, a in enumerate(actions) if k not in (i, j)]
            actions.append(gen)
            gen_seq += 1
    return LearnResult(tuple(actions), tuple(clusters), tuple(merges))
