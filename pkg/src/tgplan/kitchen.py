"""Deterministic grid kitchen: low-level states, primitives and the symbolic parser.

The agent walks on floor cells; items sit on counter cells along the walls.
Movement uses turn-then-move semantics: a MOVE in a direction the agent is
not facing only turns it. PICK/PLACE/USE act on the cell in front of the
agent. Agent position and facing are not part of the symbolic vocabulary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

from .hierarchy import TypeHierarchy
from .symbolic import Atom, Effect, GroundedAction, Obj, State, diff

KITCHEN_HIERARCHY = TypeHierarchy.from_edges(
    "entity",
    {
        "entity": ["agent", "plate", "tool", "food"],
        "tool": ["cutboard", "machete", "breadslicer", "blender", "toaster"],
        "food": ["vegetable", "fruit", "bread"],
        "vegetable": ["lettuce", "tomato", "onion", "carrot", "cucumber"],
        "fruit": ["banana", "coconut", "apple"],
    },
)

# attribute name -> value domain, by entity category
FOOD_ATTRIBUTES: dict[str, tuple[str, ...]] = {
    "chop_state": ("Fresh", "Chopped"),
    "blend_state": ("Fresh", "Blended"),
    "toast_state": ("Fresh", "Toasted"),
}
CONTENT_STATES = ("Empty", "One", "Two")
HAND_STATES = ("Empty", "Full")
PLACE_STATES = ("Free", "Stored")  # loose on a counter vs held/inside something

# tool type -> (attribute flipped by USE, fresh value, processed value)
TOOL_EFFECTS: dict[str, tuple[str, str, str]] = {
    "cutboard": ("chop_state", "Fresh", "Chopped"),
    "machete": ("chop_state", "Fresh", "Chopped"),
    "breadslicer": ("chop_state", "Fresh", "Chopped"),
    "blender": ("blend_state", "Fresh", "Blended"),
    "toaster": ("toast_state", "Fresh", "Toasted"),
}
TOOL_CAPACITY = 2  # uniform: symbolic content counts stay faithful across tools

DIRECTIONS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
DIR_ORDER = ("N", "E", "S", "W")
MOVES = {f"MOVE_{d}": d for d in DIR_ORDER}
PRIMITIVES = tuple(MOVES) + ("PICK", "PLACE", "USE")


def is_food(h: TypeHierarchy, t: str) -> bool:
    return h.is_subtype(t, "food")


def is_tool(h: TypeHierarchy, t: str) -> bool:
    return h.is_subtype(t, "tool")


class InteractionEvent(NamedTuple):
    """A primitive that changed the world: kind plus the entities involved."""

    kind: str
    entities: tuple[str, ...]


class UnreachableTargetError(RuntimeError):
    pass


class ExecutionPolicyError(RuntimeError):
    pass


@dataclass
class Entity:
    name: str
    type: str
    pos: tuple[int, int] | None
    attrs: dict[str, str] = field(default_factory=dict)
    container: str | None = None

    @property
    def obj(self) -> Obj:
        return Obj(self.name, self.type)


@dataclass(frozen=True)
class SimConfig:
    """Failure injection: broken entities and no-effect (tool type, food type) pairs."""

    broken: frozenset[str] = frozenset()
    exceptions: frozenset[tuple[str, str]] = frozenset()

    def to_dict(self) -> dict:
        return {
            "broken": sorted(self.broken),
            "exceptions": sorted(list(p) for p in self.exceptions),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SimConfig:
        return cls(
            frozenset(data.get("broken", ())),
            frozenset(tuple(p) for p in data.get("exceptions", ())),
        )


class Kitchen:
    """One kitchen instance. Mutable; supports cloning for rollouts."""

    def __init__(
        self,
        width: int,
        height: int,
        counters: Iterable[tuple[int, int]],
        entities: Iterable[Entity],
        agent_pos: tuple[int, int],
        agent_facing: str = "N",
        config: SimConfig = SimConfig(),
        hierarchy: TypeHierarchy = KITCHEN_HIERARCHY,
    ):
        self.width = width
        self.height = height
        self.counters = frozenset(counters)
        self.entities: dict[str, Entity] = {}
        for e in entities:
            if e.name in self.entities:
                raise ValueError(f"duplicate entity {e.name}")
            self.entities[e.name] = e
        self.agent_name = "agent_1"
        self.agent_pos = agent_pos
        self.agent_facing = agent_facing
        self.held: str | None = None
        self.config = config
        self.h = hierarchy

    # -- topology ---------------------------------------------------------

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def is_floor(self, pos: tuple[int, int]) -> bool:
        return self.in_bounds(pos) and pos not in self.counters

    def front_cell(self) -> tuple[int, int]:
        dx, dy = DIRECTIONS[self.agent_facing]
        return (self.agent_pos[0] + dx, self.agent_pos[1] + dy)

    def entity_at(self, pos: tuple[int, int]) -> Entity | None:
        for name in sorted(self.entities):
            e = self.entities[name]
            if e.pos == pos:
                return e
        return None

    def contents_of(self, name: str) -> list[Entity]:
        return [
            self.entities[n]
            for n in sorted(self.entities)
            if self.entities[n].container == name
        ]

    def capacity(self, e: Entity) -> int:
        return TOOL_CAPACITY

    # -- primitives -------------------------------------------------------

    def step(self, prim: str) -> InteractionEvent | None:
        """Execute one primitive; returns an event when the world changed."""
        if prim in MOVES:
            d = MOVES[prim]
            if self.agent_facing != d:
                self.agent_facing = d
                return None
            nxt = self.front_cell()
            if self.is_floor(nxt):
                self.agent_pos = nxt
            return None
        if prim == "PICK":
            return self._pick()
        if prim == "PLACE":
            return self._place()
        if prim == "USE":
            return self._use()
        return None  # unknown primitives are no-ops

    def _pick(self, wanted: str | None = None) -> InteractionEvent | None:
        if self.held is not None:
            return None
        target = self.entity_at(self.front_cell())
        if target is None:
            return None
        if is_food(self.h, target.type) and target.container is None:
            self.held = target.name
            target.pos = None
            return InteractionEvent("PICK", (self.agent_name, target.name))
        if is_tool(self.h, target.type):
            contents = self.contents_of(target.name)
            if not contents:
                return None
            item = contents[0]
            if wanted is not None:
                matches = [c for c in contents if c.name == wanted]
                if not matches:
                    return None
                item = matches[0]
            item.container = None
            self.held = item.name
            return InteractionEvent("PICK", (self.agent_name, target.name, item.name))
        return None  # plates and agents are not pick sources

    def _place(self) -> InteractionEvent | None:
        if self.held is None:
            return None
        cell = self.front_cell()
        held = self.entities[self.held]
        target = self.entity_at(cell)
        if target is None:
            if cell in self.counters:
                held.pos = cell
                self.held = None
                return InteractionEvent("PLACE", (self.agent_name, held.name))
            return None
        if is_tool(self.h, target.type):
            if len(self.contents_of(target.name)) >= self.capacity(target):
                return None
            held.container = target.name
            self.held = None
            return InteractionEvent("PLACE", (self.agent_name, target.name, held.name))
        if target.type == "plate":
            held.container = target.name
            self.held = None
            return InteractionEvent("PLACE", (self.agent_name, target.name, held.name))
        return None

    def _use(self) -> InteractionEvent | None:
        target = self.entity_at(self.front_cell())
        if target is None or not is_tool(self.h, target.type):
            return None
        if target.name in self.config.broken:
            return None
        attr, fresh, done = TOOL_EFFECTS[target.type]
        flipped = []
        for item in self.contents_of(target.name):
            if (target.type, item.type) in self.config.exceptions:
                continue
            if item.attrs.get(attr) == fresh:
                item.attrs[attr] = done
                flipped.append(item.name)
        if not flipped:
            return None
        return InteractionEvent("USE", (self.agent_name, target.name, *flipped))

    # -- symbolic parse ---------------------------------------------------

    def parse(self) -> State:
        """All grounded atoms that hold in the current low-level state."""
        atoms: set[Atom] = set()
        agent = Obj(self.agent_name, "agent")
        hand = "Empty" if self.held is None else "Full"
        atoms.add(Atom(f"hand_state_{hand}", (agent,)))
        if self.held is not None:
            atoms.add(Atom("holding", (agent, self.entities[self.held].obj)))
        for name in sorted(self.entities):
            e = self.entities[name]
            for attr in sorted(e.attrs):
                value = e.attrs[attr]
                domain = FOOD_ATTRIBUTES.get(attr)
                if domain is not None and value not in domain:
                    raise ValueError(f"{name}.{attr}={value} outside domain")
                atoms.add(Atom(f"{attr}_{value}", (e.obj,)))
            if is_food(self.h, e.type):
                free = e.container is None and self.held != name
                atoms.add(
                    Atom(f"place_state_{PLACE_STATES[0 if free else 1]}", (e.obj,))
                )
            if is_tool(self.h, e.type):
                contents = self.contents_of(name)
                atoms.add(
                    Atom(f"content_state_{CONTENT_STATES[len(contents)]}", (e.obj,))
                )
                for item in contents:
                    atoms.add(Atom("content_holds", (e.obj, item.obj)))
            elif e.type == "plate":
                for item in self.contents_of(name):
                    atoms.add(Atom("served_holds", (e.obj, item.obj)))
        return frozenset(atoms)

    def objects(self) -> frozenset:
        objs = {e.obj for e in self.entities.values()}
        objs.add(Obj(self.agent_name, "agent"))
        return frozenset(objs)

    # -- navigation and symbolic execution ---------------------------------

    def _bfs_to_adjacent(self, target_cell: tuple[int, int]) -> list[str] | None:
        """Shortest move-direction sequence to a floor cell adjacent to target.

        Neighbour expansion order is N < E < S < W, which fixes tie-breaks.
        """
        goals = set()
        for d in DIR_ORDER:
            dx, dy = DIRECTIONS[d]
            cell = (target_cell[0] - dx, target_cell[1] - dy)
            if self.is_floor(cell):
                goals.add(cell)
        if not goals:
            return None
        start = self.agent_pos
        if start in goals:
            return []
        frontier = [start]
        came: dict[tuple[int, int], tuple[tuple[int, int], str]] = {}
        seen = {start}
        while frontier:
            nxt_frontier = []
            for cell in frontier:
                for d in DIR_ORDER:
                    dx, dy = DIRECTIONS[d]
                    nxt = (cell[0] + dx, cell[1] + dy)
                    if nxt in seen or not self.is_floor(nxt):
                        continue
                    seen.add(nxt)
                    came[nxt] = (cell, d)
                    if nxt in goals:
                        path = []
                        cur = nxt
                        while cur != start:
                            cur, d0 = came[cur]
                            path.append(d0)
                        return list(reversed(path))
                    nxt_frontier.append(nxt)
            frontier = nxt_frontier
        return None

    def _go_face(self, target_cell: tuple[int, int]) -> None:
        path = self._bfs_to_adjacent(target_cell)
        if path is None:
            raise UnreachableTargetError(f"no path to {target_cell}")
        for d in path:
            if self.agent_facing != d:
                self.step(f"MOVE_{d}")
            self.step(f"MOVE_{d}")
        dx = target_cell[0] - self.agent_pos[0]
        dy = target_cell[1] - self.agent_pos[1]
        for d, vec in DIRECTIONS.items():
            if vec == (dx, dy):
                if self.agent_facing != d:
                    self.step(f"MOVE_{d}")
                return
        raise ExecutionPolicyError("not adjacent after navigation")

    def _locate(self, name: str) -> tuple[int, int]:
        e = self.entities[name]
        if e.pos is not None:
            return e.pos
        if e.container is not None:
            return self._locate(e.container)
        raise ExecutionPolicyError(f"{name} is held; it has no cell")

    def execute_symbolic(self, g: GroundedAction) -> Effect:
        """Navigate and run the primitive realizing g; returns the observed effect."""
        before = self.parse()
        prim = g.schema.primitive
        if prim == "PICK":
            item = self._action_item(g)
            ent = self.entities[item]
            if ent.container is not None:
                self._go_face(self._locate(ent.container))
                self._pick(wanted=item)
            else:
                self._go_face(self._locate(item))
                self.step("PICK")
        elif prim == "PLACE":
            dest = self._place_destination(g)
            self._go_face(self._locate(dest))
            self.step("PLACE")
        elif prim == "USE":
            item = self._action_item(g)
            ent = self.entities[item]
            if ent.container is None:
                raise ExecutionPolicyError(f"USE target {item} is not in a tool")
            self._go_face(self._locate(ent.container))
            self.step("USE")
        else:
            raise ExecutionPolicyError(f"unknown primitive {prim}")
        return diff(before, self.parse())

    def _action_item(self, g: GroundedAction) -> str:
        for atom in sorted(g.add):
            if atom.name == "holding":
                return atom.args[1].name
            if atom.name.startswith(("chop_state", "blend_state", "toast_state")):
                return atom.args[0].name
        raise ExecutionPolicyError(f"cannot derive item of {g}")

    def _place_destination(self, g: GroundedAction) -> str:
        for atom in g.add:
            if atom.name in ("content_holds", "served_holds"):
                return atom.args[0].name
        raise ExecutionPolicyError(f"cannot derive destination of {g}")

    # -- misc ---------------------------------------------------------------

    def clone(self) -> Kitchen:
        k = Kitchen(
            self.width,
            self.height,
            self.counters,
            [replace(e, attrs=dict(e.attrs)) for e in self.entities.values()],
            self.agent_pos,
            self.agent_facing,
            self.config,
            self.h,
        )
        k.held = self.held
        return k

    def ascii(self) -> str:
        rows = []
        by_pos = {e.pos: e for e in self.entities.values() if e.pos is not None}
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.agent_pos:
                    row.append("A")
                elif (x, y) in by_pos:
                    row.append(by_pos[(x, y)].name[0].upper())
                elif (x, y) in self.counters:
                    row.append("#")
                else:
                    row.append(".")
            rows.append("".join(row))
        return "\n".join(rows)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "counters": sorted(list(c) for c in self.counters),
            "agent": {
                "pos": list(self.agent_pos),
                "facing": self.agent_facing,
                "held": self.held,
            },
            "entities": [
                {
                    "name": e.name,
                    "type": e.type,
                    "pos": list(e.pos) if e.pos else None,
                    "attrs": dict(sorted(e.attrs.items())),
                    "container": e.container,
                }
                for _, e in sorted(self.entities.items())
            ],
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Kitchen:
        k = cls(
            data["width"],
            data["height"],
            [tuple(c) for c in data["counters"]],
            [
                Entity(
                    e["name"],
                    e["type"],
                    tuple(e["pos"]) if e["pos"] else None,
                    dict(e["attrs"]),
                    e.get("container"),
                )
                for e in data["entities"]
            ],
            tuple(data["agent"]["pos"]),
            data["agent"]["facing"],
            SimConfig.from_dict(data["config"]),
        )
        k.held = data["agent"]["held"]
        return k

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def default_attrs(entity_type: str, h: TypeHierarchy = KITCHEN_HIERARCHY) -> dict[str, str]:
    if is_food(h, entity_type):
        return {attr: dom[0] for attr, dom in FOOD_ATTRIBUTES.items()}
    return {}


def make_kitchen(
    roster: Iterable[tuple[str, str]],
    config: SimConfig = SimConfig(),
    offset: int = 0,
    size: int = 7,
) -> Kitchen:
    """Square room with counters along the walls; items placed clockwise.

    offset rotates the placement slots, varying positions without changing
    the symbolic content of the initial state.
    """
    counters = {
        (x, y)
        for x in range(size)
        for y in range(size)
        if x in (0, size - 1) or y in (0, size - 1)
    }
    # corner counters are not adjacent to the floor; skip them for placement
    slots = (
        [(x, 0) for x in range(1, size - 1)]
        + [(size - 1, y) for y in range(1, size - 1)]
        + [(x, size - 1) for x in range(size - 2, 0, -1)]
        + [(0, y) for y in range(size - 2, 0, -1)]
    )
    roster = list(roster)
    if len(roster) > len(slots):
        raise ValueError("room too small for roster")
    entities = []
    for i, (name, etype) in enumerate(roster):
        pos = slots[(offset + 2 * i) % len(slots)]
        if any(e.pos == pos for e in entities):
            pos = slots[(offset + 2 * i + 1) % len(slots)]
        if any(e.pos == pos for e in entities):
            raise ValueError("placement collision; adjust offset")
        entities.append(Entity(name, etype, pos, default_attrs(etype)))
    center = (size // 2, size // 2)
    return Kitchen(size, size, counters, entities, center, "N", config)
