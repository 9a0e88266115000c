"""The eight scripted training demonstrations and their recorder.

Each demonstration runs in its own small room containing the entities the
task touches (plus, for the cutting tasks, one untouched food item of
another type sitting on a counter, as a real kitchen scene would have).
Recorded transitions keep only primitives with a non-empty symbolic effect;
pure movement never appears.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .kitchen import Kitchen, SimConfig, make_kitchen
from .symbolic import Atom, Effect, Obj, State, diff, state_from_list, state_to_list


class ActionDesc(NamedTuple):
    """What the demonstrator did: primitive name and the entities involved."""

    name: str
    entities: tuple[Obj, ...]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "entities": [{"obj": o.name, "type": o.type} for o in self.entities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ActionDesc:
        return cls(
            data["name"], tuple(Obj(e["obj"], e["type"]) for e in data["entities"])
        )


class Transition(NamedTuple):
    state: State
    desc: ActionDesc
    next_state: State

    @property
    def effect(self) -> Effect:
        return diff(self.state, self.next_state)


@dataclass(frozen=True)
class Demonstration:
    task_id: str
    transitions: tuple[Transition, ...]

    def __post_init__(self) -> None:
        for i, t in enumerate(self.transitions):
            if t.effect.is_empty:
                raise ValueError(f"{self.task_id}: empty effect at step {i}")
            if i + 1 < len(self.transitions):
                if t.next_state != self.transitions[i + 1].state:
                    raise ValueError(f"{self.task_id}: broken chaining at step {i}")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "transitions": [
                {
                    "state": state_to_list(t.state),
                    "action": t.desc.to_dict(),
                    "next_state": state_to_list(t.next_state),
                }
                for t in self.transitions
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Demonstration:
        return cls(
            data["task_id"],
            tuple(
                Transition(
                    state_from_list(t["state"]),
                    ActionDesc.from_dict(t["action"]),
                    state_from_list(t["next_state"]),
                )
                for t in data["transitions"]
            ),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> Demonstration:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DemoSpec:
    """A scripted task: room roster, step script and the goal it achieves."""

    task_id: str
    title: str
    roster: tuple[tuple[str, str], ...]
    script: tuple[tuple[str, str], ...]  # (primitive, target entity)
    goal: tuple[Atom, ...]


def _types(roster: tuple[tuple[str, str], ...]) -> dict[str, str]:
    return dict(roster)


def _pipeline(item: str, tool: str, plate: str) -> tuple[tuple[str, str], ...]:
    """pick item, load the tool, use it, unload, serve."""
    return (
        ("PICK", item),
        ("PLACE", tool),
        ("USE", tool),
        ("PICK", item),
        ("PLACE", plate),
    )


def _goal(roster, item: str, state_atom: str, plate: str) -> tuple[Atom, ...]:
    t = _types(roster)
    return (
        Atom(state_atom, (Obj(item, t[item]),)),
        Atom("served_holds", (Obj(plate, t[plate]), Obj(item, t[item]))),
    )


def _spec(task_id, title, roster, script, goals) -> DemoSpec:
    merged: tuple[Atom, ...] = ()
    for item, atom_name in goals:
        merged += _goal(roster, item, atom_name, "plate_1")
    return DemoSpec(task_id, title, tuple(roster), tuple(script), merged)


DEMO_SPECS: tuple[DemoSpec, ...] = (
    _spec(
        "demo_1",
        "cutting a lettuce",
        [
            ("lettuce_1", "lettuce"),
            ("cutboard_1", "cutboard"),
            ("plate_1", "plate"),
            ("banana_1", "banana"),
        ],
        _pipeline("lettuce_1", "cutboard_1", "plate_1"),
        [("lettuce_1", "chop_state_Chopped")],
    ),
    _spec(
        "demo_2",
        "cutting a banana",
        [
            ("banana_1", "banana"),
            ("cutboard_1", "cutboard"),
            ("plate_1", "plate"),
            ("lettuce_1", "lettuce"),
        ],
        _pipeline("banana_1", "cutboard_1", "plate_1"),
        [("banana_1", "chop_state_Chopped")],
    ),
    _spec(
        "demo_3",
        "blending a carrot",
        [("carrot_1", "carrot"), ("blender_1", "blender"), ("plate_1", "plate")],
        _pipeline("carrot_1", "blender_1", "plate_1"),
        [("carrot_1", "blend_state_Blended")],
    ),
    _spec(
        "demo_4",
        "blending two carrots",
        [
            ("carrot_1", "carrot"),
            ("carrot_2", "carrot"),
            ("blender_1", "blender"),
            ("plate_1", "plate"),
        ],
        (
            ("PICK", "carrot_1"),
            ("PLACE", "blender_1"),
            ("PICK", "carrot_2"),
            ("PLACE", "blender_1"),
            ("USE", "blender_1"),
            ("PICK", "carrot_1"),
            ("PLACE", "plate_1"),
            ("PICK", "carrot_2"),
            ("PLACE", "plate_1"),
        ),
        [("carrot_1", "blend_state_Blended"), ("carrot_2", "blend_state_Blended")],
    ),
    _spec(
        "demo_5",
        "toasting a bread",
        [("bread_1", "bread"), ("toaster_1", "toaster"), ("plate_1", "plate")],
        _pipeline("bread_1", "toaster_1", "plate_1"),
        [("bread_1", "toast_state_Toasted")],
    ),
    _spec(
        "demo_6",
        "toasting two breads",
        [
            ("bread_1", "bread"),
            ("bread_2", "bread"),
            ("toaster_1", "toaster"),
            ("plate_1", "plate"),
        ],
        (
            ("PICK", "bread_1"),
            ("PLACE", "toaster_1"),
            ("PICK", "bread_2"),
            ("PLACE", "toaster_1"),
            ("USE", "toaster_1"),
            ("PICK", "bread_1"),
            ("PLACE", "plate_1"),
            ("PICK", "bread_2"),
            ("PLACE", "plate_1"),
        ),
        [("bread_1", "toast_state_Toasted"), ("bread_2", "toast_state_Toasted")],
    ),
    _spec(
        "demo_7",
        "cutting a tomato and an onion",
        [
            ("tomato_1", "tomato"),
            ("onion_1", "onion"),
            ("cutboard_1", "cutboard"),
            ("plate_1", "plate"),
        ],
        _pipeline("tomato_1", "cutboard_1", "plate_1")
        + _pipeline("onion_1", "cutboard_1", "plate_1"),
        [("tomato_1", "chop_state_Chopped"), ("onion_1", "chop_state_Chopped")],
    ),
    _spec(
        "demo_8",
        "cutting a lettuce and blending a carrot",
        [
            ("lettuce_1", "lettuce"),
            ("carrot_1", "carrot"),
            ("cutboard_1", "cutboard"),
            ("blender_1", "blender"),
            ("plate_1", "plate"),
            ("banana_1", "banana"),
        ],
        _pipeline("lettuce_1", "cutboard_1", "plate_1")
        + _pipeline("carrot_1", "blender_1", "plate_1"),
        [("lettuce_1", "chop_state_Chopped"), ("carrot_1", "blend_state_Blended")],
    ),
)

DEMO_IDS = tuple(s.task_id for s in DEMO_SPECS)


class ScriptError(RuntimeError):
    pass


def spec_kitchen(spec: DemoSpec, offset: int = 0, config: SimConfig = SimConfig()) -> Kitchen:
    return make_kitchen(spec.roster, config=config, offset=offset)


def record_demo(spec: DemoSpec, offset: int = 0) -> Demonstration:
    """Replay the script and record every primitive with a non-empty effect."""
    kitchen = spec_kitchen(spec, offset=offset)
    transitions: list[Transition] = []
    for prim, target in spec.script:
        before = kitchen.parse()
        ent = kitchen.entities[target]
        if prim == "PICK":
            cell = kitchen._locate(ent.container if ent.container else target)
            kitchen._go_face(cell)
            event = kitchen._pick(wanted=target) if ent.container else kitchen.step("PICK")
        elif prim in ("PLACE", "USE"):
            kitchen._go_face(kitchen._locate(target))
            event = kitchen.step(prim)
        else:
            raise ScriptError(f"{spec.task_id}: bad script primitive {prim}")
        after = kitchen.parse()
        if event is None or before == after:
            raise ScriptError(f"{spec.task_id}: {prim} {target} had no effect")
        ents = tuple(
            Obj(n, "agent" if n == kitchen.agent_name else kitchen.entities[n].type)
            for n in event.entities
        )
        transitions.append(Transition(before, ActionDesc(event.kind, ents), after))
    demo = Demonstration(spec.task_id, tuple(transitions))
    final = kitchen.parse()
    if not set(spec.goal) <= final:
        raise ScriptError(f"{spec.task_id}: script did not reach its goal")
    return demo


def record_all(offset: int = 0) -> tuple[Demonstration, ...]:
    return tuple(record_demo(s, offset=offset) for s in DEMO_SPECS)


def transition_count(demos: tuple[Demonstration, ...]) -> int:
    return sum(len(d.transitions) for d in demos)
