"""Evaluation task sets S1-S6 and the failure-injection scenarios.

S1 replicates the demonstrated tasks (same rosters, extra untouched foods,
varied placements). S2 recombines demonstrated goals over demonstrated
objects. S3 uses three-food menus over demonstrated objects. S4 brings in
object types never demonstrated, S5 novel instances of demonstrated types,
and S6 combines three-food menus with novel types. Scenarios inject broken
tools and interaction exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .demos import DEMO_SPECS
from .imagination import PlanningTask
from .kitchen import Kitchen, SimConfig, make_kitchen
from .symbolic import Atom, Obj


@dataclass(frozen=True)
class EvalTask:
    tid: str
    set_id: str
    title: str
    roster: tuple[tuple[str, str], ...]
    goal: tuple[Atom, ...]
    config: SimConfig = SimConfig()
    offset: int = 0

    def kitchen(self) -> Kitchen:
        return make_kitchen(self.roster, config=self.config, offset=self.offset)

    def planning_task(self) -> PlanningTask:
        k = self.kitchen()
        return PlanningTask(k.objects(), k.parse(), frozenset(self.goal))

    def goal_foods(self) -> set[str]:
        return {
            o.name
            for a in self.goal
            for o in a.objects()
            if o.type != "plate"
        }


def _obj(name: str, roster) -> Obj:
    return Obj(name, dict(roster)[name])


def _chop(name, roster) -> Atom:
    return Atom("chop_state_Chopped", (_obj(name, roster),))


def _blend(name, roster) -> Atom:
    return Atom("blend_state_Blended", (_obj(name, roster),))


def _toast(name, roster) -> Atom:
    return Atom("toast_state_Toasted", (_obj(name, roster),))


def _served(name, roster, plate="plate_1") -> Atom:
    return Atom("served_holds", (_obj(plate, roster), _obj(name, roster)))


_GOAL_FNS = {"chop": _chop, "blend": _blend, "toast": _toast}


def _goals(roster, *specs: tuple[str, str]) -> tuple[Atom, ...]:
    out: list[Atom] = []
    for verb, name in specs:
        out.append(_GOAL_FNS[verb](name, roster))
        out.append(_served(name, roster))
    return tuple(out)


# foods available for padding S1 rosters, in preference order (demo names only)
_S1_PACK = (
    ("tomato_1", "tomato"),
    ("onion_1", "onion"),
    ("carrot_2", "carrot"),
    ("banana_1", "banana"),
    ("lettuce_1", "lettuce"),
    ("bread_2", "bread"),
)


def _s1_tasks() -> list[EvalTask]:
    tasks = []
    for i, spec in enumerate(DEMO_SPECS):
        roster = list(spec.roster)
        names = {n for n, _ in roster}
        pack = [e for e in _S1_PACK if e[0] not in names][:3]
        roster.extend(pack)
        tasks.append(
            EvalTask(
                f"s1_{i + 1}",
                "S1",
                spec.title,
                tuple(roster),
                spec.goal,
                offset=3 + i,  # varied placement relative to the demonstration
            )
        )
    return tasks


def _s2_tasks() -> list[EvalTask]:
    out = []

    def t(n, title, roster, goals, offset=0):
        roster = tuple(roster)
        out.append(
            EvalTask(f"s2_{n}", "S2", title, roster, _goals(roster, *goals), offset=offset)
        )

    t(
        1,
        "cut a lettuce and a banana",
        [("lettuce_1", "lettuce"), ("banana_1", "banana"), ("cutboard_1", "cutboard"), ("plate_1", "plate")],
        [("chop", "lettuce_1"), ("chop", "banana_1")],
    )
    t(
        2,
        "cut an onion",
        [("onion_1", "onion"), ("tomato_1", "tomato"), ("cutboard_1", "cutboard"), ("plate_1", "plate")],
        [("chop", "onion_1")],
    )
    t(
        3,
        "cut a tomato",
        [("tomato_1", "tomato"), ("onion_1", "onion"), ("cutboard_1", "cutboard"), ("plate_1", "plate")],
        [("chop", "tomato_1")],
    )
    t(
        4,
        "toast a bread and blend a carrot",
        [("bread_1", "bread"), ("carrot_1", "carrot"), ("toaster_1", "toaster"), ("blender_1", "blender"), ("plate_1", "plate")],
        [("toast", "bread_1"), ("blend", "carrot_1")],
    )
    t(
        5,
        "cut a lettuce and toast a bread",
        [("lettuce_1", "lettuce"), ("banana_1", "banana"), ("bread_1", "bread"), ("cutboard_1", "cutboard"), ("toaster_1", "toaster"), ("plate_1", "plate")],
        [("chop", "lettuce_1"), ("toast", "bread_1")],
    )
    t(
        6,
        "cut a banana and blend a carrot",
        [("banana_1", "banana"), ("lettuce_1", "lettuce"), ("carrot_1", "carrot"), ("cutboard_1", "cutboard"), ("blender_1", "blender"), ("plate_1", "plate")],
        [("chop", "banana_1"), ("blend", "carrot_1")],
    )
    return out


def _s3_tasks() -> list[EvalTask]:
    out = []

    def t(n, title, roster, goals):
        roster = tuple(roster)
        out.append(EvalTask(f"s3_{n}", "S3", title, roster, _goals(roster, *goals)))

    cb = ("cutboard_1", "cutboard")
    bl = ("blender_1", "blender")
    to = ("toaster_1", "toaster")
    pl = ("plate_1", "plate")
    lettuce = ("lettuce_1", "lettuce")
    banana = ("banana_1", "banana")
    t(
        1,
        "cut a lettuce and a banana, blend a carrot",
        [lettuce, banana, ("carrot_1", "carrot"), cb, bl, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("blend", "carrot_1")],
    )
    t(
        2,
        "cut a lettuce and a banana, toast a bread",
        [lettuce, banana, ("bread_1", "bread"), cb, to, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("toast", "bread_1")],
    )
    t(
        3,
        "cut a lettuce, a banana and a tomato",
        [lettuce, banana, ("tomato_1", "tomato"), ("onion_1", "onion"), cb, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("chop", "tomato_1")],
    )
    t(
        4,
        "cut a lettuce and a banana, toast a second bread",
        [lettuce, banana, ("bread_2", "bread"), cb, to, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("toast", "bread_2")],
    )
    t(
        5,
        "cut a lettuce and a banana, blend a carrot, bread on the side",
        [lettuce, banana, ("carrot_1", "carrot"), ("bread_1", "bread"), cb, bl, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("blend", "carrot_1")],
    )
    t(
        6,
        "cut a lettuce, a banana and an onion, tomato on the side",
        [lettuce, banana, ("onion_1", "onion"), ("tomato_1", "tomato"), cb, pl],
        [("chop", "lettuce_1"), ("chop", "banana_1"), ("chop", "onion_1")],
    )
    return out


def _s4_tasks() -> list[EvalTask]:
    out = []

    def t(n, title, roster, goals):
        roster = tuple(roster)
        out.append(EvalTask(f"s4_{n}", "S4", title, roster, _goals(roster, *goals)))

    pl = ("plate_1", "plate")
    t(1, "cut a cucumber", [("cucumber_1", "cucumber"), ("cutboard_1", "cutboard"), pl], [("chop", "cucumber_1")])
    t(2, "blend a cucumber", [("cucumber_1", "cucumber"), ("blender_1", "blender"), pl], [("blend", "cucumber_1")])
    t(3, "slice a bread with the breadslicer", [("bread_1", "bread"), ("breadslicer_1", "breadslicer"), pl], [("chop", "bread_1")])
    t(4, "toast an apple", [("apple_1", "apple"), ("toaster_1", "toaster"), pl], [("toast", "apple_1")])
    t(
        5,
        "cut an apple and blend a cucumber",
        [("apple_1", "apple"), ("cucumber_1", "cucumber"), ("cutboard_1", "cutboard"), ("blender_1", "blender"), pl],
        [("chop", "apple_1"), ("blend", "cucumber_1")],
    )
    t(
        6,
        "toast a cucumber and cut an apple",
        [("cucumber_1", "cucumber"), ("apple_1", "apple"), ("toaster_1", "toaster"), ("cutboard_1", "cutboard"), pl],
        [("toast", "cucumber_1"), ("chop", "apple_1")],
    )
    return out


def _s5_tasks() -> list[EvalTask]:
    out = []

    def t(n, title, roster, goals):
        roster = tuple(roster)
        out.append(EvalTask(f"s5_{n}", "S5", title, roster, _goals(roster, *goals)))

    pl = ("plate_1", "plate")
    cb = ("cutboard_1", "cutboard")
    t(1, "cut a second tomato", [("tomato_2", "tomato"), cb, pl], [("chop", "tomato_2")])
    t(2, "blend a third carrot", [("carrot_3", "carrot"), ("blender_1", "blender"), pl], [("blend", "carrot_3")])
    t(
        3,
        "cut a second lettuce and a second banana",
        [("lettuce_2", "lettuce"), ("banana_2", "banana"), cb, pl],
        [("chop", "lettuce_2"), ("chop", "banana_2")],
    )
    t(4, "toast a third bread", [("bread_3", "bread"), ("toaster_1", "toaster"), pl], [("toast", "bread_3")])
    t(5, "cut a second onion", [("onion_2", "onion"), cb, pl], [("chop", "onion_2")])
    t(
        6,
        "cut a second tomato and blend a third carrot",
        [("tomato_2", "tomato"), ("carrot_3", "carrot"), cb, ("blender_1", "blender"), pl],
        [("chop", "tomato_2"), ("blend", "carrot_3")],
    )
    return out


def _s6_tasks() -> list[EvalTask]:
    out = []

    def t(n, title, roster, goals):
        roster = tuple(roster)
        out.append(EvalTask(f"s6_{n}", "S6", title, roster, _goals(roster, *goals)))

    pl = ("plate_1", "plate")
    cb = ("cutboard_1", "cutboard")
    bl = ("blender_1", "blender")
    to = ("toaster_1", "toaster")
    t(
        1,
        "cut a cucumber and an apple, blend a second cucumber",
        [("cucumber_1", "cucumber"), ("apple_1", "apple"), ("cucumber_2", "cucumber"), cb, bl, pl],
        [("chop", "cucumber_1"), ("chop", "apple_1"), ("blend", "cucumber_2")],
    )
    t(
        2,
        "cut an apple, toast a second apple, blend a second carrot",
        [("apple_1", "apple"), ("apple_2", "apple"), ("carrot_2", "carrot"), cb, to, bl, pl],
        [("chop", "apple_1"), ("toast", "apple_2"), ("blend", "carrot_2")],
    )
    t(
        3,
        "slice a bread, toast a second bread, blend a carrot",
        [("bread_1", "bread"), ("bread_2", "bread"), ("carrot_1", "carrot"), ("breadslicer_1", "breadslicer"), to, bl, pl],
        [("chop", "bread_1"), ("toast", "bread_2"), ("blend", "carrot_1")],
    )
    t(
        4,
        "cut a cucumber and an apple, toast a bread",
        [("cucumber_1", "cucumber"), ("apple_1", "apple"), ("bread_1", "bread"), cb, to, pl],
        [("chop", "cucumber_1"), ("chop", "apple_1"), ("toast", "bread_1")],
    )
    t(
        5,
        "blend a cucumber, toast an apple, cut a second lettuce",
        [("cucumber_1", "cucumber"), ("apple_1", "apple"), ("lettuce_2", "lettuce"), bl, to, cb, pl],
        [("blend", "cucumber_1"), ("toast", "apple_1"), ("chop", "lettuce_2")],
    )
    t(
        6,
        "cut a coconut, blend an apple, toast a second bread",
        [("coconut_1", "coconut"), ("apple_1", "apple"), ("bread_2", "bread"), cb, bl, to, pl],
        [("chop", "coconut_1"), ("blend", "apple_1"), ("toast", "bread_2")],
    )
    return out


def task_sets() -> dict[str, tuple[EvalTask, ...]]:
    return {
        "S1": tuple(_s1_tasks()),
        "S2": tuple(_s2_tasks()),
        "S3": tuple(_s3_tasks()),
        "S4": tuple(_s4_tasks()),
        "S5": tuple(_s5_tasks()),
        "S6": tuple(_s6_tasks()),
    }


def all_tasks() -> tuple[EvalTask, ...]:
    return tuple(t for ts in task_sets().values() for t in ts)


def scenarios() -> tuple[EvalTask, ...]:
    """Broken-tool, exception-case and faithful control scenarios."""
    pl = ("plate_1", "plate")
    r1 = (("lettuce_1", "lettuce"), ("cutboard_1", "cutboard"), ("machete_1", "machete"), pl)
    r2 = (("coconut_1", "coconut"), ("cutboard_1", "cutboard"), ("machete_1", "machete"), pl)
    r3 = (("lettuce_1", "lettuce"), ("cutboard_1", "cutboard"), pl)
    r4 = (("carrot_1", "carrot"), ("blender_1", "blender"), pl)
    return (
        EvalTask(
            "broken_cutboard",
            "X",
            "cut a lettuce while the cutboard is broken (machete available)",
            r1,
            _goals(r1, ("chop", "lettuce_1")),
            SimConfig(broken=frozenset({"cutboard_1"})),
        ),
        EvalTask(
            "coconut_exception",
            "X",
            "cut a coconut the cutboard cannot cut (machete available)",
            r2,
            _goals(r2, ("chop", "coconut_1")),
            SimConfig(exceptions=frozenset({("cutboard", "coconut")})),
        ),
        EvalTask("faithful_cut", "X", "cut a lettuce, faithful world", r3, _goals(r3, ("chop", "lettuce_1"))),
        EvalTask("faithful_blend", "X", "blend a carrot, faithful world", r4, _goals(r4, ("blend", "carrot_1"))),
    )


# -- task-set discipline ----------------------------------------------------

DEMO_OBJECTS = frozenset(n for s in DEMO_SPECS for n, _ in s.roster)
DEMO_TYPES = frozenset(t for s in DEMO_SPECS for _, t in s.roster)
DEMO_GOAL_PAIRS = frozenset(
    (a.name, a.args[-1].name) for s in DEMO_SPECS for a in s.goal
)


def validate_task_sets(sets: dict[str, tuple[EvalTask, ...]]) -> list[str]:
    """Check each task against its set's membership rule; returns violations."""
    problems = []
    demo_goalsets = {
        frozenset((a.name, a.args[-1].name) for a in s.goal) for s in DEMO_SPECS
    }
    for sid, tasks in sets.items():
        if len(tasks) < 6:
            problems.append(f"{sid}: fewer than 6 tasks")
        for t in tasks:
            names = {n for n, _ in t.roster}
            types = {ty for _, ty in t.roster}
            goalset = frozenset((a.name, a.args[-1].name) for a in t.goal)
            novel_types = types - DEMO_TYPES
            novel_instances = names - DEMO_OBJECTS
            if sid == "S1":
                if not goalset <= DEMO_GOAL_PAIRS or goalset not in demo_goalsets:
                    problems.append(f"{t.tid}: S1 goals must replicate a demonstration")
                if novel_types or novel_instances:
                    problems.append(f"{t.tid}: S1 must use demonstrated objects")
            elif sid in ("S2", "S3"):
                if novel_types or novel_instances:
                    problems.append(f"{t.tid}: {sid} must use demonstrated objects")
                if goalset in demo_goalsets:
                    problems.append(f"{t.tid}: {sid} goals must be novel combinations")
                if sid == "S3" and len(t.goal_foods()) < 3:
                    problems.append(f"{t.tid}: S3 needs at least 3 goal objects")
            elif sid == "S4":
                if not novel_types:
                    problems.append(f"{t.tid}: S4 needs a novel object type")
            elif sid == "S5":
                if novel_types:
                    problems.append(f"{t.tid}: S5 allows only demonstrated classes")
                if not novel_instances:
                    problems.append(f"{t.tid}: S5 needs a novel object instance")
            elif sid == "S6":
                if not novel_types or len(t.goal_foods()) < 3:
                    problems.append(f"{t.tid}: S6 needs novel types and ≥3 goal objects")
    return problems
