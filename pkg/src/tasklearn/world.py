"""Simulated household environment.

Rooms contain receptacles and objects; the agent occupies a room and can hold
one object. Every operation is value-semantic: applying an action returns a
new ``WorldState`` and never mutates its input, so concurrent evaluation runs
can share states freely.
"""

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from tasklearn.errors import PreconditionError, ScenarioError

HELD = "held"

ROOM = "room"
RECEPTACLE = "receptacle"

REL_IN = "in"
REL_ON = "on"

RANGE_ROOM = "current-room-only"
RANGE_GLOBAL = "global"

#: The fixed action vocabulary of the embodiment.
ACTION_NAMES = ("close", "move-to", "open", "pick-up", "put-in", "put-on")


@dataclass(frozen=True)
class Location:
    """A room or a receptacle. Receptacles live in rooms via ``parent``.

    Non-openable locations are treated as open for containment reachability.
    """

    id: str
    name: str
    kind: str
    openable: bool = False
    is_open: bool = True
    parent: str | None = None

    def effectively_open(self) -> bool:
        return self.is_open if self.openable else True


@dataclass(frozen=True)
class ObjectInstance:
    """A movable object with exactly one containment fact (``at``/``rel``)."""

    id: str
    noun: str
    adjectives: tuple[str, ...] = ()
    at: str = HELD
    rel: str = REL_IN


@dataclass(frozen=True)
class Embodiment:
    gripper_capacity: int = 1
    action_repertoire: frozenset[str] = frozenset(ACTION_NAMES)
    perception_range: str = RANGE_ROOM


@dataclass(frozen=True)
class WorldState:
    """Snapshot of the whole simulated situation. Never mutated in place."""

    locations: dict[str, Location]
    objects: dict[str, ObjectInstance]
    agent_at: str
    holding: str | None = None

    def room_of(self, loc_id: str) -> str:
        """Room that ultimately contains ``loc_id`` (itself if a room)."""
        loc = self.locations[loc_id]
        return loc.id if loc.kind == ROOM else loc.parent  # type: ignore[return-value]

    def object_room(self, obj_id: str) -> str | None:
        obj = self.objects[obj_id]
        if obj.at == HELD:
            return self.agent_at
        return self.room_of(obj.at)


@dataclass(frozen=True)
class GroundedAction:
    name: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class GroundedAtom:
    """A goal conjunct over world entity ids.

    kind ``in``/``on``: ``subject`` object is contained at ``target`` with that
    relation. kind ``state``: ``subject`` (location or object) carries
    ``adjective`` (open/closed for locations, static adjectives for objects).
    """

    kind: str
    subject: str
    target: str | None = None
    adjective: str | None = None


GroundedGoal = tuple[GroundedAtom, ...]


@dataclass(frozen=True)
class Percept:
    object_id: str
    noun: str
    adjectives: tuple[str, ...]
    containment: str


@dataclass(frozen=True)
class Scenario:
    name: str
    task: str
    world: WorldState
    embodiment: Embodiment


# ---------------------------------------------------------------------------
# Scenario loading


def _require(entry: dict, key: str, path: str, problems: list[str]):
    if key not in entry:
        problems.append(f"{path}: missing required key '{key}'")
        return None
    return entry[key]


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and fully validate a scenario document.

    Raises ScenarioError listing every problem found, each naming the
    offending field (or the line for malformed JSON).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            [f"malformed document at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
        ) from exc

    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["top level: expected a JSON object"])
    for key in ("rooms", "receptacles", "objects", "agent", "embodiment"):
        if key not in doc:
            problems.append(f"top level: missing required key '{key}'")
    if problems:
        raise ScenarioError(problems)

    locations: dict[str, Location] = {}
    objects: dict[str, ObjectInstance] = {}

    for i, entry in enumerate(doc["rooms"]):
        path = f"rooms[{i}]"
        rid = _require(entry, "id", path, problems)
        rname = _require(entry, "name", path, problems)
        if rid is None or rname is None:
            continue
        if rid in locations:
            problems.append(f"{path}.id: duplicate id '{rid}'")
            continue
        locations[rid] = Location(id=rid, name=str(rname).lower(), kind=ROOM)

    for i, entry in enumerate(doc["receptacles"]):
        path = f"receptacles[{i}]"
        rid = _require(entry, "id", path, problems)
        rname = _require(entry, "name", path, problems)
        in_room = _require(entry, "in_room", path, problems)
        openable = _require(entry, "openable", path, problems)
        is_open = _require(entry, "open", path, problems)
        if rid is None or rname is None or in_room is None:
            continue
        if rid in locations:
            problems.append(f"{path}.id: duplicate id '{rid}'")
            continue
        parent = locations.get(in_room)
        if parent is None or parent.kind != ROOM:
            problems.append(f"{path}.in_room: unknown room '{in_room}'")
            continue
        locations[rid] = Location(
            id=rid,
            name=str(rname).lower(),
            kind=RECEPTACLE,
            openable=bool(openable),
            is_open=bool(is_open) if openable else True,
            parent=in_room,
        )

    for i, entry in enumerate(doc["objects"]):
        path = f"objects[{i}]"
        oid = _require(entry, "id", path, problems)
        _require(entry, "name", path, problems)
        noun = _require(entry, "noun", path, problems)
        adjectives = entry.get("adjectives", [])
        at = _require(entry, "in", path, problems)
        if oid is None or noun is None or at is None:
            continue
        if oid in objects or oid in locations:
            problems.append(f"{path}.id: duplicate id '{oid}'")
            continue
        if at not in locations:
            problems.append(f"{path}.in: unknown location '{at}' for object '{oid}'")
            continue
        objects[oid] = ObjectInstance(
            id=oid,
            noun=str(noun).lower(),
            adjectives=tuple(str(a).lower() for a in adjectives),
            at=at,
            rel=REL_IN,
        )

    agent = doc["agent"]
    agent_at = _require(agent, "in", "agent", problems)
    if agent_at is not None:
        loc = locations.get(agent_at)
        if loc is None or loc.kind != ROOM:
            problems.append(f"agent.in: '{agent_at}' is not a known room")

    emb_doc = doc["embodiment"]
    capacity = emb_doc.get("gripper_capacity", 1)
    if capacity != 1:
        problems.append(
            "embodiment.gripper_capacity: only a single-slot gripper is supported"
        )
    repertoire = emb_doc.get("action_repertoire", list(ACTION_NAMES))
    if not repertoire:
        problems.append("embodiment.action_repertoire: must be non-empty")
    for act in repertoire:
        if act not in ACTION_NAMES:
            problems.append(f"embodiment.action_repertoire: unknown action '{act}'")
    perception = emb_doc.get("perception_range", RANGE_ROOM)
    if perception not in (RANGE_ROOM, RANGE_GLOBAL):
        problems.append(f"embodiment.perception_range: unknown range '{perception}'")

    if problems:
        raise ScenarioError(problems)

    world = WorldState(
        locations=locations, objects=objects, agent_at=agent_at, holding=None
    )
    emb = Embodiment(
        gripper_capacity=capacity,
        action_repertoire=frozenset(repertoire),
        perception_range=perception,
    )
    return Scenario(
        name=str(doc.get("name", name)),
        task=str(doc.get("task", name)),
        world=world,
        embodiment=emb,
    )


def load_scenario(text: str) -> tuple[WorldState, Embodiment]:
    scenario = parse_scenario(text)
    return scenario.world, scenario.embodiment


def load_scenario_file(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)


# ---------------------------------------------------------------------------
# Perception


def perceive(world: WorldState, emb: Embodiment) -> list[Percept]:
    """Objects visible under the embodiment's perception range.

    Deterministically ordered by object id. A held object is always visible.
    """
    out = []
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        if obj.at == HELD:
            containment = HELD
        else:
            loc = world.locations[obj.at]
            containment = f"{obj.rel} {loc.name}"
            if emb.perception_range == RANGE_ROOM and world.room_of(obj.at) != world.agent_at:
                continue
        out.append(Percept(oid, obj.noun, obj.adjectives, containment))
    return out


# ---------------------------------------------------------------------------
# Action semantics

_PARAM_KINDS = {
    "move-to": ("location",),
    "pick-up": ("object",),
    "put-in": ("object", "location"),
    "put-on": ("object", "location"),
    "open": ("location",),
    "close": ("location",),
}


def action_param_kinds(name: str) -> tuple[str, ...]:
    return _PARAM_KINDS[name]


def _reachable_for_pickup(world: WorldState, obj: ObjectInstance) -> bool:
    loc = world.locations[obj.at]
    if world.room_of(obj.at) != world.agent_at:
        return False
    return loc.effectively_open()


def check_action(world: WorldState, act: GroundedAction) -> str | None:
    """Return the first failed precondition atom, or None if applicable."""
    name, args = act.name, act.args
    if name == "move-to":
        (dest,) = args
        loc = world.locations.get(dest)
        if loc is None or loc.kind != ROOM:
            return f"{dest} is not a room"
        if dest == world.agent_at:
            return "already in that room"
        return None
    if name == "pick-up":
        (oid,) = args
        obj = world.objects.get(oid)
        if obj is None:
            return f"{oid} is not an object"
        if world.holding is not None:
            return "gripper occupied"
        if obj.at == HELD:
            return f"{oid} already held"
        if world.room_of(obj.at) != world.agent_at:
            return f"{oid} not in the current room"
        if not world.locations[obj.at].effectively_open():
            return f"{world.locations[obj.at].name} not open"
        return None
    if name in ("put-in", "put-on"):
        oid, lid = args
        obj = world.objects.get(oid)
        loc = world.locations.get(lid)
        if obj is None:
            return f"{oid} is not an object"
        if loc is None or loc.kind != RECEPTACLE:
            return f"{lid} is not a receptacle"
        if world.holding != oid:
            return f"not holding {oid}"
        if loc.parent != world.agent_at:
            return f"{loc.name} not in the current room"
        if name == "put-in" and not loc.effectively_open():
            return f"{loc.name} not open"
        if name == "put-on" and loc.openable:
            return f"{loc.name} is not a surface"
        return None
    if name in ("open", "close"):
        (lid,) = args
        loc = world.locations.get(lid)
        if loc is None or loc.kind != RECEPTACLE or not loc.openable:
            return f"{lid} is not openable"
        if loc.parent != world.agent_at:
            return f"{loc.name} not in the current room"
        if name == "open" and loc.is_open:
            return f"{loc.name} already open"
        if name == "close" and not loc.is_open:
            return f"{loc.name} already closed"
        return None
    return f"unknown action {name}"


def apply_action(world: WorldState, act: GroundedAction) -> WorldState:
    """Apply a grounded action, returning the successor state.

    Raises PreconditionError naming the failed atom if not applicable.
    """
    failed = check_action(world, act)
    if failed is not None:
        raise PreconditionError(act.render(), failed)
    name, args = act.name, act.args
    if name == "move-to":
        return replace(world, agent_at=args[0])
    if name == "pick-up":
        oid = args[0]
        objects = dict(world.objects)
        objects[oid] = replace(objects[oid], at=HELD)
        return replace(world, objects=objects, holding=oid)
    if name in ("put-in", "put-on"):
        oid, lid = args
        rel = REL_IN if name == "put-in" else REL_ON
        objects = dict(world.objects)
        objects[oid] = replace(objects[oid], at=lid, rel=rel)
        return replace(world, objects=objects, holding=None)
    oid = args[0]
    locations = dict(world.locations)
    locations[oid] = replace(locations[oid], is_open=(name == "open"))
    return replace(world, locations=locations)


def legal_actions(world: WorldState, emb: Embodiment) -> list[GroundedAction]:
    """All applicable groundings of the embodiment's repertoire.

    Deterministic: sorted by action name, then argument ids.
    """
    candidates: list[GroundedAction] = []
    rooms = [l.id for l in world.locations.values() if l.kind == ROOM]
    receptacles = [l.id for l in world.locations.values() if l.kind == RECEPTACLE]
    for name in sorted(emb.action_repertoire):
        if name == "move-to":
            candidates.extend(GroundedAction(name, (r,)) for r in sorted(rooms))
        elif name == "pick-up":
            candidates.extend(GroundedAction(name, (o,)) for o in sorted(world.objects))
        elif name in ("put-in", "put-on"):
            if world.holding is not None:
                candidates.extend(
                    GroundedAction(name, (world.holding, r)) for r in sorted(receptacles)
                )
        else:
            candidates.extend(GroundedAction(name, (r,)) for r in sorted(receptacles))
    return [a for a in candidates if check_action(world, a) is None]


# ---------------------------------------------------------------------------
# Goal satisfaction


def atom_holds(world: WorldState, atom: GroundedAtom) -> bool:
    if atom.kind in (REL_IN, REL_ON):
        obj = world.objects.get(atom.subject)
        if obj is None:
            raise ValueError(f"unbound referent: {atom.subject}")
        if atom.target not in world.locations:
            raise ValueError(f"unbound referent: {atom.target}")
        return obj.at == atom.target and obj.rel == atom.kind
    if atom.kind == "state":
        if atom.subject in world.locations:
            loc = world.locations[atom.subject]
            if atom.adjective == "open":
                return loc.effectively_open()
            if atom.adjective == "closed":
                return loc.openable and not loc.is_open
            return False
        if atom.subject in world.objects:
            return atom.adjective in world.objects[atom.subject].adjectives
        raise ValueError(f"unbound referent: {atom.subject}")
    raise ValueError(f"unknown atom kind: {atom.kind}")


def goal_holds(world: WorldState, goal: GroundedGoal) -> bool:
    """True iff every conjunct holds. An empty conjunction is vacuously true."""
    return all(atom_holds(world, atom) for atom in goal)


# ---------------------------------------------------------------------------
# State identity


def state_key(world: WorldState) -> tuple:
    """Cheap hashable identity over containment, openness and agent state."""
    return (
        tuple(sorted((o.id, o.at, o.rel) for o in world.objects.values())),
        tuple(
            sorted((l.id, l.is_open) for l in world.locations.values() if l.openable)
        ),
        world.agent_at,
        world.holding,
    )


def digest(world: WorldState) -> str:
    """Stable hex digest of the state, for traces, logs and golden tests."""
    return hashlib.sha256(repr(state_key(world)).encode("utf-8")).hexdigest()[:16]


def world_summary(world: WorldState) -> dict:
    """JSON-ready snapshot used by the service API."""
    return {
        "agent_at": world.locations[world.agent_at].name,
        "holding": world.objects[world.holding].noun if world.holding else None,
        "rooms": [l.name for l in world.locations.values() if l.kind == ROOM],
        "receptacles": [
            {
                "name": l.name,
                "openable": l.openable,
                "open": l.effectively_open(),
            }
            for l in sorted(world.locations.values(), key=lambda l: l.id)
            if l.kind == RECEPTACLE
        ],
        "objects": [
            {
                "id": o.id,
                "noun": o.noun,
                "adjectives": list(o.adjectives),
                "at": HELD if o.at == HELD else f"{o.rel} {world.locations[o.at].name}",
            }
            for o in sorted(world.objects.values(), key=lambda o: o.id)
        ],
        "digest": digest(world),
    }
