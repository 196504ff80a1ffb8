"""Bounded forward-search planning, execution, and rule compilation.

``plan`` is breadth-first with visited-state deduplication and a depth cap.
Successor generation is restricted to goal-relevant actions (moving only goal
objects, opening/closing only receptacles that matter to the goal, parking a
blocking held object); with no receptacle capacity limits this preserves
shortest plans while keeping the 35-object scenario tractable. Optimality is
cross-checked against a full-space oracle in the test suite.
"""

from dataclasses import dataclass
from typing import Callable

from tasklearn.errors import CompileError
from tasklearn.memory import ProceduralRule, WorkingContext
from tasklearn.parser import FOCUS_VAR, GoalExpr, abstract_focus
from tasklearn.world import (
    HELD,
    RECEPTACLE,
    REL_IN,
    REL_ON,
    ROOM,
    Embodiment,
    GroundedAction,
    GroundedAtom,
    GroundedGoal,
    WorldState,
    apply_action,
    atom_holds,
    check_action,
    digest,
    goal_holds,
    state_key,
)

DEFAULT_DEPTH = 12


@dataclass(frozen=True)
class Trace:
    """Execution record: (state digest before, action) per step."""

    steps: tuple[tuple[str, GroundedAction], ...]
    final_digest: str
    final_world: WorldState


def _relevant_sets(goal: GroundedGoal, world: WorldState):
    goal_objects: set[str] = set()
    place_targets: dict[str, set[tuple[str, str]]] = {}
    open_relevant: set[str] = set()
    close_goals: set[str] = set()
    for atom in goal:
        if atom.kind in (REL_IN, REL_ON):
            goal_objects.add(atom.subject)
            place_targets.setdefault(atom.subject, set()).add((atom.kind, atom.target))
            open_relevant.add(atom.target)
        elif atom.kind == "state" and atom.subject in world.locations:
            if atom.adjective == "open":
                open_relevant.add(atom.subject)
            elif atom.adjective == "closed":
                close_goals.add(atom.subject)
    return goal_objects, place_targets, open_relevant, close_goals


def _successors(
    world: WorldState,
    emb: Embodiment,
    goal: GroundedGoal,
    goal_objects: set[str],
    place_targets: dict[str, set[tuple[str, str]]],
    open_relevant: set[str],
    close_goals: set[str],
) -> list[GroundedAction]:
    repertoire = emb.action_repertoire
    candidates: list[GroundedAction] = []
    receptacles_here = sorted(
        l.id
        for l in world.locations.values()
        if l.kind == RECEPTACLE and l.parent == world.agent_at
    )
    holding = world.holding

    if "close" in repertoire:
        for lid in receptacles_here:
            if lid in close_goals:
                candidates.append(GroundedAction("close", (lid,)))
    if "move-to" in repertoire:
        for lid in sorted(l.id for l in world.locations.values() if l.kind == ROOM):
            candidates.append(GroundedAction("move-to", (lid,)))
    if "open" in repertoire:
        # Opening matters for goal targets, current containers of goal
        # objects, and (while parking a non-goal held object) anywhere near.
        openable_relevant = set(open_relevant) | set(close_goals)
        for oid in goal_objects:
            at = world.objects[oid].at
            if at != HELD:
                openable_relevant.add(at)
        if holding is not None and holding not in goal_objects:
            openable_relevant.update(receptacles_here)
        for lid in receptacles_here:
            if lid in openable_relevant:
                candidates.append(GroundedAction("open", (lid,)))
    if "pick-up" in repertoire and holding is None:
        for oid in sorted(goal_objects):
            unsatisfied = any(
                atom.subject == oid and not atom_holds(world, atom)
                for atom in goal
                if atom.kind in (REL_IN, REL_ON)
            )
            if unsatisfied:
                candidates.append(GroundedAction("pick-up", (oid,)))
    if holding is not None:
        if holding in goal_objects:
            for rel, target in sorted(place_targets.get(holding, ())):
                name = "put-in" if rel == REL_IN else "put-on"
                if name in repertoire:
                    candidates.append(GroundedAction(name, (holding, target)))
        else:
            for name in ("put-in", "put-on"):
                if name in repertoire:
                    candidates.extend(
                        GroundedAction(name, (holding, lid)) for lid in receptacles_here
                    )
    candidates.sort(key=lambda a: (a.name, a.args))
    return [a for a in candidates if check_action(world, a) is None]


def plan(
    world: WorldState,
    emb: Embodiment,
    goal: GroundedGoal,
    depth: int = DEFAULT_DEPTH,
) -> list[GroundedAction] | None:
    """Shortest action sequence making the goal hold, or None within depth.

    Deterministic: successors are expanded in (name, args) order, so equal
    length plans tie-break lexicographically.
    """
    if goal_holds(world, goal):
        return []
    sets = _relevant_sets(goal, world)
    seen = {state_key(world)}
    frontier: list[tuple[WorldState, list[GroundedAction]]] = [(world, [])]
    for _ in range(depth):
        next_frontier: list[tuple[WorldState, list[GroundedAction]]] = []
        for state, path in frontier:
            for action in _successors(state, emb, goal, *sets):
                succ = apply_action(state, action)
                key = state_key(succ)
                if key in seen:
                    continue
                seen.add(key)
                new_path = path + [action]
                if goal_holds(succ, goal):
                    return new_path
                next_frontier.append((succ, new_path))
        if not next_frontier:
            return None
        frontier = next_frontier
    return None


def _reachable(
    world: WorldState,
    emb: Embodiment,
    relevance: GroundedGoal,
    predicate: Callable[[WorldState], bool],
    depth: int,
) -> bool:
    """BFS for any state satisfying ``predicate``, using the pruned successor
    generator seeded with ``relevance`` atoms."""
    if predicate(world):
        return True
    sets = _relevant_sets(relevance, world)
    seen = {state_key(world)}
    frontier = [world]
    for _ in range(depth):
        nxt = []
        for state in frontier:
            for action in _successors(state, emb, relevance, *sets):
                succ = apply_action(state, action)
                key = state_key(succ)
                if key in seen:
                    continue
                seen.add(key)
                if predicate(succ):
                    return True
                nxt.append(succ)
        if not nxt:
            return False
        frontier = nxt
    return False


def action_reachable(
    world: WorldState,
    emb: Embodiment,
    act: GroundedAction,
    depth: int = DEFAULT_DEPTH,
) -> bool:
    """True iff some state within ``depth`` steps makes ``act`` applicable.

    Affordance check for single action steps: the step need not be applicable
    right now, only plan-reachable.
    """
    if act.name not in emb.action_repertoire:
        return False
    relevance: list[GroundedAtom] = []
    if act.name in ("put-in", "put-on"):
        rel = REL_IN if act.name == "put-in" else REL_ON
        relevance.append(GroundedAtom(rel, act.args[0], target=act.args[1]))
    elif act.name == "pick-up":
        obj = world.objects.get(act.args[0])
        if obj is None:
            return False
        anchor = obj.at if obj.at != HELD else world.agent_at
        relevance.append(GroundedAtom(REL_IN, obj.id, target=anchor))
    elif act.name in ("open", "close"):
        adjective = "open" if act.name == "close" else "closed"
        relevance.append(GroundedAtom("state", act.args[0], adjective=adjective))
    return _reachable(
        world,
        emb,
        tuple(relevance),
        lambda state: check_action(state, act) is None,
        depth,
    )


def execute(world: WorldState, seq: list[GroundedAction]) -> tuple[WorldState, Trace]:
    """Fold the sequence over the world; raises PreconditionError mid-sequence
    if the plan has gone stale."""
    steps = []
    current = world
    for action in seq:
        steps.append((digest(current), action))
        current = apply_action(current, action)
    return current, Trace(
        steps=tuple(steps), final_digest=digest(current), final_world=current
    )


def retrospect_compile(
    trace: Trace,
    ctx: WorkingContext,
    goal: GoalExpr,
    grounded: GroundedGoal | None = None,
) -> ProceduralRule:
    """Review an executed task and compile its goal into a reusable rule.

    Rules compile from goals, not action sequences: plans are cheap to
    re-derive per situation. The focus object is abstracted to a variable;
    adjectives that disambiguated it and the source containment become rule
    conditions. An empty trace with an already satisfied goal still compiles:
    the goal knowledge is the asset.
    """
    if grounded is not None and not goal_holds(trace.final_world, grounded):
        raise CompileError("trace does not achieve the goal it is compiled from")
    template, adjectives = abstract_focus(goal, ctx.focus_noun)
    if all(np.noun != FOCUS_VAR.noun for np in template.phrases()):
        raise CompileError(f"goal does not mention the focus object '{ctx.focus_noun}'")
    return ProceduralRule(
        task_name=ctx.task_name,
        noun=ctx.focus_noun,
        goal_template=template,
        adjectives=adjectives or None,
        source=ctx.focus_containment or None,
    )
