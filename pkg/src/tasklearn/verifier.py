"""Response analysis pipeline: interpretability, grounding, affordance.

The three checks run in order with early exit; every failure is a value, and
each unviable report carries exactly one repair issue describing the first
failure in repair-prompt wording.
"""

import enum
from dataclasses import dataclass

from tasklearn import planner
from tasklearn.parser import (
    ActionStep,
    GoalExpr,
    In,
    InterpretationFailure,
    KIND_GOAL,
    Lexicon,
    NounPhrase,
    On,
    goal_to_json,
    parse_action,
    parse_goal,
    render,
    render_action,
)
from tasklearn.world import (
    RECEPTACLE,
    REL_IN,
    REL_ON,
    ROOM,
    Embodiment,
    GroundedAction,
    GroundedAtom,
    GroundedGoal,
    WorldState,
)


class _Sentinel:
    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: A check that ran and succeeded.
PASSED = _Sentinel("PASSED")
#: A check that never ran because an earlier one failed.
SKIPPED = _Sentinel("SKIPPED")


@dataclass(frozen=True)
class GroundingFailure:
    referent: str
    ambiguous: bool = False


@dataclass(frozen=True)
class AffordanceFailure:
    reason: str


Bindings = dict[NounPhrase, str]

UNKNOWN_WORD = "unknown-word"
UNRECOGNIZED_STRUCTURE = "unrecognized-structure"
EMPTY_RESPONSE = "empty-response"
UNGROUNDABLE = "ungroundable"
AMBIGUOUS_REFERENCE = "ambiguous-reference"
NOT_AFFORDABLE = "not-affordable"
USER_REJECTED = "user-rejected"


@dataclass(frozen=True)
class FailureCategory:
    """A failure kind plus detail, rendered as repair-prompt wording."""

    kind: str
    detail: str

    def describe(self) -> str:
        if self.kind == UNKNOWN_WORD:
            return f'the word "{self.detail}" is unknown'
        if self.kind == UNRECOGNIZED_STRUCTURE:
            return f"the sentence structure was not understood at word {self.detail}"
        if self.kind == EMPTY_RESPONSE:
            return "the response was empty"
        if self.kind == UNGROUNDABLE:
            return f'the referent "{self.detail}" is not present in the current situation'
        if self.kind == AMBIGUOUS_REFERENCE:
            return f'the referent "{self.detail}" is ambiguous in the current situation'
        if self.kind == NOT_AFFORDABLE:
            return f"the response is not achievable: {self.detail}"
        return f"the user rejected the response: {self.detail}"

    def __str__(self) -> str:
        return self.describe()

    @classmethod
    def from_interpretation(cls, failure: InterpretationFailure) -> "FailureCategory":
        if failure.kind == "unknown-word":
            return cls(UNKNOWN_WORD, failure.token or "")
        if failure.kind == "unrecognized-structure":
            return cls(UNRECOGNIZED_STRUCTURE, str(failure.position))
        return cls(EMPTY_RESPONSE, "")

    @classmethod
    def from_grounding(cls, failure: GroundingFailure) -> "FailureCategory":
        kind = AMBIGUOUS_REFERENCE if failure.ambiguous else UNGROUNDABLE
        return cls(kind, failure.referent)

    @classmethod
    def from_affordance(cls, failure: AffordanceFailure) -> "FailureCategory":
        return cls(NOT_AFFORDABLE, failure.reason)


class ResponseCategory(str, enum.Enum):
    UNVIABLE = "unviable"
    VIABLE_NOT_REASONABLE = "viable-not-reasonable"
    REASONABLE = "reasonable"
    SITUATIONALLY_RELEVANT = "situationally-relevant"


@dataclass
class VerificationReport:
    kind: str
    text: str
    r1: object
    r2: object
    r3: object
    parsed: GoalExpr | ActionStep | None
    bindings: Bindings | None
    grounded: GroundedGoal | None
    viable: bool
    repair_issue: FailureCategory | None

    def to_json(self) -> dict:
        def check(value) -> dict | str:
            if value is PASSED:
                return "pass"
            if value is SKIPPED:
                return "skipped"
            if isinstance(value, InterpretationFailure):
                return {"failure": value.kind, "detail": value.describe()}
            if isinstance(value, GroundingFailure):
                kind = AMBIGUOUS_REFERENCE if value.ambiguous else UNGROUNDABLE
                return {"failure": kind, "detail": value.referent}
            if isinstance(value, AffordanceFailure):
                return {"failure": NOT_AFFORDABLE, "detail": value.reason}
            return "pass"

        sentence = None
        if isinstance(self.parsed, GoalExpr):
            sentence = render(self.parsed)
        elif isinstance(self.parsed, ActionStep):
            sentence = render_action(self.parsed)
        return {
            "kind": self.kind,
            "text": self.text,
            "r1": check(self.r1),
            "r2": check(self.r2),
            "r3": check(self.r3),
            "viable": self.viable,
            "sentence": sentence,
            "goal": goal_to_json(self.parsed) if isinstance(self.parsed, GoalExpr) else None,
            "repair_issue": (
                {"kind": self.repair_issue.kind, "description": str(self.repair_issue)}
                if self.repair_issue
                else None
            ),
        }


# ---------------------------------------------------------------------------
# Grounding


def _resolve_object(
    phrase: NounPhrase, world: WorldState
) -> str | GroundingFailure:
    matches = [
        o.id
        for o in sorted(world.objects.values(), key=lambda o: o.id)
        if o.noun == phrase.noun and set(phrase.adjectives) <= set(o.adjectives)
    ]
    if not matches:
        return GroundingFailure(phrase.render())
    if len(matches) > 1:
        return GroundingFailure(phrase.render(), ambiguous=True)
    return matches[0]


def _resolve_location(
    phrase: NounPhrase, world: WorldState
) -> str | GroundingFailure:
    if phrase.adjectives:
        return GroundingFailure(phrase.render())
    matches = [
        l.id
        for l in sorted(world.locations.values(), key=lambda l: l.id)
        if l.name == phrase.noun
    ]
    if not matches:
        return GroundingFailure(phrase.render())
    if len(matches) > 1:
        return GroundingFailure(phrase.render(), ambiguous=True)
    return matches[0]


def _resolve_entity(phrase: NounPhrase, world: WorldState) -> str | GroundingFailure:
    """Location or object, for positions that accept either. A name shared by
    both kinds is ambiguous."""
    as_location = _resolve_location(phrase, world)
    as_object = _resolve_object(phrase, world)
    loc_ok = isinstance(as_location, str)
    obj_ok = isinstance(as_object, str)
    if loc_ok and obj_ok:
        return GroundingFailure(phrase.render(), ambiguous=True)
    if loc_ok:
        return as_location
    if obj_ok:
        return as_object
    # Prefer reporting ambiguity over absence.
    for failure in (as_location, as_object):
        if isinstance(failure, GroundingFailure) and failure.ambiguous:
            return failure
    return GroundingFailure(phrase.render())


def ground(
    goal: GoalExpr, world: WorldState, prebound: Bindings | None = None
) -> Bindings | GroundingFailure:
    """Bind every referent to a unique world entity.

    Fails on the first phrase that resolves to nothing or to more than one
    entity; ambiguity is a grounding failure so the repair loop can ask for a
    more specific response.
    """
    bindings: Bindings = dict(prebound or {})
    for atom in goal.conjuncts:
        if isinstance(atom, (In, On)):
            pairs = ((atom.subject, "object"), (atom.location, "location"))
        else:
            pairs = ((atom.subject, "entity"),)
        for phrase, position in pairs:
            if phrase in bindings:
                continue
            if position == "object":
                result = _resolve_object(phrase, world)
            elif position == "location":
                result = _resolve_location(phrase, world)
            else:
                result = _resolve_entity(phrase, world)
            if isinstance(result, GroundingFailure):
                return result
            bindings[phrase] = result
    return bindings


def ground_action(
    step: ActionStep, world: WorldState, prebound: Bindings | None = None
) -> Bindings | GroundingFailure:
    """Bind an action step's phrases. The object position of open/close/move
    verbs names a location, so those resolve either way."""
    bindings: Bindings = dict(prebound or {})
    for phrase in filter(None, (step.obj, step.target)):
        if phrase in bindings:
            continue
        result = _resolve_entity(phrase, world)
        if isinstance(result, GroundingFailure):
            return result
        bindings[phrase] = result
    return bindings


def to_grounded(goal: GoalExpr, bindings: Bindings) -> GroundedGoal:
    atoms: list[GroundedAtom] = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            atoms.append(
                GroundedAtom(REL_IN, bindings[atom.subject], target=bindings[atom.location])
            )
        elif isinstance(atom, On):
            atoms.append(
                GroundedAtom(REL_ON, bindings[atom.subject], target=bindings[atom.location])
            )
        else:
            atoms.append(
                GroundedAtom("state", bindings[atom.subject], adjective=atom.adjective)
            )
    return tuple(atoms)


# ---------------------------------------------------------------------------
# Affordance

_VERB_SCHEMAS = {
    "pick up": "pick-up",
    "open": "open",
    "close": "close",
    "move": "move-to",
    "go": "move-to",
}


def map_action_step(
    step: ActionStep, bindings: Bindings, world: WorldState, emb: Embodiment
) -> GroundedAction | AffordanceFailure:
    """Translate a parsed action step into a grounded schema instance."""
    verb = step.verb
    if verb in ("put", "place"):
        if step.target is None or step.prep not in (REL_IN, REL_ON):
            return AffordanceFailure(f'"{verb}" requires an in/on target')
        schema = "put-in" if step.prep == REL_IN else "put-on"
        obj_id = bindings[step.obj]
        if obj_id not in world.objects:
            return AffordanceFailure(f"{step.obj.render()} is not a movable object")
        target_id = bindings[step.target]
        if target_id not in world.locations:
            return AffordanceFailure(f"{step.target.render()} is not a place")
        action = GroundedAction(schema, (obj_id, target_id))
    elif verb in _VERB_SCHEMAS:
        schema = _VERB_SCHEMAS[verb]
        entity = bindings[step.obj]
        if schema == "pick-up":
            if entity not in world.objects:
                return AffordanceFailure(f"{step.obj.render()} is not a movable object")
        else:
            if entity not in world.locations:
                return AffordanceFailure(f"{step.obj.render()} is not a place")
            loc = world.locations[entity]
            if schema in ("open", "close") and not (
                loc.kind == RECEPTACLE and loc.openable
            ):
                return AffordanceFailure(f"the {step.obj.render()} is not openable")
            if schema == "move-to" and loc.kind != ROOM:
                return AffordanceFailure(f"the {step.obj.render()} is not a room")
        action = GroundedAction(schema, (entity,))
    else:
        return AffordanceFailure(f'verb "{verb}" is not in the action repertoire')
    if action.name not in emb.action_repertoire:
        return AffordanceFailure(f'verb "{verb}" is not in the action repertoire')
    return action


def check_affordable(
    subject: GroundedGoal | ActionStep,
    world: WorldState,
    emb: Embodiment,
    depth: int = planner.DEFAULT_DEPTH,
    bindings: Bindings | None = None,
) -> AffordanceFailure | None:
    """None iff the goal is plan-achievable (or the action plan-reachable)
    within the depth cap."""
    if isinstance(subject, ActionStep):
        mapped = map_action_step(subject, bindings or {}, world, emb)
        if isinstance(mapped, AffordanceFailure):
            return mapped
        if not planner.action_reachable(world, emb, mapped, depth):
            return AffordanceFailure(f"no plan within depth {depth}")
        return None
    if planner.plan(world, emb, subject, depth) is None:
        return AffordanceFailure(f"no plan within depth {depth}")
    return None


# ---------------------------------------------------------------------------
# Pipeline


def verify(
    text: str,
    world: WorldState,
    emb: Embodiment,
    lexicon: Lexicon,
    expect: str = KIND_GOAL,
    depth: int = planner.DEFAULT_DEPTH,
) -> VerificationReport:
    """Run the full analysis pipeline on a raw response.

    Checks run in order (interpret, ground, afford) with early exit; later
    checks are SKIPPED when an earlier one fails. Pure in all arguments.
    """
    parse = parse_goal if expect == KIND_GOAL else parse_action
    parsed = parse(text, lexicon)
    if isinstance(parsed, InterpretationFailure):
        return VerificationReport(
            kind=expect,
            text=text,
            r1=parsed,
            r2=SKIPPED,
            r3=SKIPPED,
            parsed=None,
            bindings=None,
            grounded=None,
            viable=False,
            repair_issue=FailureCategory.from_interpretation(parsed),
        )
    if isinstance(parsed, GoalExpr):
        bound = ground(parsed, world)
    else:
        bound = ground_action(parsed, world)
    if isinstance(bound, GroundingFailure):
        return VerificationReport(
            kind=expect,
            text=text,
            r1=PASSED,
            r2=bound,
            r3=SKIPPED,
            parsed=parsed,
            bindings=None,
            grounded=None,
            viable=False,
            repair_issue=FailureCategory.from_grounding(bound),
        )
    grounded = to_grounded(parsed, bound) if isinstance(parsed, GoalExpr) else None
    subject = grounded if grounded is not None else parsed
    failure = check_affordable(subject, world, emb, depth, bindings=bound)
    if failure is not None:
        return VerificationReport(
            kind=expect,
            text=text,
            r1=PASSED,
            r2=bound,
            r3=failure,
            parsed=parsed,
            bindings=bound,
            grounded=grounded,
            viable=False,
            repair_issue=FailureCategory.from_affordance(failure),
        )
    return VerificationReport(
        kind=expect,
        text=text,
        r1=PASSED,
        r2=bound,
        r3=PASSED,
        parsed=parsed,
        bindings=bound,
        grounded=grounded,
        viable=True,
        repair_issue=None,
    )


# ---------------------------------------------------------------------------
# Categorization


def categorize(report: VerificationReport, decision, preferences=None) -> ResponseCategory:
    """Fold a verification report and an oversight outcome into the final
    response category.

    The decision drives the split: an accepted response matched expectations;
    a rejection for wrong preference was plausible but not what this user
    wanted; a rejection as nonsensical was viable yet unreasonable. A
    reason-less rejection falls back to the preference model's blocklist when
    one is supplied, else counts as merely not preferred.
    """
    if not report.viable:
        return ResponseCategory.UNVIABLE
    if decision is None:
        raise ValueError("a viable response requires an oversight decision")
    if decision.kind == "accept":
        return ResponseCategory.SITUATIONALLY_RELEVANT
    if decision.kind == "modify":
        return ResponseCategory.REASONABLE
    reason = decision.reason
    if reason is None and preferences is not None and isinstance(report.parsed, GoalExpr):
        if preferences.blocklisted(report.parsed):
            reason = "nonsensical"
    if reason == "nonsensical":
        return ResponseCategory.VIABLE_NOT_REASONABLE
    return ResponseCategory.REASONABLE
