"""Restricted natural-language parsing of completion responses.

The agent only understands a small controlled grammar; the few-shot examples
bias the model toward producing exactly this shape. Parse failures are
returned as values (never raised) so the repair loop can act on them.

Goal grammar (case-insensitive, trailing period optional):

    The goal is that <clause> ( and <clause> )* .
    clause := the <np> is (in|on) the <np>
            | the <np> is <adjective>
    np     := <adjective>* <noun>        # multiword nouns matched greedily

Action grammar:

    <verb> the <np> ( (in|on|to) the <np> )? .
"""

from dataclasses import dataclass

from tasklearn.world import Scenario, WorldState

STRUCTURE_WORDS = frozenset({"the", "goal", "is", "that", "and", "in", "on", "to"})

DEFAULT_VERBS = ("pick up", "put", "place", "open", "close", "move", "go")

DEFAULT_ADJECTIVES = (
    "open",
    "closed",
    "clean",
    "dirty",
    "empty",
    "full",
    "old",
    "new",
)

# Household words the agent knows linguistically even when the current
# scenario has no such place: a response naming one is interpretable but may
# fail grounding, which is a different repair conversation than an unknown
# word.
COMMON_PLACE_NOUNS = ("pantry", "closet", "counter", "table", "shelf")

UNKNOWN_WORD = "unknown-word"
UNRECOGNIZED_STRUCTURE = "unrecognized-structure"
EMPTY_RESPONSE = "empty-response"

KIND_GOAL = "goal"
KIND_ACTION = "action"


@dataclass(frozen=True)
class NounPhrase:
    adjectives: tuple[str, ...]
    noun: str

    def render(self) -> str:
        return " ".join(self.adjectives + (self.noun,))


#: Placeholder phrase used in rule and preference templates for the focus
#: object; the angle brackets keep it outside any lexicon.
FOCUS_VAR = NounPhrase((), "<x>")


@dataclass(frozen=True)
class In:
    subject: NounPhrase
    location: NounPhrase


@dataclass(frozen=True)
class On:
    subject: NounPhrase
    location: NounPhrase


@dataclass(frozen=True)
class StateIs:
    subject: NounPhrase
    adjective: str


Atom = In | On | StateIs


@dataclass(frozen=True)
class GoalExpr:
    conjuncts: tuple[Atom, ...]

    def phrases(self) -> list[NounPhrase]:
        out = []
        for atom in self.conjuncts:
            out.append(atom.subject)
            if isinstance(atom, (In, On)):
                out.append(atom.location)
        return out


@dataclass(frozen=True)
class ActionStep:
    verb: str
    obj: NounPhrase
    prep: str | None = None
    target: NounPhrase | None = None


@dataclass(frozen=True)
class InterpretationFailure:
    kind: str
    token: str | None = None
    position: int | None = None

    def describe(self) -> str:
        if self.kind == UNKNOWN_WORD:
            return f'the word "{self.token}" is unknown'
        if self.kind == UNRECOGNIZED_STRUCTURE:
            return f"the sentence structure was not understood at word {self.position}"
        return "the response was empty"


class Lexicon:
    """Case-insensitive token sets for nouns, verbs and adjectives.

    Multiword entries ("dish rack", "pick up") are allowed and matched
    greedily, longest first.
    """

    def __init__(
        self,
        nouns: set[str] | None = None,
        verbs: set[str] | None = None,
        adjectives: set[str] | None = None,
    ):
        self.nouns = {n.lower() for n in (nouns or set())}
        self.verbs = {v.lower() for v in (verbs or set())}
        self.adjectives = {a.lower() for a in (adjectives or set())}

    @classmethod
    def from_scenario(cls, scenario: Scenario | WorldState) -> "Lexicon":
        """Seed from scenario entity names plus the built-in closed lists."""
        world = scenario.world if isinstance(scenario, Scenario) else scenario
        nouns = {o.noun for o in world.objects.values()}
        nouns.update(l.name for l in world.locations.values())
        nouns.update(COMMON_PLACE_NOUNS)
        adjectives = set(DEFAULT_ADJECTIVES)
        for obj in world.objects.values():
            adjectives.update(obj.adjectives)
        return cls(nouns=nouns, verbs=set(DEFAULT_VERBS), adjectives=adjectives)

    def lookup(self, token: str, part_of_speech: str) -> bool:
        token = token.strip().lower()
        if not token:
            return False
        pool = {
            "noun": self.nouns,
            "verb": self.verbs,
            "adjective": self.adjectives,
        }[part_of_speech]
        return token in pool

    def knows(self, token: str) -> bool:
        token = token.lower()
        if token in STRUCTURE_WORDS:
            return True
        if token in self.adjectives or token in self.verbs or token in self.nouns:
            return True
        # Single word of a multiword entry still counts as known.
        for pool in (self.nouns, self.verbs):
            for entry in pool:
                if " " in entry and token in entry.split():
                    return True
        return False

    def _max_words(self, pool: set[str]) -> int:
        return max((entry.count(" ") + 1 for entry in pool), default=1)


def lookup(lexicon: Lexicon, token: str, part_of_speech: str) -> bool:
    return lexicon.lookup(token, part_of_speech)


def _tokenize(text: str) -> list[str]:
    text = text.strip().lower()
    if text.endswith("."):
        text = text[:-1]
    return text.split()


class _Cursor:
    def __init__(self, tokens: list[str], lexicon: Lexicon):
        self.tokens = tokens
        self.lexicon = lexicon
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> str | None:
        return self.tokens[self.pos] if not self.done() else None

    def take(self) -> str:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, word: str) -> bool:
        if self.peek() == word:
            self.take()
            return True
        return False

    def match_multiword(self, pool: set[str], max_words: int) -> str | None:
        """Greedy longest match of a (possibly multiword) pool entry."""
        for width in range(min(max_words, len(self.tokens) - self.pos), 0, -1):
            candidate = " ".join(self.tokens[self.pos : self.pos + width])
            if candidate in pool:
                self.pos += width
                return candidate
        return None

    def fail(self) -> InterpretationFailure:
        """Structure failure at the current position, unless some token in
        the whole input is an unknown word: the repair loop needs the most
        actionable issue, so unknown words win."""
        for tok in self.tokens:
            if not self.lexicon.knows(tok):
                return InterpretationFailure(UNKNOWN_WORD, token=tok)
        return InterpretationFailure(UNRECOGNIZED_STRUCTURE, position=self.pos)

    def parse_np(self) -> NounPhrase | InterpretationFailure:
        adjectives: list[str] = []
        noun_width = self.lexicon._max_words(self.lexicon.nouns)
        while True:
            tok = self.peek()
            if tok is None:
                return self.fail()
            # A noun match takes priority over reading the token as an
            # adjective, so entity names shared with adjectives still parse.
            noun = self.match_multiword(self.lexicon.nouns, noun_width)
            if noun is not None:
                return NounPhrase(tuple(adjectives), noun)
            if tok in self.lexicon.adjectives:
                adjectives.append(self.take())
                continue
            return self.fail()


def parse_goal(text: str, lexicon: Lexicon) -> GoalExpr | InterpretationFailure:
    """Parse a goal sentence; failures are returned, never raised."""
    tokens = _tokenize(text)
    if not tokens:
        return InterpretationFailure(EMPTY_RESPONSE)
    cur = _Cursor(tokens, lexicon)
    for word in ("the", "goal", "is", "that"):
        if not cur.expect(word):
            return cur.fail()
    conjuncts: list[Atom] = []
    while True:
        clause = _parse_clause(cur)
        if isinstance(clause, InterpretationFailure):
            return clause
        conjuncts.append(clause)
        if cur.done():
            break
        if not cur.expect("and"):
            return cur.fail()
    return GoalExpr(tuple(conjuncts))


def _parse_clause(cur: _Cursor) -> Atom | InterpretationFailure:
    if not cur.expect("the"):
        return cur.fail()
    subject = cur.parse_np()
    if isinstance(subject, InterpretationFailure):
        return subject
    if not cur.expect("is"):
        return cur.fail()
    tok = cur.peek()
    if tok in ("in", "on"):
        prep = cur.take()
        if not cur.expect("the"):
            return cur.fail()
        location = cur.parse_np()
        if isinstance(location, InterpretationFailure):
            return location
        return In(subject, location) if prep == "in" else On(subject, location)
    if tok is not None and tok in cur.lexicon.adjectives:
        return StateIs(subject, cur.take())
    return cur.fail()


def parse_action(text: str, lexicon: Lexicon) -> ActionStep | InterpretationFailure:
    """Parse an imperative action step; failures are returned, never raised."""
    tokens = _tokenize(text)
    if not tokens:
        return InterpretationFailure(EMPTY_RESPONSE)
    cur = _Cursor(tokens, lexicon)
    verb = cur.match_multiword(lexicon.verbs, lexicon._max_words(lexicon.verbs))
    if verb is None:
        return cur.fail()
    if not cur.expect("the"):
        return cur.fail()
    obj = cur.parse_np()
    if isinstance(obj, InterpretationFailure):
        return obj
    if cur.done():
        return ActionStep(verb, obj)
    prep = cur.peek()
    if prep not in ("in", "on", "to"):
        return cur.fail()
    cur.take()
    if not cur.expect("the"):
        return cur.fail()
    target = cur.parse_np()
    if isinstance(target, InterpretationFailure):
        return target
    if not cur.done():
        return cur.fail()
    return ActionStep(verb, obj, prep, target)


# ---------------------------------------------------------------------------
# Rendering


def render(goal: GoalExpr) -> str:
    """Canonical surface form; parse_goal(render(g)) == g."""
    if not goal.conjuncts:
        raise ValueError("a vacuous goal has no surface form")
    clauses = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            clauses.append(f"the {atom.subject.render()} is in the {atom.location.render()}")
        elif isinstance(atom, On):
            clauses.append(f"the {atom.subject.render()} is on the {atom.location.render()}")
        else:
            clauses.append(f"the {atom.subject.render()} is {atom.adjective}")
    return "The goal is that " + " and ".join(clauses) + "."


def render_action(step: ActionStep) -> str:
    return _action_phrase(step).capitalize() + "."


def action_phrase(step: ActionStep) -> str:
    """Lowercase imperative used in 'steps so far' prompt slots."""
    return _action_phrase(step)


def _action_phrase(step: ActionStep) -> str:
    text = f"{step.verb} the {step.obj.render()}"
    if step.target is not None:
        text += f" {step.prep} the {step.target.render()}"
    return text


def substitute_focus(goal: GoalExpr, phrase: NounPhrase) -> GoalExpr:
    """Replace the focus variable in a goal template with a concrete phrase."""

    def sub(np: NounPhrase) -> NounPhrase:
        return phrase if np.noun == FOCUS_VAR.noun else np

    out: list[Atom] = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            out.append(In(sub(atom.subject), sub(atom.location)))
        elif isinstance(atom, On):
            out.append(On(sub(atom.subject), sub(atom.location)))
        else:
            out.append(StateIs(sub(atom.subject), atom.adjective))
    return GoalExpr(tuple(out))


def abstract_focus(goal: GoalExpr, noun: str) -> tuple[GoalExpr, tuple[str, ...]]:
    """Replace phrases naming ``noun`` with the focus variable.

    Returns the template and the adjectives that appeared on the abstracted
    phrase (they disambiguated grounding, so rules keep them as conditions).
    """
    adjectives: tuple[str, ...] = ()

    def sub(np: NounPhrase) -> NounPhrase:
        nonlocal adjectives
        if np.noun == noun:
            if np.adjectives and not adjectives:
                adjectives = np.adjectives
            return FOCUS_VAR
        return np

    out: list[Atom] = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            out.append(In(sub(atom.subject), sub(atom.location)))
        elif isinstance(atom, On):
            out.append(On(sub(atom.subject), sub(atom.location)))
        else:
            out.append(StateIs(sub(atom.subject), atom.adjective))
    return GoalExpr(tuple(out)), adjectives


def goal_to_json(goal: GoalExpr) -> list[dict]:
    out = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            out.append({"kind": "in", "subject": atom.subject.render(), "location": atom.location.render()})
        elif isinstance(atom, On):
            out.append({"kind": "on", "subject": atom.subject.render(), "location": atom.location.render()})
        else:
            out.append({"kind": "state", "subject": atom.subject.render(), "adjective": atom.adjective})
    return out
