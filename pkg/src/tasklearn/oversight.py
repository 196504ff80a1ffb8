"""Human oversight: proposal queue, decisions, preference model, oracle.

Every viable response becomes a proposal awaiting a single decision. The
queue is the one shared-mutable structure in the system; decisions may arrive
from another thread (the service) while the agent blocks in await_decision.
A scripted preference oracle lets full learning runs execute unattended.
"""

import itertools
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from tasklearn.errors import (
    AlreadyDecidedError,
    DecisionTimeoutError,
    InvalidDecisionError,
    UnknownProposalError,
)
from tasklearn.parser import (
    FOCUS_VAR,
    GoalExpr,
    In,
    Lexicon,
    NounPhrase,
    On,
    abstract_focus,
    parse_goal,
    render,
)

ACCEPT = "accept"
REJECT = "reject"
MODIFY = "modify"

REASON_NONSENSICAL = "nonsensical"
REASON_WRONG_PREFERENCE = "wrong-preference"

PENDING = "pending"
DECIDED = "decided"


@dataclass(frozen=True)
class Decision:
    kind: str
    reason: str | None = None
    goal: GoalExpr | None = None

    def to_json(self) -> dict:
        doc: dict = {"decision": self.kind}
        if self.reason:
            doc["reason"] = self.reason
        if self.goal is not None:
            doc["sentence"] = render(self.goal)
        return doc


def accept() -> Decision:
    return Decision(ACCEPT)


def reject(reason: str | None = None) -> Decision:
    return Decision(REJECT, reason=reason)


def modify(goal: GoalExpr) -> Decision:
    return Decision(MODIFY, goal=goal)


@dataclass
class Proposal:
    proposal_id: int
    sentence: str
    goal: GoalExpr
    task_name: str
    focus_id: str
    focus_noun: str
    prompt: str | None = None
    response: str | None = None
    report: dict | None = None
    bindings: dict | None = None
    state: str = PENDING
    decision: Decision | None = None

    def to_json(self) -> dict:
        return {
            "id": self.proposal_id,
            "sentence": self.sentence,
            "task": self.task_name,
            "focus_id": self.focus_id,
            "focus_noun": self.focus_noun,
            "prompt": self.prompt,
            "response": self.response,
            "report": self.report,
            "state": self.state,
            "decision": self.decision.to_json() if self.decision else None,
        }


class OversightQueue:
    """Pending-proposal queue with serialized per-proposal decisions.

    ``validator`` (when given) vets Modify goals — grounding and affordance —
    before the decision is accepted.
    """

    def __init__(self, validator=None):
        self._lock = threading.Condition()
        self._proposals: dict[int, Proposal] = {}
        self._ids = itertools.count(1)
        self.validator = validator

    def submit(self, proposal: Proposal) -> int:
        with self._lock:
            proposal_id = next(self._ids)
            proposal.proposal_id = proposal_id
            proposal.state = PENDING
            self._proposals[proposal_id] = proposal
            self._lock.notify_all()
            return proposal_id

    def get(self, proposal_id: int) -> Proposal:
        with self._lock:
            if proposal_id not in self._proposals:
                raise UnknownProposalError(f"no proposal with id {proposal_id}")
            return self._proposals[proposal_id]

    def pending(self) -> list[Proposal]:
        with self._lock:
            return [p for p in self._proposals.values() if p.state == PENDING]

    def all_proposals(self) -> list[Proposal]:
        with self._lock:
            return list(self._proposals.values())

    def decide(self, proposal_id: int, decision: Decision) -> Proposal:
        with self._lock:
            proposal = self.get(proposal_id)
            if proposal.state == DECIDED:
                raise AlreadyDecidedError(
                    f"proposal {proposal_id} already decided"
                )
            if decision.kind == MODIFY:
                if decision.goal is None:
                    raise InvalidDecisionError(["modify requires a goal"])
                if self.validator is not None:
                    problems = self.validator(decision.goal)
                    if problems:
                        raise InvalidDecisionError(problems)
            proposal.decision = decision
            proposal.state = DECIDED
            self._lock.notify_all()
            return proposal

    def await_decision(self, proposal_id: int, timeout: float | None = None) -> Decision:
        """Block until the proposal is decided. On timeout the proposal stays
        pending so a later decision can still land."""
        with self._lock:
            self.get(proposal_id)
            if not self._lock.wait_for(
                lambda: self._proposals[proposal_id].state == DECIDED,
                timeout=timeout,
            ):
                raise DecisionTimeoutError(
                    f"no decision for proposal {proposal_id} within {timeout}s"
                )
            return self._proposals[proposal_id].decision  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Preferences


@dataclass
class PreferenceModel:
    """Per-(task, noun) preferred goal templates plus a nonsense blocklist."""

    entries: dict[tuple[str, str], GoalExpr] = field(default_factory=dict)
    blocklist: set[tuple[str, str]] = field(default_factory=set)

    @classmethod
    def load(cls, path: str | Path, lexicon: Lexicon) -> "PreferenceModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_config(doc, lexicon)

    @classmethod
    def from_config(cls, doc: dict, lexicon: Lexicon) -> "PreferenceModel":
        entries: dict[tuple[str, str], GoalExpr] = {}
        for task_name, per_noun in doc.get("preferences", {}).items():
            for noun, sentence in per_noun.items():
                parsed = parse_goal(sentence, lexicon)
                if isinstance(parsed, GoalExpr):
                    template, _ = abstract_focus(parsed, noun.lower())
                    entries[(task_name.lower(), noun.lower())] = template
                else:
                    raise ValueError(
                        f"preference for ({task_name}, {noun}) does not parse: "
                        f"{parsed.describe()}"
                    )
        blocklist = {
            (e["noun"].lower(), e["location"].lower())
            for e in doc.get("blocklist", [])
        }
        return cls(entries=entries, blocklist=blocklist)

    def lookup(self, task_name: str, noun: str) -> GoalExpr | None:
        return self.entries.get((task_name.lower(), noun.lower()))

    def blocklisted(self, goal: GoalExpr) -> bool:
        for atom in goal.conjuncts:
            if isinstance(atom, (In, On)):
                if (atom.subject.noun, atom.location.noun) in self.blocklist:
                    return True
        return False

    def covers(self, task_name: str, noun: str) -> bool:
        return (task_name.lower(), noun.lower()) in self.entries


def normalize_against_focus(goal: GoalExpr, bindings: dict, focus_id: str) -> GoalExpr:
    """Rewrite phrases bound to the focus object as the focus variable, so
    goals can be compared against preference templates regardless of how the
    response happened to describe the object."""

    def sub(np: NounPhrase) -> NounPhrase:
        return FOCUS_VAR if bindings.get(np) == focus_id else np

    out = []
    for atom in goal.conjuncts:
        if isinstance(atom, In):
            out.append(In(sub(atom.subject), sub(atom.location)))
        elif isinstance(atom, On):
            out.append(On(sub(atom.subject), sub(atom.location)))
        else:
            out.append(type(atom)(sub(atom.subject), atom.adjective))
    return GoalExpr(tuple(out))


def goals_equivalent(a: GoalExpr, b: GoalExpr) -> bool:
    """Conjunct-set equality: goal order never matters."""
    return set(a.conjuncts) == set(b.conjuncts)


def oracle_decide(proposal: Proposal, prefs: PreferenceModel) -> Decision:
    """Scripted stand-in for the human: accept exactly the preferred goal,
    reject blocklisted placements as nonsensical, anything else as a
    preference mismatch."""
    normalized = normalize_against_focus(
        proposal.goal, proposal.bindings or {}, proposal.focus_id
    )
    preferred = prefs.lookup(proposal.task_name, proposal.focus_noun)
    if preferred is not None and goals_equivalent(normalized, preferred):
        return accept()
    if prefs.blocklisted(proposal.goal):
        return reject(REASON_NONSENSICAL)
    return reject(REASON_WRONG_PREFERENCE)
