"""Agent memories: working context, compiled procedural rules, episode log.

The lexicon lives with the parser (tasklearn.parser.Lexicon); everything else
the agent remembers is here. Rules are immutable once stored; the episode log
is append-only, newline-delimited JSON with a versioned schema.
"""

import datetime
import json
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from tasklearn.errors import NotFoundError, StorageError
from tasklearn.parser import GoalExpr, NounPhrase, substitute_focus


@dataclass(frozen=True)
class WorkingContext:
    """Everything the prompt templates can mention about the current moment."""

    task_name: str
    agent_room: str
    focus_id: str
    focus_noun: str
    focus_adjectives: tuple[str, ...] = ()
    focus_containment: str = ""
    steps_so_far: tuple[str, ...] = ()

    def focus_phrase(self) -> str:
        return " ".join(self.focus_adjectives + (self.focus_noun,))

    def focus_noun_phrase(self) -> NounPhrase:
        return NounPhrase(self.focus_adjectives, self.focus_noun)


@dataclass(frozen=True)
class ProceduralRule:
    """Compiled condition -> goal knowledge.

    ``goal_template`` abstracts the focus object to FOCUS_VAR; ``adjectives``
    and ``source`` are optional extra conditions.
    """

    task_name: str
    noun: str
    goal_template: GoalExpr
    adjectives: tuple[str, ...] | None = None
    source: str | None = None
    rule_id: str | None = None
    provenance: int | None = None

    def matches(self, ctx: WorkingContext) -> bool:
        if self.task_name != ctx.task_name or self.noun != ctx.focus_noun:
            return False
        if self.adjectives is not None and not set(self.adjectives) <= set(
            ctx.focus_adjectives
        ):
            return False
        if self.source is not None and self.source != ctx.focus_containment:
            return False
        return True

    def instantiate(self) -> GoalExpr:
        phrase = NounPhrase(tuple(self.adjectives or ()), self.noun)
        return substitute_focus(self.goal_template, phrase)


class RuleStore:
    """Insertion-ordered store of immutable rules."""

    def __init__(self):
        self._rules: list[ProceduralRule] = []

    def __len__(self) -> int:
        return len(self._rules)

    @property
    def rules(self) -> tuple[ProceduralRule, ...]:
        return tuple(self._rules)

    def add(self, rule: ProceduralRule) -> ProceduralRule:
        stored = replace(rule, rule_id=f"r-{len(self._rules):04d}")
        self._rules.append(stored)
        return stored

    def match(self, ctx: WorkingContext) -> tuple[ProceduralRule, GoalExpr] | None:
        """Most specific matching rule's goal, instantiated for the context.

        Specificity: more condition adjectives first, then presence of a
        source-containment condition, then insertion order. Insertion order
        makes the ranking total, so ties cannot occur.
        """
        candidates = [
            (i, r) for i, r in enumerate(self._rules) if r.matches(ctx)
        ]
        if not candidates:
            return None
        candidates.sort(
            key=lambda pair: (
                -len(pair[1].adjectives or ()),
                -int(pair[1].source is not None),
                pair[0],
            )
        )
        rule = candidates[0][1]
        return rule, rule.instantiate()


def match_rules(store: RuleStore, ctx: WorkingContext) -> GoalExpr | None:
    hit = store.match(ctx)
    return hit[1] if hit else None


# ---------------------------------------------------------------------------
# Episode log

EPISODE_SCHEMA_VERSION = 1

KIND_LLM = "llm"
KIND_RULE = "rule"
KIND_HUMAN = "human"


@dataclass
class EpisodeRecord:
    kind: str
    task: str
    object_id: str
    template: str | None = None
    prompt: str | None = None
    response: str | None = None
    report: dict | None = None
    category: str | None = None
    decision: dict | None = None
    tokens_sent: int = 0
    tokens_received: int = 0
    rule_id: str | None = None
    episode_id: int | None = None
    timestamp: str = ""

    def to_json(self) -> dict:
        doc = {"v": EPISODE_SCHEMA_VERSION}
        doc.update(asdict(self))
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EpisodeRecord":
        doc = dict(doc)
        doc.pop("v", None)
        return cls(**doc)


class EpisodeLog:
    """Append-only episode store; single writer, any number of readers.

    With a path, every record is durably appended as one NDJSON line; without
    one, the log is memory-only (used by tests and throwaway runs).
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._records: list[EpisodeRecord] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._records.append(EpisodeRecord.from_json(json.loads(line)))

    def append(self, record: EpisodeRecord) -> int:
        with self._lock:
            episode_id = len(self._records) + 1
            record.episode_id = episode_id
            if not record.timestamp:
                record.timestamp = datetime.datetime.now(
                    datetime.timezone.utc
                ).isoformat()
            if self.path is not None:
                try:
                    with self.path.open("a", encoding="utf-8") as fh:
                        fh.write(json.dumps(record.to_json()) + "\n")
                except OSError as exc:
                    raise StorageError(f"episode log write failed: {exc}") from exc
            self._records.append(record)
            return episode_id

    def get(self, episode_id: int) -> EpisodeRecord:
        with self._lock:
            if not 1 <= episode_id <= len(self._records):
                raise NotFoundError(f"no episode with id {episode_id}")
            return self._records[episode_id - 1]

    def records(self) -> list[EpisodeRecord]:
        with self._lock:
            return list(self._records)

    def category_tally(self) -> dict[str, int]:
        """Category counts over completed verifications, replayable from disk."""
        tally: dict[str, int] = {}
        for rec in self.records():
            if rec.category is not None:
                tally[rec.category] = tally.get(rec.category, 0) + 1
        return tally


def record_episode(log: EpisodeLog, record: EpisodeRecord) -> int:
    return log.append(record)
