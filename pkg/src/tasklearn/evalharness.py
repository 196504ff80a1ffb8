"""Corpus replay evaluation and report emission.

Each labeled corpus record is pushed through the verification pipeline
against the scenario's initial state; viable responses are categorized with
the preference oracle. The report compares pipeline verdicts against the
hand labels and carries the headline share of unviable responses.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from tasklearn.errors import ScenarioError
from tasklearn.oversight import PreferenceModel, Proposal, oracle_decide
from tasklearn.parser import GoalExpr, In, Lexicon, On, render
from tasklearn.verifier import ResponseCategory, categorize, verify
from tasklearn.world import Scenario

CATEGORY_ORDER = (
    ResponseCategory.UNVIABLE,
    ResponseCategory.VIABLE_NOT_REASONABLE,
    ResponseCategory.REASONABLE,
    ResponseCategory.SITUATIONALLY_RELEVANT,
)

LABELS = {c.value for c in CATEGORY_ORDER}


@dataclass(frozen=True)
class CorpusRecord:
    key: str
    prompt: str
    responses: tuple[str, ...]
    label: str | None = None
    focus: str | None = None
    task: str | None = None

    @classmethod
    def from_json(cls, doc: dict) -> "CorpusRecord":
        return cls(
            key=doc["key"],
            prompt=doc["prompt"],
            responses=tuple(str(r) for r in doc["responses"]),
            label=doc.get("label"),
            focus=doc.get("focus"),
            task=doc.get("task"),
        )


def load_labeled_corpus(path: str | Path) -> list[CorpusRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(CorpusRecord.from_json(json.loads(line)))
    return records


@dataclass
class CategoryReport:
    total: int = 0
    verdicts: dict[str, int] = field(default_factory=dict)
    labels: dict[str, int] = field(default_factory=dict)
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)
    viability_agreements: int = 0
    labeled: int = 0

    def percentages(self) -> dict[str, float]:
        if self.total == 0:
            return {c.value: 0.0 for c in CATEGORY_ORDER}
        return {
            c.value: round(100.0 * self.verdicts.get(c.value, 0) / self.total, 1)
            for c in CATEGORY_ORDER
        }

    @property
    def unviable_share(self) -> float:
        if self.total == 0:
            return 0.0
        return round(
            100.0 * self.verdicts.get(ResponseCategory.UNVIABLE.value, 0) / self.total, 1
        )

    def to_json(self) -> dict:
        return {
            "v": 1,
            "total": self.total,
            "verdicts": {c.value: self.verdicts.get(c.value, 0) for c in CATEGORY_ORDER},
            "labels": {c.value: self.labels.get(c.value, 0) for c in CATEGORY_ORDER},
            "percentages": self.percentages(),
            "unviable_share": self.unviable_share,
            "viability_agreement": {
                "agreed": self.viability_agreements,
                "labeled": self.labeled,
            },
            "confusion": {
                verdict: dict(sorted(per_label.items()))
                for verdict, per_label in sorted(self.confusion.items())
            },
        }


def _derive_focus(report) -> str | None:
    if not isinstance(report.parsed, GoalExpr) or not report.bindings:
        return None
    for atom in report.parsed.conjuncts:
        if isinstance(atom, (In, On)):
            bound = report.bindings.get(atom.subject)
            if bound is not None:
                return bound
    return None


def run_corpus(
    corpus: list[CorpusRecord] | str | Path,
    scenario: Scenario,
    prefs: PreferenceModel,
) -> CategoryReport:
    """Verdict every corpus response against the scenario's initial state.

    Deterministic: the same corpus and scenario produce a byte-identical
    JSON report.
    """
    if not isinstance(corpus, list):
        corpus = load_labeled_corpus(corpus)
    lexicon = Lexicon.from_scenario(scenario)
    world, emb = scenario.world, scenario.embodiment
    report = CategoryReport()
    for record in corpus:
        if record.label is not None and record.label not in LABELS:
            raise ValueError(f"record {record.key}: unknown label '{record.label}'")
        if record.focus is not None and record.focus not in world.objects:
            raise ScenarioError(
                [f"corpus/scenario mismatch: focus id '{record.focus}' not in world"]
            )
        for response in record.responses:
            verdict = _verdict(record, response, scenario, world, emb, lexicon, prefs)
            report.total += 1
            report.verdicts[verdict.value] = report.verdicts.get(verdict.value, 0) + 1
            if record.label is not None:
                report.labels[record.label] = report.labels.get(record.label, 0) + 1
                report.labeled += 1
                verdict_viable = verdict is not ResponseCategory.UNVIABLE
                label_viable = record.label != ResponseCategory.UNVIABLE.value
                if verdict_viable == label_viable:
                    report.viability_agreements += 1
                per_label = report.confusion.setdefault(verdict.value, {})
                per_label[record.label] = per_label.get(record.label, 0) + 1
    return report


def _verdict(
    record: CorpusRecord, response: str, scenario, world, emb, lexicon, prefs
) -> ResponseCategory:
    result = verify(response, world, emb, lexicon)
    if not result.viable:
        return ResponseCategory.UNVIABLE
    assert isinstance(result.parsed, GoalExpr)
    focus_id = record.focus or _derive_focus(result)
    if focus_id is None:
        return ResponseCategory.REASONABLE
    proposal = Proposal(
        proposal_id=0,
        sentence=render(result.parsed),
        goal=result.parsed,
        task_name=record.task or scenario.task,
        focus_id=focus_id,
        focus_noun=world.objects[focus_id].noun,
        bindings=dict(result.bindings or {}),
    )
    decision = oracle_decide(proposal, prefs)
    return categorize(result, decision, prefs)


# ---------------------------------------------------------------------------
# Report emission


def emit_report(report: CategoryReport, format: str = "text") -> str:
    """Render the category report; field order is stable across runs."""
    if format == "json":
        return json.dumps(report.to_json(), indent=2) + "\n"
    if format == "csv":
        lines = ["category,count,percent"]
        percentages = report.percentages()
        for category in CATEGORY_ORDER:
            count = report.verdicts.get(category.value, 0)
            lines.append(f"{category.value},{count},{percentages[category.value]:.1f}")
        lines.append(f"total,{report.total},{100.0 if report.total else 0.0:.1f}")
        return "\n".join(lines) + "\n"
    if format == "text":
        width = max(len(c.value) for c in CATEGORY_ORDER)
        percentages = report.percentages()
        lines = [f"{'category':<{width}}  {'count':>5}  {'percent':>7}"]
        for category in CATEGORY_ORDER:
            count = report.verdicts.get(category.value, 0)
            lines.append(
                f"{category.value:<{width}}  {count:>5}  {percentages[category.value]:>6.1f}%"
            )
        lines.append(
            f"{'total':<{width}}  {report.total:>5}  {100.0 if report.total else 0.0:>6.1f}%"
        )
        if report.labeled:
            lines.append("")
            lines.append(
                f"viability agreement: {report.viability_agreements}/{report.labeled}"
            )
            lines.append(f"unviable share: {report.unviable_share:.1f}%")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format: {format}")
