"""Prompt construction: template selection, instantiation, repair chaining.

Prompts are single-line strings with the marker structure

    (EXAMPLES)(TASK)...(RESULT)...(END RESULT)(END TASK)...(END EXAMPLES)
    (TASK)...(RESULT)

where the final (TASK)/(RESULT) pair is deliberately left open for the model
to complete. Repair prompts append the failed response and the identified
issue, then reopen (RESULT).
"""

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from tasklearn.errors import TemplateError
from tasklearn.gateway import GenerationParams
from tasklearn.memory import WorkingContext

GOAL = "goal"
ACTION = "action"
REPAIR = "repair"

GAP_MISSING_GOAL = "missing-goal"
GAP_MISSING_ACTION = "missing-action"
GAP_REPAIR_NEEDED = "repair-needed"

_GOAL_EXAMPLE_SKELETON = (
    "(TASK)Task name: {task_name}. Task context: I am in {room}. "
    "Aware of {aware}.(RESULT){result}(END RESULT)(END TASK)"
)
_GOAL_LIVE_SKELETON = (
    "(TASK)Task name: {task_name}. Task context: I am in {agent_room}. "
    "Aware of {focus_object} {focus_containment}.(RESULT)"
)
_ACTION_EXAMPLE_SKELETON = (
    "(TASK)Task name: {task_name}. Task context: I am in {room}. "
    "Aware of {aware}. Steps so far: {steps}.(RESULT){result}(END RESULT)(END TASK)"
)
_ACTION_LIVE_SKELETON = (
    "(TASK)Task name: {task_name}. Task context: I am in {agent_room}. "
    "Aware of {focus_object} {focus_containment}. Steps so far: {steps_so_far}.(RESULT)"
)
_REPAIR_SKELETON = (
    "{prior}(FAILED RESPONSE){failed}(END FAILED RESPONSE)"
    "(ISSUE){issue}(END ISSUE)(RESULT)"
)


@dataclass(frozen=True)
class FewShotExample:
    task_name: str
    room: str
    aware: str
    result: str
    steps: tuple[str, ...] | None = None


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    skeleton: str
    example_skeleton: str
    example_bank: tuple[FewShotExample, ...]

    def __post_init__(self):
        if self.kind in (GOAL, ACTION) and not self.example_bank:
            raise ValueError(f"{self.kind} template requires a non-empty example bank")


@dataclass(frozen=True)
class PromptInstance:
    text: str
    params: GenerationParams
    kind: str = GOAL


class TemplateBank:
    def __init__(self, goal: PromptTemplate, action: PromptTemplate):
        self.goal = goal
        self.action = action

    def template_for(self, kind: str) -> PromptTemplate:
        return self.goal if kind == GOAL else self.action

    @classmethod
    def from_config(cls, doc: dict) -> "TemplateBank":
        def bank(section: dict, with_steps: bool) -> tuple[FewShotExample, ...]:
            out = []
            for e in section["examples"]:
                steps = tuple(e.get("steps_so_far", ())) if with_steps else None
                out.append(
                    FewShotExample(
                        task_name=e["task_name"],
                        room=e["room"],
                        aware=e["aware"],
                        result=e["result"],
                        steps=steps,
                    )
                )
            return tuple(out)

        goal = PromptTemplate(
            kind=GOAL,
            skeleton=doc.get("goal", {}).get("skeleton", _GOAL_LIVE_SKELETON),
            example_skeleton=doc.get("goal", {}).get(
                "example_skeleton", _GOAL_EXAMPLE_SKELETON
            ),
            example_bank=bank(doc["goal"], with_steps=False),
        )
        action = PromptTemplate(
            kind=ACTION,
            skeleton=doc.get("action", {}).get("skeleton", _ACTION_LIVE_SKELETON),
            example_skeleton=doc.get("action", {}).get(
                "example_skeleton", _ACTION_EXAMPLE_SKELETON
            ),
            example_bank=bank(doc["action"], with_steps=True),
        )
        return cls(goal, action)

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateBank":
        return cls.from_config(json.loads(Path(path).read_text(encoding="utf-8")))


def default_bank() -> TemplateBank:
    """The bundled template/example bank; normative for golden tests."""
    text = (
        resources.files("tasklearn").joinpath("data", "templates.json").read_text("utf-8")
    )
    return TemplateBank.from_config(json.loads(text))


def select_template(gap_kind: str) -> str:
    """Map a knowledge-gap kind to the template kind that addresses it."""
    return {
        GAP_MISSING_GOAL: GOAL,
        GAP_MISSING_ACTION: ACTION,
        GAP_REPAIR_NEEDED: REPAIR,
    }[gap_kind]


def _render_steps(steps: tuple[str, ...]) -> str:
    return "; ".join(steps) if steps else "none"


def instantiate(
    template: PromptTemplate,
    ctx: WorkingContext,
    params: GenerationParams | None = None,
) -> PromptInstance:
    """Fill the template with the working context, Table-2 style.

    Deterministic, and injective over contexts: every slot value appears
    verbatim in a fixed position.
    """
    for slot, value in (
        ("task_name", ctx.task_name),
        ("agent_room", ctx.agent_room),
        ("focus_object", ctx.focus_noun),
        ("focus_containment", ctx.focus_containment),
    ):
        if not value:
            raise TemplateError(slot)
    examples = []
    for e in template.example_bank:
        slots = {"task_name": e.task_name, "room": e.room, "aware": e.aware, "result": e.result}
        if template.kind == ACTION:
            slots["steps"] = _render_steps(e.steps or ())
        examples.append(template.example_skeleton.format(**slots))
    live_slots = {
        "task_name": ctx.task_name,
        "agent_room": ctx.agent_room,
        "focus_object": ctx.focus_phrase(),
        "focus_containment": ctx.focus_containment,
    }
    if template.kind == ACTION:
        live_slots["steps_so_far"] = _render_steps(ctx.steps_so_far)
    text = "(EXAMPLES)" + "".join(examples) + "(END EXAMPLES)" + template.skeleton.format(
        **live_slots
    )
    return PromptInstance(
        text=text, params=params or GenerationParams(), kind=template.kind
    )


def build_repair(prior: PromptInstance, failed: str, issue) -> PromptInstance:
    """Chain a repair prompt onto a prior prompt.

    ``issue`` is anything with a human-readable str() — typically a
    FailureCategory. Markers stay balanced; (RESULT) is reopened at the end.
    """
    text = _REPAIR_SKELETON.format(prior=prior.text, failed=failed, issue=str(issue))
    return PromptInstance(text=text, params=prior.params, kind=REPAIR)


# ---------------------------------------------------------------------------
# Marker well-formedness

_MARKER_RE = re.compile(
    r"\((?:END )?(?:EXAMPLES|TASK|RESULT|FAILED RESPONSE|ISSUE)\)"
)


def check_markers(text: str) -> bool:
    """True iff markers nest properly and the prompt ends open for completion.

    A well-formed prompt leaves exactly one (TASK) and, above it, one or more
    (RESULT) markers unclosed — one (RESULT) per repair round plus the final
    one awaiting the model's answer.
    """
    if "\n" in text:
        return False
    stack: list[str] = []
    for match in _MARKER_RE.finditer(text):
        marker = match.group(0)[1:-1]
        if marker.startswith("END "):
            if not stack or stack[-1] != marker[4:]:
                return False
            stack.pop()
        else:
            stack.append(marker)
    if not stack or stack[0] != "TASK":
        return False
    return len(stack) >= 2 and all(m == "RESULT" for m in stack[1:])
