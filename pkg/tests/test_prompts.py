import pytest

from conftest import data_path
from tasklearn.errors import TemplateError
from tasklearn.memory import WorkingContext
from tasklearn.prompts import (
    ACTION,
    GAP_MISSING_ACTION,
    GAP_MISSING_GOAL,
    GAP_REPAIR_NEEDED,
    GOAL,
    REPAIR,
    TemplateBank,
    build_repair,
    check_markers,
    default_bank,
    instantiate,
    select_template,
)
from tasklearn.verifier import FailureCategory


def make_ctx(**overrides):
    base = dict(
        task_name="tidy kitchen",
        agent_room="kitchen",
        focus_id="obj-mug",
        focus_noun="mug",
        focus_adjectives=(),
        focus_containment="in dish rack",
        steps_so_far=(),
    )
    base.update(overrides)
    return WorkingContext(**base)


class TestSelectTemplate:
    def test_mapping(self):
        assert select_template(GAP_MISSING_GOAL) == GOAL
        assert select_template(GAP_MISSING_ACTION) == ACTION
        assert select_template(GAP_REPAIR_NEEDED) == REPAIR


class TestInstantiate:
    def test_golden_prompt_byte_for_byte(self):
        golden = data_path("golden_goal_prompt.txt").read_text(encoding="utf-8")
        prompt = instantiate(default_bank().goal, make_ctx())
        assert prompt.text == golden

    def test_single_line(self):
        prompt = instantiate(default_bank().goal, make_ctx())
        assert "\n" not in prompt.text

    def test_live_task_suffix(self):
        prompt = instantiate(default_bank().goal, make_ctx())
        assert prompt.text.endswith(
            "(TASK)Task name: tidy kitchen. Task context: I am in kitchen. "
            "Aware of mug in dish rack.(RESULT)"
        )

    def test_example_result_sentence_present(self):
        prompt = instantiate(default_bank().goal, make_ctx())
        assert (
            "The goal is that the package is in the closet and the closet is closed."
            in prompt.text
        )

    def test_missing_slot_names_it(self):
        with pytest.raises(TemplateError) as err:
            instantiate(default_bank().goal, make_ctx(focus_noun=""))
        assert err.value.slot == "focus_object"

    def test_adjectives_render_in_focus_slot(self):
        prompt = instantiate(
            default_bank().goal, make_ctx(focus_adjectives=("dirty",))
        )
        assert "Aware of dirty mug in dish rack.(RESULT)" in prompt.text

    def test_action_template_steps_so_far(self):
        bank = default_bank()
        empty = instantiate(bank.action, make_ctx())
        assert "Steps so far: none.(RESULT)" in empty.text
        walked = instantiate(
            bank.action, make_ctx(steps_so_far=("pick up the mug",))
        )
        assert "Steps so far: pick up the mug.(RESULT)" in walked.text
        assert "Steps so far: none." in walked.text  # first action example

    def test_deterministic(self):
        a = instantiate(default_bank().goal, make_ctx())
        b = instantiate(default_bank().goal, make_ctx())
        assert a.text == b.text

    def test_distinct_contexts_distinct_texts(self):
        texts = {
            instantiate(default_bank().goal, make_ctx(focus_noun=noun)).text
            for noun in ("mug", "plate", "bowl")
        }
        assert len(texts) == 3

    def test_bank_loadable_from_file(self):
        bank = TemplateBank.from_file(data_path("templates.json"))
        assert (
            instantiate(bank.goal, make_ctx()).text
            == instantiate(default_bank().goal, make_ctx()).text
        )


class TestBuildRepair:
    def test_repair_contains_failed_and_issue(self):
        prior = instantiate(default_bank().goal, make_ctx())
        failed = "The goal is that the mug is in the credenza."
        issue = FailureCategory("unknown-word", "credenza")
        repaired = build_repair(prior, failed, issue)
        assert repaired.kind == REPAIR
        assert failed in repaired.text
        assert 'the word "credenza" is unknown' in repaired.text
        assert repaired.text.startswith(prior.text)
        assert repaired.text.endswith("(RESULT)")
        assert check_markers(repaired.text)

    def test_repair_names_ungroundable_referent(self):
        prior = instantiate(default_bank().goal, make_ctx())
        issue = FailureCategory("ungroundable", "pantry")
        repaired = build_repair(
            prior, "The goal is that the mug is in the pantry.", issue
        )
        assert (
            'the referent "pantry" is not present in the current situation'
            in repaired.text
        )

    def test_repairing_a_repair_keeps_markers_balanced(self):
        prompt = instantiate(default_bank().goal, make_ctx())
        for round_no in range(3):
            prompt = build_repair(
                prompt,
                f"The goal is that the mug is in the credenza{'!' * round_no}.",
                FailureCategory("unknown-word", "credenza"),
            )
            assert check_markers(prompt.text)


class TestCheckMarkers:
    def test_goal_prompt_well_formed(self):
        assert check_markers(instantiate(default_bank().goal, make_ctx()).text)

    def test_unbalanced_rejected(self):
        assert not check_markers("(EXAMPLES)(TASK)(RESULT)")
        assert not check_markers("(TASK)(END RESULT)(RESULT)")
        assert not check_markers("no markers at all")
        assert not check_markers("(TASK)x(RESULT)y(END TASK)")

    def test_minimal_open_prompt_accepted(self):
        assert check_markers("(TASK)Task name: t.(RESULT)")
