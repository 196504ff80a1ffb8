import pytest
from dataclasses import replace

from conftest import data_path
from planning_oracle import oracle_plan_length
from tasklearn.errors import CompileError, PreconditionError
from tasklearn.memory import WorkingContext
from tasklearn.parser import FOCUS_VAR, GoalExpr, In, NounPhrase, StateIs, parse_goal
from tasklearn.planner import action_reachable, execute, plan, retrospect_compile
from tasklearn.verifier import ground, to_grounded
from tasklearn.world import (
    GroundedAction,
    apply_action,
    goal_holds,
    load_scenario_file,
)


def np(noun, *adjectives):
    return NounPhrase(tuple(adjectives), noun)


def grounded_goal(scenario, lexicon, sentence):
    goal = parse_goal(sentence, lexicon)
    bindings = ground(goal, scenario.world)
    assert isinstance(bindings, dict), bindings
    return to_grounded(goal, bindings)


MAILROOM_GOAL = "The goal is that the package is in the closet and the closet is closed."

# Computed by hand for the mailroom fixture and confirmed by the oracle: the
# unique shortest sequence is fetch, walk, stow, shut.
MAILROOM_PLAN = [
    GroundedAction("pick-up", ("obj-package",)),
    GroundedAction("move-to", ("room-office",)),
    GroundedAction("put-in", ("obj-package", "loc-closet")),
    GroundedAction("close", ("loc-closet",)),
]


class TestPlan:
    def test_mailroom_golden_plan(self, mailroom, mailroom_lexicon):
        goal = grounded_goal(mailroom, mailroom_lexicon, MAILROOM_GOAL)
        seq = plan(mailroom.world, mailroom.embodiment, goal)
        assert seq == MAILROOM_PLAN
        assert oracle_plan_length(mailroom.world, mailroom.embodiment, goal) == len(seq)

    def test_satisfied_goal_is_empty_plan(self, kitchen35, kitchen_lexicon):
        goal = grounded_goal(
            kitchen35, kitchen_lexicon, "The goal is that the sponge is in the sink."
        )
        assert plan(kitchen35.world, kitchen35.embodiment, goal) == []

    def test_unreachable_goal_returns_none(self, mailroom, mailroom_lexicon):
        emb = replace(
            mailroom.embodiment,
            action_repertoire=frozenset({"pick-up", "put-in", "put-on", "open", "close"}),
        )
        goal = grounded_goal(
            mailroom, mailroom_lexicon, "The goal is that the package is in the closet."
        )
        assert plan(mailroom.world, emb, goal) is None
        assert oracle_plan_length(mailroom.world, emb, goal) is None

    def test_static_object_state_unachievable(self, kitchen35, kitchen_lexicon):
        goal = grounded_goal(
            kitchen35, kitchen_lexicon, "The goal is that the pan is clean."
        )
        assert plan(kitchen35.world, kitchen35.embodiment, goal) is None

    def test_closed_target_needs_opening(self, kitchen35, kitchen_lexicon):
        goal = grounded_goal(
            kitchen35,
            kitchen_lexicon,
            "The goal is that the plate is in the cupboard and the cupboard is closed.",
        )
        seq = plan(kitchen35.world, kitchen35.embodiment, goal)
        assert seq is not None and len(seq) == 4
        names = [a.name for a in seq]
        assert names.count("open") == 1 and names.count("close") == 1

    def test_deterministic(self, kitchen35, kitchen_lexicon):
        goal = grounded_goal(
            kitchen35,
            kitchen_lexicon,
            "The goal is that the banana is in the garbage bin.",
        )
        first = plan(kitchen35.world, kitchen35.embodiment, goal)
        second = plan(kitchen35.world, kitchen35.embodiment, goal)
        assert first == second

    def test_depth_cap_respected(self, mailroom, mailroom_lexicon):
        goal = grounded_goal(mailroom, mailroom_lexicon, MAILROOM_GOAL)
        assert plan(mailroom.world, mailroom.embodiment, goal, depth=3) is None
        assert plan(mailroom.world, mailroom.embodiment, goal, depth=4) is not None


class TestOptimalityOnBundledFixtures:
    """Plan length must equal the full-space iterative-deepening oracle on
    every bundled fixture small enough for the oracle (<= 6 entities)."""

    CASES = [
        ("mailroom.json", MAILROOM_GOAL),
        ("mailroom.json", "The goal is that the package is in the closet."),
        ("groceries.json", "The goal is that the can of beans is in the pantry."),
        ("groceries.json", "The goal is that the can of beans is in the cupboard."),
        ("groceries.json", "The goal is that the can of beans is in the sink."),
        (
            "groceries.json",
            "The goal is that the can of beans is in the pantry and the pantry is closed.",
        ),
        ("groceries.json", "The goal is that the can of beans is on the dish rack."),
    ]

    @pytest.mark.parametrize("fixture,sentence", CASES)
    def test_matches_oracle(self, fixture, sentence):
        from tasklearn.parser import Lexicon

        scenario = load_scenario_file(data_path(fixture))
        entities = len(scenario.world.objects) + len(scenario.world.locations)
        assert entities <= 6
        goal = grounded_goal(scenario, Lexicon.from_scenario(scenario), sentence)
        seq = plan(scenario.world, scenario.embodiment, goal)
        assert seq is not None
        assert len(seq) == oracle_plan_length(scenario.world, scenario.embodiment, goal)


class TestActionReachable:
    def test_applicable_now(self, kitchen35):
        act = GroundedAction("pick-up", ("obj-02-plate",))
        assert action_reachable(kitchen35.world, kitchen35.embodiment, act)

    def test_reachable_after_travel(self, mailroom):
        act = GroundedAction("close", ("loc-closet",))
        assert action_reachable(mailroom.world, mailroom.embodiment, act)

    def test_put_reachable_via_pick_up(self, kitchen35):
        act = GroundedAction("put-in", ("obj-02-plate", "loc-cupboard"))
        assert action_reachable(kitchen35.world, kitchen35.embodiment, act)

    def test_not_in_repertoire(self, kitchen35):
        emb = replace(kitchen35.embodiment, action_repertoire=frozenset({"pick-up"}))
        act = GroundedAction("move-to", ("room-kitchen",))
        assert not action_reachable(kitchen35.world, emb, act)


class TestExecute:
    def test_execute_plan_achieves_goal(self, mailroom, mailroom_lexicon):
        goal = grounded_goal(mailroom, mailroom_lexicon, MAILROOM_GOAL)
        seq = plan(mailroom.world, mailroom.embodiment, goal)
        final, trace = execute(mailroom.world, seq)
        assert goal_holds(final, goal)
        assert len(trace.steps) == len(seq)
        assert trace.final_world is final

    def test_empty_sequence_leaves_world_unchanged(self, kitchen35):
        final, trace = execute(kitchen35.world, [])
        assert final == kitchen35.world
        assert trace.steps == ()

    def test_stale_plan_surfaces_precondition_error(self, mailroom, mailroom_lexicon):
        goal = grounded_goal(mailroom, mailroom_lexicon, MAILROOM_GOAL)
        seq = plan(mailroom.world, mailroom.embodiment, goal)
        # Perturb the world between planning and execution.
        perturbed = apply_action(
            mailroom.world, GroundedAction("pick-up", ("obj-package",))
        )
        with pytest.raises(PreconditionError):
            execute(perturbed, seq)


class TestRetrospectCompile:
    def _ctx(self, containment="in dish rack", adjectives=()):
        return WorkingContext(
            task_name="tidy kitchen",
            agent_room="kitchen",
            focus_id="obj-01-mug",
            focus_noun="mug",
            focus_adjectives=tuple(adjectives),
            focus_containment=containment,
        )

    def test_mug_rule_conditions_and_template(self, kitchen35, kitchen_lexicon):
        goal = parse_goal(
            "The goal is that the clean mug is in the cupboard"
            " and the cupboard is closed.",
            kitchen_lexicon,
        )
        bindings = ground(goal, kitchen35.world)
        grounded = to_grounded(goal, bindings)
        seq = plan(kitchen35.world, kitchen35.embodiment, grounded)
        _, trace = execute(kitchen35.world, seq)
        rule = retrospect_compile(trace, self._ctx(adjectives=("clean",)), goal, grounded)
        assert rule.task_name == "tidy kitchen"
        assert rule.noun == "mug"
        assert rule.adjectives == ("clean",)
        assert rule.source == "in dish rack"
        assert rule.goal_template == GoalExpr(
            (In(FOCUS_VAR, np("cupboard")), StateIs(np("cupboard"), "closed"))
        )

    def test_empty_trace_still_compiles(self, kitchen35, kitchen_lexicon):
        goal = parse_goal(
            "The goal is that the sponge is in the sink.", kitchen_lexicon
        )
        bindings = ground(goal, kitchen35.world)
        grounded = to_grounded(goal, bindings)
        _, trace = execute(kitchen35.world, [])
        ctx = WorkingContext(
            task_name="tidy kitchen",
            agent_room="kitchen",
            focus_id="obj-14-sponge",
            focus_noun="sponge",
            focus_containment="in sink",
        )
        rule = retrospect_compile(trace, ctx, goal, grounded)
        assert rule.goal_template == GoalExpr((In(FOCUS_VAR, np("sink")),))

    def test_trace_goal_mismatch_rejected(self, kitchen35, kitchen_lexicon):
        goal = parse_goal(
            "The goal is that the plate is in the cupboard.", kitchen_lexicon
        )
        bindings = ground(goal, kitchen35.world)
        grounded = to_grounded(goal, bindings)
        _, trace = execute(kitchen35.world, [])  # nothing done
        ctx = WorkingContext(
            task_name="tidy kitchen",
            agent_room="kitchen",
            focus_id="obj-02-plate",
            focus_noun="plate",
            focus_containment="in dish rack",
        )
        with pytest.raises(CompileError):
            retrospect_compile(trace, ctx, goal, grounded)

    def test_compiled_rule_sound_in_origin_world(self, kitchen35, kitchen_lexicon):
        # Instantiating the rule's goal back in the originating world and
        # re-planning must succeed.
        goal = parse_goal(
            "The goal is that the banana is in the garbage bin.", kitchen_lexicon
        )
        bindings = ground(goal, kitchen35.world)
        grounded = to_grounded(goal, bindings)
        seq = plan(kitchen35.world, kitchen35.embodiment, grounded)
        _, trace = execute(kitchen35.world, seq)
        ctx = WorkingContext(
            task_name="tidy kitchen",
            agent_room="kitchen",
            focus_id="obj-30-banana",
            focus_noun="banana",
            focus_adjectives=("overripe",),
            focus_containment="in kitchen",
        )
        rule = retrospect_compile(trace, ctx, goal, grounded)
        regoal = rule.instantiate()
        rebound = ground(regoal, kitchen35.world)
        assert isinstance(rebound, dict)
        assert plan(kitchen35.world, kitchen35.embodiment, to_grounded(regoal, rebound)) is not None
