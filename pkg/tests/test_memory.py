import pytest

from tasklearn.errors import NotFoundError, StorageError
from tasklearn.memory import (
    EpisodeLog,
    EpisodeRecord,
    ProceduralRule,
    RuleStore,
    WorkingContext,
    match_rules,
    record_episode,
)
from tasklearn.parser import FOCUS_VAR, GoalExpr, In, NounPhrase


def np(noun, *adjectives):
    return NounPhrase(tuple(adjectives), noun)


def rule(noun="mug", adjectives=None, source=None, target="cupboard", task="tidy kitchen"):
    return ProceduralRule(
        task_name=task,
        noun=noun,
        goal_template=GoalExpr((In(FOCUS_VAR, np(target)),)),
        adjectives=adjectives,
        source=source,
    )


def ctx(noun="mug", adjectives=(), containment="in dish rack", task="tidy kitchen"):
    return WorkingContext(
        task_name=task,
        agent_room="kitchen",
        focus_id="obj-mug",
        focus_noun=noun,
        focus_adjectives=tuple(adjectives),
        focus_containment=containment,
    )


class TestRuleMatching:
    def test_basic_match_instantiates_goal(self):
        store = RuleStore()
        store.add(rule())
        goal = match_rules(store, ctx())
        assert goal == GoalExpr((In(np("mug"), np("cupboard")),))

    def test_empty_store_matches_nothing(self):
        assert match_rules(RuleStore(), ctx()) is None

    def test_adjective_bearing_rule_wins_on_dirty_mug(self):
        store = RuleStore()
        store.add(rule(target="cupboard"))
        store.add(rule(adjectives=("dirty",), target="sink"))
        goal = match_rules(store, ctx(adjectives=("dirty",)))
        assert goal == GoalExpr((In(np("mug", "dirty"), np("sink")),))
        # A plain mug only matches the unconditional rule.
        plain = match_rules(store, ctx(adjectives=()))
        assert plain == GoalExpr((In(np("mug"), np("cupboard")),))

    def test_source_condition_must_match(self):
        store = RuleStore()
        store.add(rule(source="in sink", target="drawer"))
        assert match_rules(store, ctx(containment="in dish rack")) is None
        assert match_rules(store, ctx(containment="in sink")) is not None

    def test_source_bearing_rule_preferred(self):
        store = RuleStore()
        store.add(rule(target="cupboard"))
        store.add(rule(source="in dish rack", target="drawer"))
        goal = match_rules(store, ctx(containment="in dish rack"))
        assert goal.conjuncts[0].location == np("drawer")

    def test_insertion_order_breaks_ties(self):
        store = RuleStore()
        store.add(rule(target="cupboard"))
        store.add(rule(target="drawer"))
        goal = match_rules(store, ctx())
        assert goal.conjuncts[0].location == np("cupboard")

    def test_task_name_is_required_condition(self):
        store = RuleStore()
        store.add(rule(task="store groceries"))
        assert match_rules(store, ctx(task="tidy kitchen")) is None

    def test_rules_immutable_once_stored(self):
        store = RuleStore()
        stored = store.add(rule())
        assert stored.rule_id == "r-0000"
        with pytest.raises(AttributeError):
            stored.noun = "plate"


class TestEpisodeLog:
    def test_append_then_read_back(self, tmp_path):
        log = EpisodeLog(tmp_path / "episodes.ndjson")
        rec = EpisodeRecord(kind="llm", task="tidy kitchen", object_id="obj-1",
                            prompt="p", response="r", category="unviable")
        episode_id = record_episode(log, rec)
        assert log.get(episode_id).response == "r"
        # Reload from disk and compare.
        reloaded = EpisodeLog(tmp_path / "episodes.ndjson")
        assert reloaded.get(episode_id).prompt == "p"
        assert reloaded.get(episode_id).category == "unviable"

    def test_ids_strictly_increasing(self):
        log = EpisodeLog()
        first = log.append(EpisodeRecord(kind="llm", task="t", object_id="o"))
        second = log.append(EpisodeRecord(kind="llm", task="t", object_id="o"))
        assert second > first

    def test_unknown_id_not_found(self):
        log = EpisodeLog()
        with pytest.raises(NotFoundError):
            log.get(7)

    def test_storage_failure_surfaces(self, tmp_path):
        log = EpisodeLog(tmp_path / "missing-dir" / "episodes.ndjson")
        with pytest.raises(StorageError):
            log.append(EpisodeRecord(kind="llm", task="t", object_id="o"))

    def test_category_tally_replay(self, tmp_path):
        path = tmp_path / "episodes.ndjson"
        log = EpisodeLog(path)
        for category in ("unviable", "unviable", "situationally-relevant", None):
            log.append(
                EpisodeRecord(kind="llm", task="t", object_id="o", category=category)
            )
        assert log.category_tally() == {
            "unviable": 2,
            "situationally-relevant": 1,
        }
        assert EpisodeLog(path).category_tally() == log.category_tally()

    def test_schema_version_on_disk(self, tmp_path):
        import json

        path = tmp_path / "episodes.ndjson"
        EpisodeLog(path).append(EpisodeRecord(kind="llm", task="t", object_id="o"))
        doc = json.loads(path.read_text().splitlines()[0])
        assert doc["v"] == 1
