import json

import pytest

from conftest import data_path
from tasklearn.errors import ScenarioError
from tasklearn.evalharness import (
    CorpusRecord,
    emit_report,
    load_labeled_corpus,
    run_corpus,
)


@pytest.fixture(scope="module")
def corpus():
    return load_labeled_corpus(data_path("kitchen35_corpus.ndjson"))


@pytest.fixture(scope="module")
def kitchen_report(corpus, kitchen35, kitchen_prefs):
    return run_corpus(corpus, kitchen35, kitchen_prefs)


class TestRunCorpus:
    def test_bundled_corpus_full_viability_agreement(self, kitchen_report):
        assert kitchen_report.labeled >= 40
        assert kitchen_report.viability_agreements == kitchen_report.labeled

    def test_headline_unviable_share_over_70(self, kitchen_report):
        assert kitchen_report.unviable_share > 70.0

    def test_empty_corpus_no_division_by_zero(self, kitchen35, kitchen_prefs):
        report = run_corpus([], kitchen35, kitchen_prefs)
        assert report.total == 0
        assert report.unviable_share == 0.0
        assert sum(report.percentages().values()) == 0.0
        assert emit_report(report, "text")

    def test_deterministic_byte_identical_json(self, corpus, kitchen35, kitchen_prefs):
        a = emit_report(run_corpus(corpus, kitchen35, kitchen_prefs), "json")
        b = emit_report(run_corpus(corpus, kitchen35, kitchen_prefs), "json")
        assert a == b

    def test_corpus_scenario_mismatch(self, kitchen35, kitchen_prefs):
        bad = CorpusRecord(
            key="k",
            prompt="p",
            responses=("The goal is that the mug is in the cupboard.",),
            label="unviable",
            focus="obj-not-there",
        )
        with pytest.raises(ScenarioError):
            run_corpus([bad], kitchen35, kitchen_prefs)

    def test_unknown_label_rejected(self, kitchen35, kitchen_prefs):
        bad = CorpusRecord(key="k", prompt="p", responses=("x",), label="meh")
        with pytest.raises(ValueError):
            run_corpus([bad], kitchen35, kitchen_prefs)

    def test_percentages_sum_to_100(self, kitchen_report):
        assert abs(sum(kitchen_report.percentages().values()) - 100.0) <= 0.1


class TestEmitReport:
    def test_csv_four_rows_plus_total(self, kitchen_report):
        doc = emit_report(kitchen_report, "csv")
        lines = doc.strip().splitlines()
        assert lines[0] == "category,count,percent"
        assert len(lines) == 6
        assert lines[-1].startswith("total,")

    def test_json_round_trips_schema(self, kitchen_report):
        doc = json.loads(emit_report(kitchen_report, "json"))
        assert doc["v"] == 1
        assert set(doc["verdicts"]) == {
            "unviable",
            "viable-not-reasonable",
            "reasonable",
            "situationally-relevant",
        }
        assert doc["total"] == sum(doc["verdicts"].values())
        assert isinstance(doc["unviable_share"], float)
        assert doc["viability_agreement"]["agreed"] == doc["viability_agreement"]["labeled"]

    def test_text_matches_golden(self, kitchen_report):
        golden = data_path("golden_report.txt").read_text(encoding="utf-8")
        assert emit_report(kitchen_report, "text") == golden

    def test_text_column_aligned(self, kitchen_report):
        lines = emit_report(kitchen_report, "text").splitlines()
        percent_columns = {line.index("%") for line in lines[1:6]}
        assert len(percent_columns) == 1

    def test_unknown_format(self, kitchen_report):
        with pytest.raises(ValueError):
            emit_report(kitchen_report, "yaml")

    def test_confusion_is_diagonal_on_bundled_corpus(self, kitchen_report):
        for verdict, per_label in kitchen_report.confusion.items():
            assert set(per_label) == {verdict}
