"""Build the bundled kitchen35 replay/eval corpus.

Runs the learning loop over the kitchen35 scenario with a scripted backend in
record mode, so every recorded prompt key matches what the loop really
produces, then attaches the designed label, focus object and task to each
record. Re-run after changing scenario, templates, prompt format or repair
wording:

    PYTHONPATH=src python3 tools/build_kitchen35_corpus.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from tasklearn.agent import LoopConfig, Services, run_task
from tasklearn.evalharness import load_labeled_corpus, run_corpus, emit_report
from tasklearn.gateway import BackendConfig, LLMGateway, MODE_RECORD, MODE_REPLAY, TokenLedger
from tasklearn.memory import EpisodeLog, RuleStore
from tasklearn.oversight import OversightQueue, PreferenceModel
from tasklearn.parser import Lexicon
from tasklearn.prompts import default_bank
from tasklearn.world import load_scenario_file

DATA = ROOT / "src" / "tasklearn" / "data"
CORPUS = DATA / "kitchen35_corpus.ndjson"

U = "unviable"
R = "reasonable"
VNR = "viable-not-reasonable"
SR = "situationally-relevant"

PREFERRED = {}  # noun -> (location, close?)


def load_preferred():
    doc = json.loads((DATA / "kitchen35_prefs.json").read_text())
    for noun, sentence in doc["preferences"]["tidy kitchen"].items():
        PREFERRED[noun] = sentence


def accept_sentence(noun, phrase=None):
    sentence = PREFERRED[noun]
    if phrase and phrase != noun:
        sentence = sentence.replace(f"the {noun} is", f"the {phrase} is", 1)
    return sentence


def u_credenza(noun):
    return (f"The goal is that the {noun} is in the credenza.", U)


def u_pantry(noun):
    return (f"The goal is that the {noun} is in the pantry.", U)


def u_clean(noun):
    return (f"The goal is that the {noun} is clean.", U)


def u_structure(noun, loc):
    return (f"Put the {noun} in the {loc}.", U)


def u_empty():
    return ("", U)


def u_ambiguous():
    return ("The goal is that the mug is in the cupboard.", U)


def wrong_pref(noun, loc):
    return (
        f"The goal is that the {noun} is in the {loc} and the {loc} is closed.",
        R,
    )


def nonsense(noun, loc):
    return (f"The goal is that the {noun} is in the {loc}.", VNR)


def ok(noun, phrase=None):
    return (accept_sentence(noun, phrase), SR)


def design():
    """(object id, [(response, label), ...]) in scenario id order."""
    return [
        ("obj-01-mug", [u_ambiguous(), ok("mug", "clean mug")]),
        ("obj-02-plate", [u_credenza("plate"), ok("plate")]),
        ("obj-03-bowl", [u_credenza("bowl"), u_pantry("bowl"), ok("bowl")]),
        ("obj-04-glass", [u_structure("glass", "cupboard"), u_pantry("glass"), ok("glass")]),
        ("obj-05-fork", [wrong_pref("fork", "cupboard"), ok("fork")]),
        ("obj-06-spoon", [u_credenza("spoon"), u_pantry("spoon"), u_structure("spoon", "drawer"), ok("spoon")]),
        ("obj-07-ladle", [u_pantry("ladle"), u_clean("ladle"), u_credenza("ladle"), ok("ladle")]),
        ("obj-08-mug", [u_ambiguous(), ok("mug", "dirty mug")]),
        ("obj-09-knife", [wrong_pref("knife", "cupboard"), ok("knife")]),
        ("obj-10-spatula", [u_structure("spatula", "drawer"), u_credenza("spatula"), u_pantry("spatula"), ok("spatula")]),
        ("obj-11-whisk", [u_credenza("whisk"), u_structure("whisk", "drawer"), u_pantry("whisk"), ok("whisk")]),
        ("obj-12-grater", [u_empty(), u_credenza("grater"), u_pantry("grater"), ok("grater")]),
        ("obj-13-peeler", [u_pantry("peeler"), u_structure("peeler", "drawer"), u_clean("peeler"), ok("peeler")]),
        ("obj-14-sponge", [ok("sponge")]),
        ("obj-15-pan", [u_clean("pan"), u_credenza("pan"), ok("pan")]),
        ("obj-16-pot", [u_pantry("pot"), u_structure("pot", "cupboard"), ok("pot")]),
        ("obj-17-kettle", [u_credenza("kettle"), u_pantry("kettle"), u_clean("kettle"), ok("kettle")]),
        ("obj-18-cutting-board", [u_structure("cutting board", "cupboard"), u_pantry("cutting board"), u_credenza("cutting board"), ok("cutting board")]),
        ("obj-19-colander", [u_credenza("colander"), u_pantry("colander"), u_structure("colander", "cupboard"), u_clean("colander")]),
        ("obj-20-serving-spoon", [u_pantry("serving spoon"), u_credenza("serving spoon"), u_clean("serving spoon"), u_structure("serving spoon", "drawer")]),
        ("obj-21-dish-towel", [u_structure("dish towel", "drawer"), u_credenza("dish towel"), u_pantry("dish towel"), u_empty()]),
        ("obj-22-milk", [u_pantry("milk"), ok("milk")]),
        ("obj-23-juice", [u_credenza("juice"), u_clean("juice"), ok("juice")]),
        ("obj-24-butter", [nonsense("butter", "garbage bin"), ok("butter")]),
        ("obj-25-cheese", [u_clean("cheese"), u_pantry("cheese"), u_credenza("cheese"), u_structure("cheese", "refrigerator")]),
        ("obj-26-apple", [nonsense("apple", "sink"), ok("apple")]),
        ("obj-27-jam", [u_credenza("jam"), u_structure("jam", "refrigerator"), u_pantry("jam"), u_clean("jam")]),
        ("obj-28-can-of-soup", [u_pantry("can of soup"), u_credenza("can of soup"), ok("can of soup")]),
        ("obj-29-cereal", [u_pantry("cereal"), u_clean("cereal"), u_structure("cereal", "cupboard"), u_credenza("cereal")]),
        ("obj-30-banana", [u_credenza("banana"), u_pantry("banana"), u_clean("banana"), u_empty()]),
        ("obj-31-newspaper", [u_structure("newspaper", "recycling bin"), u_pantry("newspaper"), u_empty(), u_credenza("newspaper")]),
        ("obj-32-bottle", [u_pantry("bottle"), u_credenza("bottle"), u_structure("bottle", "recycling bin"), u_clean("bottle")]),
        ("obj-33-can", [u_credenza("can"), u_clean("can"), u_pantry("can"), u_structure("can", "recycling bin")]),
        ("obj-34-wrapper", [u_clean("wrapper"), u_credenza("wrapper"), u_structure("wrapper", "garbage bin"), u_pantry("wrapper")]),
        ("obj-35-eggshell", [u_pantry("eggshell"), u_structure("eggshell", "garbage bin"), u_credenza("eggshell"), u_clean("eggshell")]),
    ]


def main():
    load_preferred()
    plan = design()
    scenario = load_scenario_file(DATA / "kitchen35.json")
    lexicon = Lexicon.from_scenario(scenario)
    prefs = PreferenceModel.load(DATA / "kitchen35_prefs.json", lexicon)

    flat = [(oid, resp, label) for oid, entries in plan for resp, label in entries]
    script = tuple(resp for _, resp, _ in flat)

    CORPUS.unlink(missing_ok=True)
    gateway = LLMGateway(
        BackendConfig(mode=MODE_RECORD, corpus_path=CORPUS, script=script)
    )
    services = Services(
        gateway=gateway,
        ledger=TokenLedger(),
        templates=default_bank(),
        rules=RuleStore(),
        episodes=EpisodeLog(),
        oversight=OversightQueue(),
        lexicon=lexicon,
        prefs=prefs,
    )
    report, _ = run_task(scenario, LoopConfig(), services)
    print("recorded llm calls:", report.llm_calls)
    assert report.llm_calls == len(flat), (report.llm_calls, len(flat))

    lines = CORPUS.read_text().splitlines()
    assert len(lines) == len(flat), (len(lines), len(flat))
    annotated = []
    for line, (oid, resp, label) in zip(lines, flat):
        doc = json.loads(line)
        assert doc["responses"] == [resp], (doc["responses"], resp)
        doc["label"] = label
        doc["focus"] = oid
        doc["task"] = scenario.task
        annotated.append(json.dumps(doc))
    CORPUS.write_text("\n".join(annotated) + "\n")

    labels = [label for _, _, label in flat]
    total = len(labels)
    unviable = labels.count(U)
    print(f"records: {total}, unviable: {unviable} ({100.0 * unviable / total:.1f}%)")
    assert total >= 40 and 100.0 * unviable / total > 70.0

    # Replay sanity: the recorded corpus must drive an identical run.
    replay = LLMGateway(BackendConfig(mode=MODE_REPLAY, corpus_path=CORPUS))
    services2 = Services(
        gateway=replay,
        ledger=TokenLedger(),
        templates=default_bank(),
        rules=RuleStore(),
        episodes=EpisodeLog(),
        oversight=OversightQueue(),
        lexicon=lexicon,
        prefs=prefs,
    )
    report2, _ = run_task(scenario, LoopConfig(), services2)
    assert report2.final_digest == report.final_digest
    assert report2.llm_calls == report.llm_calls
    print("replay run matches; final digest:", report2.final_digest)

    eval_report = run_corpus(load_labeled_corpus(CORPUS), scenario, prefs)
    print("viability agreement:", eval_report.viability_agreements, "/", eval_report.labeled)
    assert eval_report.viability_agreements == eval_report.labeled == total
    (DATA / "golden_report.txt").write_text(emit_report(eval_report, "text"))
    print(emit_report(eval_report, "text"))


if __name__ == "__main__":
    main()
