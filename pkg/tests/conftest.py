import json
from pathlib import Path

import pytest

from tasklearn.parser import Lexicon
from tasklearn.oversight import PreferenceModel
from tasklearn.world import load_scenario_file

DATA = Path(__file__).resolve().parent.parent / "src" / "tasklearn" / "data"


def data_path(name: str) -> Path:
    return DATA / name


@pytest.fixture(scope="session")
def kitchen35():
    return load_scenario_file(data_path("kitchen35.json"))


@pytest.fixture(scope="session")
def kitchen_lexicon(kitchen35):
    return Lexicon.from_scenario(kitchen35)


@pytest.fixture(scope="session")
def kitchen_prefs(kitchen35, kitchen_lexicon):
    return PreferenceModel.load(data_path("kitchen35_prefs.json"), kitchen_lexicon)


@pytest.fixture(scope="session")
def mailroom():
    return load_scenario_file(data_path("mailroom.json"))


@pytest.fixture(scope="session")
def mailroom_lexicon(mailroom):
    return Lexicon.from_scenario(mailroom)


@pytest.fixture(scope="session")
def groceries():
    return load_scenario_file(data_path("groceries.json"))


@pytest.fixture(scope="session")
def groceries_lexicon(groceries):
    return Lexicon.from_scenario(groceries)


@pytest.fixture(scope="session")
def groceries_prefs(groceries, groceries_lexicon):
    return PreferenceModel.load(data_path("groceries_prefs.json"), groceries_lexicon)


@pytest.fixture()
def tiny_scenario_text():
    """One room, one open receptacle, one object: the hand-enumerable world."""
    return json.dumps(
        {
            "name": "tiny",
            "task": "tidy up",
            "rooms": [{"id": "room-den", "name": "den"}],
            "receptacles": [
                {
                    "id": "loc-box",
                    "name": "box",
                    "in_room": "room-den",
                    "openable": True,
                    "open": True,
                }
            ],
            "objects": [
                {
                    "id": "obj-ball",
                    "name": "ball",
                    "noun": "ball",
                    "adjectives": [],
                    "in": "room-den",
                }
            ],
            "agent": {"id": "agent", "name": "agent", "in": "room-den"},
            "embodiment": {
                "gripper_capacity": 1,
                "action_repertoire": [
                    "move-to",
                    "pick-up",
                    "put-in",
                    "put-on",
                    "open",
                    "close",
                ],
                "perception_range": "current-room-only",
            },
        }
    )
