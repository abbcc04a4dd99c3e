import sys
from pathlib import Path

import pytest

from sbf import SbfConfig, fixture_backend, load_ontology, tag_universe

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(FIXTURES))

# The three worked caption pairs the metric's behavior is pinned to:
# (candidate, reference, candidate phrases, reference phrases,
#  tp names, fp names, fn names)
WORKED_EXAMPLES = [
    (
        "A bell is ringing while birds are chirping in the background",
        "A bell rings while people talk in a courtyard",
        ["a bell is ringing", "birds are chirping in the background"],
        ["a bell rings", "people talk in a courtyard"],
        {"Bell"},
        {"Bird"},
        {"Conversation"},
    ),
    (
        "The waves are crashing against the shore and splashing",
        "Ocean waves roll in and out from the shore",
        ["the waves are crashing against the shore", "splashing"],
        ["ocean waves roll in", "out from the shore"],
        {"Waves (surf)", "Ocean"},
        set(),
        set(),
    ),
    (
        "Rain is pouring down the street with traffic sounds",
        "A river is flowing relatively swiftly and a waterfall flows",
        ["rain is pouring down the street", "traffic sounds"],
        ["a river is flowing", "a waterfall flows"],
        {"Raindrop"},
        {"Traffic noise, roadway noise"},
        {"Stream"},
    ),
]


@pytest.fixture(scope="session")
def mini_ontology_path() -> Path:
    return FIXTURES / "mini_ontology.json"


@pytest.fixture(scope="session")
def embeddings_path() -> Path:
    return FIXTURES / "embeddings.json"


@pytest.fixture(scope="session")
def mini_universe(mini_ontology_path):
    return tag_universe(load_ontology(mini_ontology_path))


@pytest.fixture(scope="session")
def fix_config(embeddings_path):
    return SbfConfig(backend=fixture_backend(embeddings_path))
