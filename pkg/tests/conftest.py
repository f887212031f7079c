import sys
from pathlib import Path

import pytest

from assist_reasoner import load_kb, load_lexicon, parse_scene_graph

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).resolve().parents[1] / "src" / "assist_reasoner" / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(DATA / "lexicon.tsv")


@pytest.fixture(scope="session")
def oven_kb():
    return load_kb(DATA / "oven_kb.csv")


@pytest.fixture(scope="session")
def knife_kb():
    return load_kb(DATA / "knife_kb.csv")


@pytest.fixture(scope="session")
def axe_kb():
    return load_kb(DATA / "axe_kb.csv")


@pytest.fixture
def oven_graph():
    return parse_scene_graph(DATA / "oven.json")


@pytest.fixture
def knife_graph():
    return parse_scene_graph(DATA / "knife.json")


@pytest.fixture
def axe_graph():
    return parse_scene_graph(DATA / "axe.json")
