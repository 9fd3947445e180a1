import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from irkit.corpus import load_corpus
from irkit.execmodel import build_model

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def tiny_path() -> Path:
    return FIXTURES / "tiny"


@pytest.fixture(scope="session")
def tiny_corpus(tiny_path):
    return load_corpus(tiny_path)


@pytest.fixture(scope="session")
def tiny_app(tiny_corpus):
    return tiny_corpus.apps["tinyapp"]


@pytest.fixture(scope="session")
def tiny_screens(tiny_app):
    return {s.id: s for s in tiny_app.screens}


@pytest.fixture(scope="session")
def tiny_model(tiny_app, tiny_screens):
    return build_model(tiny_app.trace_records, tiny_screens)
