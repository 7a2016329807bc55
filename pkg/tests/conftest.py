import pathlib

import pytest

from linelister.corpus import load_bulletin

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def sample_bulletin():
    """Three-sentence bulletin: a case-starting sentence, a sentence with two
    date phrases and the onset/hospitalization indicators, and a sentence with
    direct and indirect clinical negations."""
    return load_bulletin(None, FIXTURES / "sample_bulletin.conllu")
