import pytest

from slukit.codec import default_symbols
from slukit.corpus import Utterance
from slukit.grammar import load_grammar


@pytest.fixture(scope="session")
def st():
    return default_symbols()


@pytest.fixture(scope="session")
def demo():
    return load_grammar("demo")


@pytest.fixture(scope="session")
def demo_corpus(demo):
    """Full enumeration of the demo grammar (tens of thousands of utterances)."""
    return list(demo.enumerate())


@pytest.fixture(scope="session")
def demo_sample(demo):
    return demo.sample(2000, seed=11)


@pytest.fixture
def lumiere():
    return Utterance.build("u1", ["vocadom", "allume", "la", "lumière"], "set_device",
                           [("action", 1, 2), ("device", 2, 4)])


@pytest.fixture
def hestia():
    toks = "hestia s' il vous plaît baisser la lampe de la chambre".split()
    return Utterance.build("t6", toks, "set_device", [("action", 5, 6), ("device", 6, 8), ("location-room", 8, 11)])


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
