import sys
from fractions import Fraction as Fr
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import DATA, load_kb  # noqa: E402
from profmatch.index import build_index  # noqa: E402
from profmatch.lattice import parse_profiles  # noqa: E402
from profmatch.measure import Weighting, parse_weights  # noqa: E402


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def five():
    """Five-element lattice: C1 top, C2 and C3 below, C4 below C3, C5 bottom."""
    return load_kb("five.kb")


@pytest.fixture
def five_w(five):
    return parse_weights((DATA / "five.weights").read_text(), five)


@pytest.fixture
def diamond():
    return load_kb("diamond.kb")


@pytest.fixture
def diamond_w(diamond):
    return Weighting((Fr(1, 10), Fr(2, 5), Fr(3, 10), Fr(1, 5)))


@pytest.fixture
def diamond_index(diamond, diamond_w):
    profiles = parse_profiles((DATA / "diamond.profiles").read_text(), diamond)
    return build_index(diamond, diamond_w, profiles)


@pytest.fixture
def antichain():
    return load_kb("antichain.kb")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
