import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from nconn.geometry import SplitChart, five_d_chart

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture
def frozen():
    return FROZEN


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chart5():
    return five_d_chart()


@pytest.fixture
def chart22():
    return SplitChart(("x1", "x2"), ("y1", "y2"))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
