import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maxcov.tsplib import Instance, Metric, bundled_instance, parse_tsplib  # noqa: E402

DATA = Path(__file__).parent / "data"

FIXTURE_3 = """NAME: tri
TYPE: TSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
3 6 8
EOF
"""


@pytest.fixture
def tri():
    return parse_tsplib(FIXTURE_3)


@pytest.fixture(scope="session")
def ch150():
    return bundled_instance("ch150")


def random_instance(rng, n, spread=100.0):
    return Instance(f"rand{n}", rng.uniform(0, spread, size=(n, 2)), 0, Metric.EUC2D_EXACT)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
