from pathlib import Path

import pytest

from quasildpc._accel import HAVE_NUMBA
from quasildpc.tanner import TannerGraph, make_regular_code

GOLDEN = Path(__file__).parent / "golden"

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def read_golden(name):
    rows = []
    for line in (GOLDEN / name).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            rng, level, bits = line.split()
            rows.append((rng, float(level), bits))
    return rows


@pytest.fixture(scope="session")
def code504():
    return make_regular_code(504, 3, 6, 7)


@pytest.fixture(scope="session")
def code96():
    return make_regular_code(96, 3, 6, 1)


@pytest.fixture
def single_check():
    return TannerGraph(3, 1, [[0], [0], [0]])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
