import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

SQUARE_X = np.array([
    [-1, -1, -1, -0.8, -0.65, -0.5, -0.8, -0.65, -0.5, 1, 1, 1],
    [0.8, 0.65, 0.5, 1, 1, 1, -1, -1, -1, -0.8, -0.65, -0.5],
])
SQUARE_W = np.array([[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0]])


@pytest.fixture
def square_x():
    return SQUARE_X.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def same_columns(a, b, tol):
    """True when the column sets of ``a`` and ``b`` agree up to permutation."""
    if a.shape != b.shape:
        return False
    used = set()
    for i in range(a.shape[1]):
        dist = np.linalg.norm(b - a[:, [i]], axis=0)
        dist[list(used)] = np.inf
        j = int(np.argmin(dist))
        if dist[j] > tol:
            return False
        used.add(j)
    return True


@pytest.fixture
def acceptance(request, capsys):
    """Print one result line per acceptance criterion and keep it for the summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
