import numpy as np
import pytest

from visopt import Environment, MetricConfig, Polygon, build_free_space, critical_structure

FIG1_OUTER = [(-1, -1), (11, -1), (11, 1), (9, 1), (9, 5), (1, 5), (1, 1), (-1, 1)]
FIG1_HOLE = [(3, 1), (7, 1), (7, 3), (3, 3)]
FIG2_D1 = [(-1, -1), (11, -1), (11, 1), (-1, 1)]
FIG2_D2 = [(1, 3), (9, 3), (9, 5), (1, 5)]

# a second environment with two holes and a notch, used where two environments are needed
ROOM_OUTER = [(0, 0), (10, 0), (10, 4), (7, 4), (7, 6), (10, 6), (10, 10), (0, 10)]
ROOM_HOLES = [[(2, 2), (4, 2), (4, 4), (2, 4)], [(3, 6.5), (5.5, 7), (4, 8.5)]]


@pytest.fixture(scope="session")
def fig1():
    return build_free_space(Environment.from_lists(FIG1_OUTER, [FIG1_HOLE]))


@pytest.fixture(scope="session")
def fig1_cs(fig1):
    return critical_structure(fig1)


@pytest.fixture(scope="session")
def room():
    return build_free_space(Environment.from_lists(ROOM_OUTER, ROOM_HOLES))


@pytest.fixture(scope="session")
def room_cs(room):
    return critical_structure(room)


@pytest.fixture(scope="session")
def square():
    return build_free_space(Environment.from_lists([(0, 0), (10, 0), (10, 10), (0, 10)]))


@pytest.fixture(scope="session")
def square_cs(square):
    return critical_structure(square)


@pytest.fixture(scope="session")
def fig2_cfg():
    return MetricConfig(Polygon.from_points(FIG2_D2))


def free_points(fs, n, seed, interior=True):
    """Uniform samples from the free space by rejection in its bounding box."""
    rng = np.random.default_rng(seed)
    lo, hi = fs.vertices.min(axis=0), fs.vertices.max(axis=0)
    out = []
    while len(out) < n:
        p = rng.uniform(lo, hi, size=(4 * n, 2))
        c = fs.classify(p)
        keep = c == 1 if interior else c >= 0
        out.extend(p[keep])
    return np.array(out[:n])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
