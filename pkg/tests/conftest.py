import numpy as np
import pytest
from hypothesis import settings

from mhdeoct.data import Dataset, build_threshold_sets
from mhdeoct.tree import TreeParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_dataset(X, y, K=None):
    y = np.asarray(y)
    return Dataset(np.asarray(X, dtype=float), y, int(K or y.max()))


def random_dataset(rng, n=60, P=3, K=3, levels=None):
    """Scaled-looking data; ``levels`` limits distinct values per feature to force ties."""
    if levels:
        X = rng.integers(0, levels, (n, P)) / max(levels - 1, 1)
    else:
        X = rng.random((n, P))
    y = rng.integers(1, K + 1, n)
    return make_dataset(X, y, K)


def random_tree(rng, th, depth, p_artificial=0.2):
    """Tree with thresholds drawn from the threshold sets."""
    sb = 2**depth - 1
    a = rng.integers(1, th.P + 1, sb)
    a[rng.random(sb) < p_artificial] = 0
    b = np.array([rng.choice(th[p]) if p else 0.0 for p in a])
    return TreeParams(depth, a, b)


@pytest.fixture
def toy():
    """Four samples on one feature, classes split cleanly at 0.4."""
    return make_dataset([[0.0], [0.2], [0.6], [1.0]], [1, 1, 2, 2])


@pytest.fixture
def toy_th(toy):
    return build_threshold_sets(toy)


@pytest.fixture
def xor():
    return make_dataset([[0, 0], [0, 1], [1, 0], [1, 1]], [1, 2, 2, 1])


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
