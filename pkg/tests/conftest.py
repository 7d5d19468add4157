import numpy as np
import pytest

from robust_tps import Dataset

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Record one pass/fail line per acceptance criterion; echoed in the summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def log(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def make_data(n=30, d=2, seed=0, noise=0.1, fn=None):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, d))
    f = fn(x) if fn is not None else np.sin(3 * x[:, 0]) + np.cos(2 * x.sum(axis=1))
    return Dataset(x, f + noise * rng.standard_normal(n)), f


@pytest.fixture
def small_data():
    return make_data()[0]
