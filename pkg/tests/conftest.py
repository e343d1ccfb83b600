import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fock_columns(amplitudes, n_max):
    """Fock amplitudes of several coherent states as columns, built term by term."""
    from math import factorial, sqrt

    n = np.arange(n_max + 1)
    norm = np.array([1 / sqrt(float(factorial(int(k)))) for k in n])
    a = np.asarray(amplitudes)
    return np.exp(-np.abs(a) ** 2 / 2)[None, :] * a[None, :] ** n[:, None] * norm[:, None]


ACCEPTANCE_LINES = []


def report(number, name, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
