import math

import numpy as np
import pytest

from qgenfun.states import StateFamily, build_family, constant_family

SECH2_1 = 0.41997434161402607  # sech(1)^2
GAMMA_SPIN_1 = -0.31985000422461225  # -sech(1)^2 tanh(1)


@pytest.fixture(scope="session")
def spin():
    return build_family({"model": "spin"})


@pytest.fixture(scope="session")
def ssh0():
    return build_family({"model": "ssh", "delta_t": 0.2, "temperature": 0.0})


@pytest.fixture(scope="session")
def ssh05():
    return build_family({"model": "ssh", "delta_t": 0.2, "temperature": 0.5})


@pytest.fixture(scope="session")
def dirac_p():
    return build_family({"model": "dirac2d", "mass": 1.0})


@pytest.fixture(scope="session")
def dirac_m():
    return build_family({"model": "dirac2d", "mass": -1.0})


@pytest.fixture(scope="session")
def zline():
    """r(x) = (0, 0, x)."""
    return StateFamily.from_bloch(lambda x: np.array([0.0, 0.0, x[0]]), 1, name="zline")


@pytest.fixture(scope="session")
def circle():
    """Pure great circle r(x) = (sin x, 0, cos x)."""
    return StateFamily.from_bloch(lambda x: np.array([math.sin(x[0]), 0.0, math.cos(x[0])]), 1)


@pytest.fixture(scope="session")
def realket():
    return StateFamily.from_ket(lambda x: np.array([math.cos(x[0]), math.sin(x[0])]), 1, real=True)


@pytest.fixture(scope="session")
def const():
    return constant_family(np.diag([0.75, 0.25]).astype(complex))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion, then assert it."""
    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
