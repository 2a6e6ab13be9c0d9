import numpy as np
import pytest

from surfflo import layout as lo


@pytest.fixture(scope="session")
def lay3():
    return lo.build(3)


@pytest.fixture(scope="session")
def lay5():
    return lo.build(5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def verdicts():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    ran = any("test_acceptance" in str(r.nodeid) for rs in terminalreporter.stats.values() for r in rs if hasattr(r, "nodeid"))
    if not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in range(1, 11):
        ok, detail = ACCEPTANCE.get(k, (False, "not run or did not complete"))
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
