import numpy as np
import pytest

from qrlsim.gridworld import load_map, read_map


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def empty20():
    return read_map("empty20")


@pytest.fixture(scope="session")
def obstacles20():
    return read_map("obstacles20")


@pytest.fixture
def sg():
    return load_map("SG")


@pytest.fixture
def s_dot_g():
    return load_map("S.G\n")


@pytest.fixture
def small_world():
    return load_map("S....\n.....\n..#..\n....G\n")


def random_register(rng, n, real=False):
    dim = 2**n
    v = rng.normal(size=dim)
    if not real:
        v = v + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}: {detail}")
