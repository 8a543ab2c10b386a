import re

import numpy as np
import pytest

from magheat.fields import FieldSpec, make_field

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion; printed at the end of the session."""
    lines = request.config.stash[_LINES_KEY]

    def report(number: int, passed: bool, detail: str) -> bool:
        line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        lines.append((number, line))
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda item: item[0]):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def radial_half():
    return make_field(2, FieldSpec("radial-bump", flux=0.5))


@pytest.fixture(scope="session")
def zero_field():
    return make_field(2, FieldSpec("radial-bump", flux=0.0))


@pytest.fixture(scope="session")
def two_bump():
    return make_field(2, FieldSpec("two-bump", flux=0.7))


@pytest.fixture(scope="session")
def curl_bump():
    return make_field(3, FieldSpec("curl-bump"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ball_points(rng, n, d, radius):
    x = rng.normal(size=(n, d))
    x *= (radius * rng.uniform(0.0, 1.0, n) ** (1.0 / d) / np.linalg.norm(x, axis=1))[:, None]
    return x


def strip_ansi(text: str) -> str:
    return re.sub(r"\x1b\[[0-9;]*m", "", text)
