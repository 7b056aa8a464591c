import numpy as np
import pytest

from trimode import OscillatorParams, SqueezeSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def generic_params():
    return OscillatorParams(1.3, 0.9, 0.2, 0.1, 0.3, 0.2)


@pytest.fixture
def hmr_params():
    return OscillatorParams(5.0, 2.0, 3.0, 2.0, 1.0, 1.0)


@pytest.fixture
def squeezed():
    return SqueezeSpec((0.3, 0.5, 0.2), (0.1, 0.7, 1.2))


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion; echoed at the end of the run."""

    def report(number: int, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
