import pytest

from levyexp.model import Exponential, LevyModel, TwoPointMass
from levyexp.montecarlo import PathConfig


@pytest.fixture
def bm():
    return LevyModel.brownian(1.0, 1.0)


@pytest.fixture
def jd_two_point():
    return LevyModel.jump_diffusion(1.0, 1.0, 1.0, TwoPointMass(-1.0, 0.5, 1.0, 0.5))


@pytest.fixture
def jd_neg_exp():
    return LevyModel.jump_diffusion(1.0, 1.0, 1.0, Exponential(0.5, -1))


@pytest.fixture
def cpp_sub():
    return LevyModel.compound_poisson(2.0, Exponential(1.0))


@pytest.fixture
def stable_half():
    return LevyModel.stable_subordinator(0.5)


@pytest.fixture
def small_cfg():
    return PathConfig(n_paths=20_000)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
