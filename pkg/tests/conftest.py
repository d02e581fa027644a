import numpy as np
import pytest

from clmm_game.amm import TickGrid
from clmm_game.game import GameSpec

from _report import LINES


@pytest.fixture
def two_player():
    """N=2, M=1, ticks (1, 4) at q0 = 4 so eps = 1; f = 1, tau = 0.25."""
    return GameSpec(TickGrid((1.0, 4.0)), 1.0, 4.0, [1.0], [0.25], [0.0], [10.0, 10.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
