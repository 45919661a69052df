import sys

import numpy as np
import pytest

from p3bo.seqcore import Vocabulary


@pytest.fixture
def ab():
    return Vocabulary.from_string("AB")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = sorted(getattr(mod, "REPORT_LINES", []), key=lambda s: int(s.split()[1].rstrip(":")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
