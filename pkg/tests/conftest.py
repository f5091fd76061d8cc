import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spinrod import DimensionlessParams, Setup  # noqa: E402


@pytest.fixture(params=[("a", 2), ("a", 3), ("b", 2), ("b", 3)], ids=lambda p: f"{p[0]}{p[1]}d")
def any_params(request):
    setup, dim = request.param
    return DimensionlessParams(Re=2.0, RbInv=0.5, FrInv=0.3 if dim == 3 else 0.0, eps=0.2,
                               dim=dim, setup=Setup.parse(setup))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: (int(s.split()[2].rstrip(":").split(".")[0]), s)):
        terminalreporter.write_line(line)
