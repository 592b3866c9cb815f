import numpy as np
import pytest

from netconstruct import kernels
from netconstruct.numerics import FieldTag


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[FieldTag.REAL, FieldTag.COMPLEX], ids=["R", "C"])
def field(request):
    return request.param


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
