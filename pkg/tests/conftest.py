import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

from maupertuis import potential  # noqa: E402


@pytest.fixture(scope="session")
def cos1d():
    return potential.cos1d()


@pytest.fixture(scope="session")
def cos2d():
    return potential.cos2d()


@pytest.fixture(scope="session")
def two_mode():
    """Even two-mode potential with two maximizers per cell."""
    return potential.from_modes(1, [((1,), 0.5), ((3,), -0.4)], name="two_mode")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"{n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
