import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from accelbuild.fixtures import copy_fixture  # noqa: E402

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion): exit criterion id, e.g. AC-1")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        ok = rep.passed
        prev = _acceptance.get(key, True)
        _acceptance[key] = prev and ok


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k.split("-")[1])):
        terminalreporter.write_line(f"{key}: {'PASS' if _acceptance[key] else 'FAIL'}")


@pytest.fixture
def ws1(tmp_path):
    """A fresh copy of the reference workspace."""
    return copy_fixture(tmp_path / "ws1")
