from __future__ import annotations

import json
from pathlib import Path

import pytest

from scenejudge.gateway import Gateway, MockBackend
from scenejudge.scene import load_scene_env

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def one_room_env():
    return load_scene_env(FIXTURES / "one_room.json")


@pytest.fixture(scope="session")
def two_room_env():
    return load_scene_env(FIXTURES / "two_room.json")


@pytest.fixture(scope="session")
def three_room_env():
    return load_scene_env(FIXTURES / "three_room.json")


@pytest.fixture
def scene_doc() -> dict:
    """A fresh, mutable copy of the two-room document."""
    return json.loads((FIXTURES / "two_room.json").read_text())


def mock_gateway(script: dict, **kw) -> Gateway:
    return Gateway(MockBackend(script), **kw)


@pytest.fixture
def gateway_factory():
    return mock_gateway


# -- acceptance reporting --------------------------------------------------------------------
# Tests marked ``criterion("name")`` get one PASS/FAIL/SKIP line in the terminal summary.

_CRITERIA: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _CRITERIA.append((marker.args[0], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, status, detail in _CRITERIA:
        terminalreporter.write_line(f"{status} {name}" + (f" ({detail})" if detail else ""))
