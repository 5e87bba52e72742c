import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from torsorcount.fan_core import BUILTIN_FANS, FanData  # noqa: E402

SMALL_FANS = ("p1", "p2", "p3", "p1xp1", "f1", "dp7", "dp6", "p1xp1xp1")
_cache: dict[str, FanData] = {}


def fan_data(name: str) -> FanData:
    if name not in _cache:
        _cache[name] = FanData.load(name)
    return _cache[name]


@pytest.fixture(params=BUILTIN_FANS)
def any_fan(request) -> FanData:
    return fan_data(request.param)


@pytest.fixture
def fans():
    return fan_data


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            detail = dict(rep.user_properties).get("acceptance", "")
            num = int(rep.nodeid.split("test_criterion_")[1][:2])
            lines.append((num, f"criterion {num:2d}: {outcome == 'passed' and 'PASS' or 'FAIL'}  {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
