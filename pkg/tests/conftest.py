from __future__ import annotations

import json
from importlib import resources

import pytest


def record_line(id, pair_id, tokens, ntp, **extra) -> str:
    return json.dumps({"id": id, "pair_id": pair_id, "tokens": tokens, "ntp": ntp, **extra})


@pytest.fixture
def toy_paths():
    data = resources.files("docode") / "data"
    return str(data / "toy_testbed.jsonl"), str(data / "toy_scm.json")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
