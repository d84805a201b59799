"""Shared fixtures: live mock services on ephemeral loopback ports.

Also prints one verdict line per end-to-end acceptance check whenever
tests/test_acceptance.py took part in the session, independent of the
configured verbosity.
"""

import pytest

from pocketflow.mock.exec_server import MockExecServer
from pocketflow.mock.repo_server import MockRepoServer


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts: dict[str, str] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::", 1)[1]
            if outcome == "passed" and report.when != "call":
                continue  # setup/teardown success is not a verdict
            if verdicts.get(name) != "FAIL":
                verdicts[name] = "PASS" if outcome == "passed" else "FAIL"
    if not verdicts:
        return
    terminalreporter.section("acceptance")
    for name, verdict in verdicts.items():
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def repo_server():
    server = MockRepoServer()
    server.start()
    yield server
    server.close()


@pytest.fixture
def exec_server():
    server = MockExecServer()
    server.start()
    yield server
    server.close()
