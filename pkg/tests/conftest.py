import pytest

CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(k, name, ok, detail)`` records and asserts one acceptance line."""

    def record(k, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d} {name}: {detail}"
        CRITERIA[k] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])


@pytest.fixture(autouse=True)
def _node_cap(monkeypatch):
    # tests assume the default node cap regardless of the caller's environment
    monkeypatch.delenv("FCOVER_MAX_NODES", raising=False)
