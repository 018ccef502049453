import pytest

CRITERIA = {
    1: "axiom soundness sweep",
    2: "elimination to basic terms",
    3: "mu normalization and state invariance",
    4: "quantum backend trace and completeness",
    5: "teleportation",
    6: "BB84 n = 1, 2",
    7: "E91 n = 1, 2",
    8: "strong bisimulation vs brute force",
    9: "mutation sensitivity",
}

_results: dict = {}


@pytest.fixture
def criterion():
    """Record the verdict of an acceptance criterion: criterion(n, ok, detail)."""
    def record(n, ok, detail=""):
        _results[n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n not in _results:
            terminalreporter.write_line(f"criterion {n} ({name}): NOT RUN")
            continue
        ok, detail = _results[n]
        terminalreporter.write_line(f"criterion {n} ({name}): {'PASS' if ok else 'FAIL'}  {detail}")
