import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """report(k, ok, detail): record and print one PASS/FAIL line, then assert."""
    def _report(k, ok, detail, gating=True):
        tag = "PASS" if ok else "FAIL"
        if not gating:
            tag = f"INFO ({tag.lower()}, non-gating)"
        line = f"{tag} criterion {k}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        if gating:
            assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
