import pytest

CRITERIA = range(1, 10)
_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store the outcome of one acceptance criterion for the closing summary."""
    results = request.config.stash.setdefault(_RESULTS, {})

    def _record(n, ok, detail=""):
        results[n] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, None)
    if results is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in CRITERIA:
        ok, detail = results.get(n, (False, "did not run to completion"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
