import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def acceptance(request):
    """Record the outcome of one acceptance criterion for the terminal summary.

    Usage: ``acceptance(number, title, passed, detail)``; ``passed=None`` marks a skip.
    """
    results = request.config.stash[_RESULTS]

    def record(number: int, title: str, passed: bool | None, detail: str = "") -> None:
        results[number] = (title, passed, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"{status} criterion {number}: {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
