import pytest

_criteria: dict[int, tuple[str, str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, title)`` then ``detail`` on the returned dict."""
    state = {}

    def start(number, title):
        state.update(number=number, title=title, detail="")
        return state

    yield start
    if "number" in state:
        failed = getattr(request.node, "_failed", True)
        _criteria[state["number"]] = ("FAIL" if failed else "PASS", state["title"], state["detail"])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        item._failed = report.failed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        status, title, detail = _criteria[n]
        line = f"criterion {n:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
