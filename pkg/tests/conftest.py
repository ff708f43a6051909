"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def detail(request):
    """Call with a short string to attach measured values to the summary line."""
    notes = []
    request.node._criterion_detail = notes
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    notes = "; ".join(getattr(item, "_criterion_detail", []))
    _RESULTS[number] = (title, rep.passed, notes)
    line = f"criterion {number:>2} {'PASS' if rep.passed else 'FAIL'}: {title}" + (f" [{notes}]" if notes else "")
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, notes = _RESULTS[number]
        tail = f" [{notes}]" if notes else ""
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}{tail}")
