import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed
        seconds = rep.duration
        prev = _criteria.get(number)
        if prev is not None:
            ok, seconds = ok and prev[1], seconds + prev[2]
        _criteria[number] = (title, ok, seconds)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, seconds = _criteria[number]
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title} ({seconds:.1f} s)")
