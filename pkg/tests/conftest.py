import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n = mark.args[0]
    ok, names = _RESULTS.get(n, (True, []))
    if rep.failed or rep.skipped:
        ok = False
    if rep.when == "call" or not rep.passed:
        names = names + [f"{item.name}:{'ok' if rep.passed else rep.outcome}"]
    _RESULTS[n] = (ok, names)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, names = _RESULTS[n]
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if ok else 'FAIL'} ({', '.join(names)})")
