import pytest

# acceptance outcomes keyed by node id: (label, passed, detail)
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = getattr(getattr(item, "function", None), "criterion", None)
    if label is None or not (rep.when == "call" or rep.failed):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    prev = _CRITERIA.get(item.nodeid)
    passed = rep.passed if prev is None else prev[1] and rep.passed
    _CRITERIA[item.nodeid] = (label, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(_CRITERIA.values(), key=lambda t: t[0]):
        line = f"{'PASS' if passed else 'FAIL'}  {label}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
