import pytest


def pytest_addoption(parser):
    parser.addoption("--long-mode", action="store_true", default=False,
                     help="run the full-scale checks (10^6 limit-law draws at full capture, CLI long mode)")


def pytest_configure(config):
    config.addinivalue_line("markers", "longmode: full-scale run, enabled by --long-mode")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long-mode"):
        return
    skip = pytest.mark.skip(reason="needs --long-mode")
    for item in items:
        if "longmode" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def long_mode(request):
    return request.config.getoption("--long-mode")


_CRITERIA = {}


@pytest.fixture
def criterion():
    """record(k, ok, detail): one PASS/FAIL line per acceptance criterion, parts joined."""
    def record(k, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        print(line)
        _CRITERIA.setdefault(k, []).append((bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        parts = _CRITERIA[k]
        ok = all(p[0] for p in parts)
        detail = "; ".join(("" if p[0] else "[FAIL] ") + p[1] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
