import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def acceptance(request):
    """Record one line per acceptance criterion: acceptance(num, title, ok, detail)."""
    log = request.config.stash[_RESULTS]

    def record(num, title, ok, detail=""):
        log.append((num, title, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_RESULTS, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(rows, key=lambda r: r[0]):
        terminalreporter.line(f"{'PASS' if ok else 'FAIL'}  {num:>2}. {title}: {detail}")
