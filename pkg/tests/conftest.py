import pytest

from rwbroadcast.topology import cycle, path


@pytest.fixture(params=["path", "cycle"])
def kind(request):
    return request.param


def make(kind, n):
    return path(n) if kind == "path" else cycle(n)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def report(request):
    """Record one acceptance line; returns the pass flag for asserting."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(num: int, ok: bool, detail: str) -> bool:
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}"
        store[num] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        terminalreporter.write_line(store[num])
