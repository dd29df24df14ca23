import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Context manager timing one acceptance criterion and recording a PASS/FAIL line."""
    results = request.config.stash[_RESULTS]

    @contextmanager
    def run(number, title, limit):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            status = "PASS" if ok and elapsed < limit else "FAIL"
            line = f"criterion {number:2d}: {status}  {title}  ({elapsed:.2f} s, limit {limit} s)"
            results.append((number, line))
            print(line)
        assert elapsed < limit, f"criterion {number} took {elapsed:.2f} s, limit {limit} s"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(results):
            terminalreporter.write_line(line)
