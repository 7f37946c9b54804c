import contextlib
import time

import pytest

from lpverify.checks import CheckSpec, check_names
from lpverify.cli import RunConfig, execute

_CRITERIA: list[str] = []


@pytest.fixture(scope="session")
def quick_reports():
    """The quick-profile suite at seed 0 on one worker, shared between test modules."""
    return execute(RunConfig([CheckSpec(n, seed=0) for n in check_names()], jobs=1, profile="quick"))


@pytest.fixture
def criterion():
    """Context manager that times an acceptance criterion and records one result line."""

    @contextlib.contextmanager
    def run(number: int, title: str, limit_s: float):
        info = {"detail": ""}
        start = time.perf_counter()
        ok = False
        try:
            yield info
            elapsed = time.perf_counter() - start
            assert elapsed < limit_s, f"runtime {elapsed:.1f} s exceeds {limit_s} s"
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.1f} s)"
            if info["detail"]:
                line += f"  {info['detail']}"
            _CRITERIA.append(line)
            print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
