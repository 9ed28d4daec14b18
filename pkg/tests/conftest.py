import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", autouse=True)
def jit_warmup():
    """Compile (or load from cache) the tridiagonal kernels once per session,
    so per-test timings measure solving rather than compilation."""
    from logwell.tridiag import eigh_tridiagonal_lowest

    eigh_tridiagonal_lowest(np.full(8, 2.0), np.full(7, -1.0), 2)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one summary line for an acceptance criterion."""

    def _record(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[0].split("-")[1])):
            terminalreporter.write_line(line)
