import os
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

SEED = int(os.environ.get("PHASEKIT_SEED", "20240917"))

settings.register_profile(
    "phasekit",
    deadline=None,
    max_examples=int(os.environ.get("PHASEKIT_HYPOTHESIS_EXAMPLES", "60")),
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("phasekit")


@pytest.fixture
def rng():
    """Generator seeded from PHASEKIT_SEED so randomized inputs are reproducible."""
    return np.random.default_rng(SEED)


@pytest.fixture
def quiet():
    """Silence solver warnings inside a test body."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# -- acceptance reporting ------------------------------------------------------
#
# Acceptance tests record one or more parts per criterion; the terminal
# summary prints one PASS/FAIL line per criterion so the verdicts appear in
# plain ``pytest`` output.

def pytest_configure(config):
    config._phasekit_acceptance = {}


@pytest.fixture
def record(request):
    store = request.config._phasekit_acceptance

    def _record(criterion, part, ok, detail):
        store.setdefault(criterion, []).append((part, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {criterion} [{part}]: {detail}")
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_phasekit_acceptance", {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(store):
        parts = store[criterion]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({text})"
                           for name, good, text in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
