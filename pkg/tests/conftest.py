import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crsim.config import DEFAULT_CONFIG

settings.register_profile("crsim", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("crsim")


@pytest.fixture
def cfg():
    return DEFAULT_CONFIG


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
