import os

import pytest
from hypothesis import HealthCheck, settings

from quasimol.config import load_config

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def default_cfg():
    return load_config("default")


@pytest.fixture(scope="session")
def system(default_cfg):
    """R_max = 2a cluster with the injected band parameters; shared Green cache."""
    return default_cfg.system()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in ACCEPTANCE:
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
