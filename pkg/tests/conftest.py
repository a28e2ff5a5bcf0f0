import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ergodia.fixtures import FIXTURES, fixture_config, load_fixture

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

MAIN_FIXTURES = ("fix-a", "fix-b", "fix-c")


@pytest.fixture(params=MAIN_FIXTURES)
def fixture_name(request):
    return request.param


@pytest.fixture
def model_measure(fixture_name):
    return load_fixture(fixture_name)


@pytest.fixture
def fix_a():
    return load_fixture("fix-a")


@pytest.fixture
def fix_b():
    return load_fixture("fix-b")


@pytest.fixture
def fix_c():
    return load_fixture("fix-c")


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


def config_of(name):
    return fixture_config(name)


__all__ = ["FIXTURES", "MAIN_FIXTURES", "config_of"]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
