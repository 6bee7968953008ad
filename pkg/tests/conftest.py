import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from galconn.checks import sample_points
from galconn.expr import Evaluator
from galconn.random_fields import random_setup

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[3, 4], ids=["dim3", "dim4"])
def setup(request):
    return random_setup(request.param, np.random.default_rng(100 + request.param))


@pytest.fixture
def points_for():
    def make(dim, n=30, seed=42):
        pts = sample_points(dim, n, (-1.0, 1.0), seed)
        return pts, Evaluator(pts)

    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k].line())
