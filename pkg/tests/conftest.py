import sys

import numpy as np
import pytest

from swdtau.signal_model import FeaturePoint


def separable_points(per_class=20, seed=7):
    """Two tight clusters in (tau, p): SWD near (0.9, 0.001), non-SWD near (0.05, 0.8)."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(per_class):
        pts.append(FeaturePoint(0.9 + rng.uniform(-0.02, 0.02), 0.001 + rng.uniform(0, 0.001), True))
        pts.append(FeaturePoint(0.05 + rng.uniform(-0.02, 0.02), 0.8 + rng.uniform(-0.02, 0.02), False))
    return pts


@pytest.fixture
def separable():
    return separable_points()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
