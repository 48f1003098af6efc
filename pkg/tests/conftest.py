import math
from dataclasses import replace

import numpy as np
import pytest

from socialgame.expert import ExpertLibrary
from socialgame.geometry import IntersectionGeometry, Point2, left_turn_path, straight_path
from socialgame.orientation import OrientationConfig, TendencyCategory
from socialgame.synth import GENERATOR_COEFFS


@pytest.fixture(scope="session")
def geometry():
    return IntersectionGeometry()


@pytest.fixture()
def orient_config():
    return OrientationConfig()


@pytest.fixture(scope="session")
def small_library():
    """Hand-built library from the synthetic generating coefficients; no GA
    run needed, behaves like a calibrated expert set."""
    entries = {
        cat: replace(GENERATOR_COEFFS[cat], category=cat, loss=0.01)
        for cat in TendencyCategory
    }
    return ExpertLibrary(
        entries=entries,
        global_entry=replace(
            GENERATOR_COEFFS[TendencyCategory.AMBIGUOUS], category=None, loss=0.05
        ),
        meta={"note": "hand-built from generating coefficients"},
    )


def random_turn_and_lane(rng):
    """A random left-turn path plus a horizontal lane crossing it exactly once.

    The turn rises monotonically in y after its entry leg, so any horizontal
    line strictly between the entry level and the exit tangent level crosses
    the path once.
    """
    radius = rng.uniform(5.0, 14.0)
    entry_y = rng.uniform(-4.0, 0.0)
    entry_x = -rng.uniform(15.0, 35.0)
    exit_x = rng.uniform(0.5, 4.0)
    exit_y = rng.uniform(12.0, 30.0) + radius
    path = left_turn_path(
        Point2(entry_x, entry_y), 0.0, Point2(exit_x, exit_y), math.pi / 2, radius
    )
    y_line = rng.uniform(entry_y + 0.3 * radius, entry_y + 0.95 * radius)
    lane = straight_path(Point2(40.0, y_line), Point2(-60.0, y_line))
    return path, lane


def bisect_crossing(path, lane, probes=400):
    """Oracle: locate the path/lane crossing by dense probing plus bisection
    on the side-of-line sign, independent of the closed-form intersection."""
    p0, p1 = lane.entry, lane.exit
    dx, dy = p1.x - p0.x, p1.y - p0.y

    def side(s):
        p = path.point_at(s)
        return dx * (p.y - p0.y) - dy * (p.x - p0.x)

    grid = np.linspace(0.0, path.length, probes)
    values = [side(s) for s in grid]
    brackets = [
        (grid[i], grid[i + 1])
        for i in range(probes - 1)
        if values[i] == 0.0 or (values[i] < 0) != (values[i + 1] < 0)
    ]
    assert len(brackets) == 1, "oracle expects exactly one crossing"
    lo, hi = brackets[0]
    f_lo = side(lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        f_mid = side(mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    s_on_path = 0.5 * (lo + hi)
    pt = path.point_at(s_on_path)
    lane_dir = math.hypot(dx, dy)
    s_on_lane = ((pt.x - p0.x) * dx + (pt.y - p0.y) * dy) / lane_dir
    return s_on_path, s_on_lane, pt
