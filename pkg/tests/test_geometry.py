import json
import math

import numpy as np
import pytest

from socialgame.geometry import (
    GeometryError,
    IntersectionConfig,
    MultipleIntersections,
    NoIntersection,
    Point2,
    conflict_point,
    left_turn_path,
    load_geometry,
    straight_path,
)

from conftest import bisect_crossing, random_turn_and_lane


def test_perpendicular_lines_cross_at_origin():
    a = straight_path(Point2(-30.0, 0.0), Point2(30.0, 0.0))
    b = straight_path(Point2(0.0, -30.0), Point2(0.0, 30.0))
    cg = conflict_point(a, b)
    assert cg.point.x == pytest.approx(0.0, abs=1e-12)
    assert cg.point.y == pytest.approx(0.0, abs=1e-12)
    assert cg.s_l_cp == pytest.approx(30.0, abs=1e-9)
    assert cg.s_s_cp == pytest.approx(30.0, abs=1e-9)
    # Perpendicular crossing: the raw crossing angle is pi/2, its complement 0.
    assert cg.theta_s == pytest.approx(math.pi / 2, abs=1e-12)
    assert cg.theta_l == pytest.approx(0.0, abs=1e-12)


def test_parallel_lines_do_not_cross():
    a = straight_path(Point2(-30.0, 0.0), Point2(30.0, 0.0))
    b = straight_path(Point2(-30.0, 3.5), Point2(30.0, 3.5))
    with pytest.raises(NoIntersection):
        conflict_point(a, b)


def test_double_crossing_is_ambiguous():
    # Secant cutting the turning arc twice within its angular range.
    turn = left_turn_path(Point2(-30.0, 0.0), 0.0, Point2(2.0, 30.0), math.pi / 2, 8.0)
    secant = straight_path(Point2(-4.0, 0.1), Point2(2.5, 6.0))
    with pytest.raises(MultipleIntersections):
        conflict_point(turn, secant)


def test_quarter_arc_crossing_matches_dense_sampling_oracle():
    # Radius-12 turn crossed by a lane centerline; the oracle accumulates
    # arc length along a 1 mm polyline up to the sampled crossing.
    path = left_turn_path(Point2(-25.0, -1.75), 0.0, Point2(1.75, 25.0), math.pi / 2, 12.0)
    lane = straight_path(Point2(30.0, 5.0), Point2(-30.0, 5.0))
    cg = conflict_point(path, lane)

    step = 0.001
    n = int(path.length / step) + 1
    prev = path.point_at(0.0)
    acc = 0.0
    y_line = 5.0
    s_oracle = None
    for i in range(1, n + 1):
        s = min(i * step, path.length)
        cur = path.point_at(s)
        if (prev.y - y_line) * (cur.y - y_line) <= 0.0 and prev.y != cur.y:
            frac = (y_line - prev.y) / (cur.y - prev.y)
            acc += frac * math.hypot(cur.x - prev.x, cur.y - prev.y)
            s_oracle = acc
            break
        acc += math.hypot(cur.x - prev.x, cur.y - prev.y)
        prev = cur
    assert s_oracle is not None
    assert cg.s_l_cp == pytest.approx(s_oracle, abs=1e-6)


def test_conflict_distances_match_bisection_oracle_on_random_pairs():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 1000:
        path, lane = random_turn_and_lane(rng)
        s_path, s_lane, pt = bisect_crossing(path, lane)
        cg = conflict_point(path, lane)
        assert cg.s_l_cp == pytest.approx(s_path, abs=1e-6)
        assert cg.s_s_cp == pytest.approx(s_lane, abs=1e-6)
        assert math.hypot(cg.point.x - pt.x, cg.point.y - pt.y) < 1e-6
        checked += 1


def test_left_turn_path_is_tangent_continuous():
    path = left_turn_path(Point2(-37.0, -1.75), 0.0, Point2(1.75, 22.0), math.pi / 2, 8.0)
    assert path.arc_center is not None
    assert path.arc_center.x == pytest.approx(1.75 - 8.0)
    assert path.arc_center.y == pytest.approx(-1.75 + 8.0)
    # Heading sweeps 0 -> pi/2 without jumps.
    headings = [path.heading_at(s) for s in np.linspace(0.0, path.length, 500)]
    diffs = np.abs(np.diff(headings))
    assert np.all(diffs < 0.05)
    assert headings[0] == pytest.approx(0.0, abs=1e-12)
    assert headings[-1] == pytest.approx(math.pi / 2, abs=1e-12)


def test_path_extrapolates_beyond_both_ends():
    path = straight_path(Point2(0.0, 0.0), Point2(10.0, 0.0))
    assert path.point_at(15.0).x == pytest.approx(15.0)
    assert path.point_at(-5.0).x == pytest.approx(-5.0)


def test_default_intersection_geometry_is_consistent(geometry):
    cg = geometry.conflict
    assert 0.0 < cg.theta_l < math.pi / 2
    assert 0.0 < cg.theta_s < math.pi / 2
    # The conflict point lies on the oncoming straight lane.
    assert cg.point.y == pytest.approx(geometry.config.lane_width / 2, abs=1e-9)
    assert abs(cg.point.x) < geometry.box_half
    enter_l, exit_l = geometry.transit_left
    enter_s, exit_s = geometry.transit_straight
    assert 0.0 < enter_l < cg.s_l_cp < exit_l
    assert 0.0 < enter_s < cg.s_s_cp < exit_s
    assert enter_s == pytest.approx(geometry.config.entry_distance_straight, abs=1e-6)


def test_geometry_json_round_trip(tmp_path):
    doc = {"lane_width": 3.0, "turn_radius": 9.5, "entry_distance_left": 25.0}
    path = tmp_path / "intersection.json"
    path.write_text(json.dumps(doc))
    geo = load_geometry(path)
    assert geo.config.lane_width == 3.0
    assert geo.config.turn_radius == 9.5
    assert geo.config.entry_distance_straight == 30.0  # default preserved


def test_geometry_json_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"lane_widht": 3.5}))
    with pytest.raises(GeometryError, match="lane_widht"):
        load_geometry(path)


def test_config_validation():
    with pytest.raises(GeometryError):
        IntersectionConfig(lane_width=-1.0)
    with pytest.raises(GeometryError):
        IntersectionConfig(turn_radius=1.0)  # cannot reach the oncoming lane
