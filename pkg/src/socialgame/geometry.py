"""Intersection geometry: lane layout, vehicle paths, and the conflict point.

The scenario is a two-way four-lane cross intersection.  The left-turning
vehicle follows a composite path (straight approach, circular arc tangent to
both lane centerlines, straight exit); the oncoming straight vehicle follows
a straight lane centerline.  All positions are arc-length coordinates along
the owning path, in meters.
"""

import json
import math
from dataclasses import dataclass, field

__all__ = [
    "GeometryError",
    "NoIntersection",
    "MultipleIntersections",
    "Point2",
    "PathGeometry",
    "straight_path",
    "left_turn_path",
    "ConflictGeometry",
    "conflict_point",
    "IntersectionConfig",
    "IntersectionGeometry",
    "load_geometry",
]

_EPS = 1e-12


class GeometryError(ValueError):
    """Invalid or degenerate geometry."""


class NoIntersection(GeometryError):
    """The two paths do not cross within their extents."""


class MultipleIntersections(GeometryError):
    """The two paths cross more than once; the conflict point is ambiguous."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class _Line:
    """Straight segment: start point, unit direction, length."""

    start: Point2
    ux: float
    uy: float
    length: float

    def point_at(self, s: float) -> Point2:
        return Point2(self.start.x + s * self.ux, self.start.y + s * self.uy)

    def heading_at(self, s: float) -> float:
        return math.atan2(self.uy, self.ux)


@dataclass(frozen=True)
class _Arc:
    """Circular arc: center, radius, start angle, signed sweep (radians)."""

    center: Point2
    radius: float
    ang0: float
    sweep: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def _angle_at(self, s: float) -> float:
        return self.ang0 + math.copysign(s / self.radius, self.sweep)

    def point_at(self, s: float) -> Point2:
        a = self._angle_at(s)
        return Point2(
            self.center.x + self.radius * math.cos(a),
            self.center.y + self.radius * math.sin(a),
        )

    def heading_at(self, s: float) -> float:
        a = self._angle_at(s)
        # Tangent is perpendicular to the radius; sign follows sweep direction.
        return a + math.copysign(math.pi / 2.0, self.sweep)


@dataclass(frozen=True)
class PathGeometry:
    """A vehicle path as a chain of line/arc segments.

    ``kind`` is "straight-line" or "left-turn-arc".  Arc-kind paths carry the
    arc center and radius of their turning segment.  Arc-length queries
    extrapolate along the end tangents outside [0, length] so vehicles can
    run off either end of the path.
    """

    kind: str
    entry: Point2
    exit: Point2
    segments: tuple = field(repr=False)
    arc_center: Point2 | None = None
    arc_radius: float | None = None

    def __post_init__(self):
        if self.length <= 0:
            raise GeometryError("path length must be positive")
        if self.kind == "left-turn-arc" and (self.arc_radius or 0) <= 0:
            raise GeometryError("arc radius must be positive")

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    def _locate(self, s: float):
        """Segment owning arc-length s, plus the local offset into it."""
        if s <= 0:
            return self.segments[0], s
        rem = s
        for seg in self.segments[:-1]:
            if rem <= seg.length:
                return seg, rem
            rem -= seg.length
        return self.segments[-1], rem

    def point_at(self, s: float) -> Point2:
        seg, local = self._locate(s)
        if isinstance(seg, _Arc) and not (0.0 <= local <= seg.length):
            # Extrapolate along the tangent at the arc end rather than
            # winding around the circle.
            end = 0.0 if local < 0 else seg.length
            p = seg.point_at(end)
            h = seg.heading_at(end)
            d = local - end
            return Point2(p.x + d * math.cos(h), p.y + d * math.sin(h))
        return seg.point_at(local)

    def heading_at(self, s: float) -> float:
        seg, local = self._locate(s)
        if isinstance(seg, _Arc):
            local = min(max(local, 0.0), seg.length)
        return seg.heading_at(local)


def straight_path(entry: Point2, exit: Point2) -> PathGeometry:
    dx, dy = exit.x - entry.x, exit.y - entry.y
    length = math.hypot(dx, dy)
    if length <= _EPS:
        raise GeometryError("straight path needs distinct entry and exit")
    line = _Line(entry, dx / length, dy / length, length)
    return PathGeometry("straight-line", entry, exit, (line,))


def left_turn_path(
    entry: Point2,
    entry_heading: float,
    exit: Point2,
    exit_heading: float,
    radius: float,
) -> PathGeometry:
    """Left-turn path: approach leg, arc tangent to both legs, exit leg.

    The arc center sits at distance ``radius`` to the left of both the entry
    and exit lines; the tangent points must lie forward of ``entry`` and
    behind ``exit``.
    """
    if radius <= 0:
        raise GeometryError("turn radius must be positive")
    ue = (math.cos(entry_heading), math.sin(entry_heading))
    ux = (math.cos(exit_heading), math.sin(exit_heading))
    ne = (-ue[1], ue[0])  # left normals
    nx = (-ux[1], ux[0])
    # entry + t*ue + R*ne == exit + w*ux + R*nx  (solve for t, w)
    det = ux[0] * ue[1] - ux[1] * ue[0]
    if abs(det) < _EPS:
        raise GeometryError("entry and exit headings are parallel; no unique arc")
    rx = exit.x + radius * nx[0] - entry.x - radius * ne[0]
    ry = exit.y + radius * nx[1] - entry.y - radius * ne[1]
    t = (rx * ux[1] - ry * ux[0]) / -det
    w = (ue[0] * ry - ue[1] * rx) / det
    if t < -_EPS or w > _EPS:
        raise GeometryError("turn arc does not fit between entry and exit")
    center = Point2(entry.x + t * ue[0] + radius * ne[0], entry.y + t * ue[1] + radius * ne[1])
    tp_in = Point2(entry.x + t * ue[0], entry.y + t * ue[1])
    tp_out = Point2(exit.x + w * ux[0], exit.y + w * ux[1])
    a0 = math.atan2(tp_in.y - center.y, tp_in.x - center.x)
    a1 = math.atan2(tp_out.y - center.y, tp_out.x - center.x)
    sweep = (a1 - a0) % (2 * math.pi)  # left turn: counterclockwise
    segments = []
    if t > _EPS:
        segments.append(_Line(entry, ue[0], ue[1], t))
    segments.append(_Arc(center, radius, a0, sweep))
    if -w > _EPS:
        segments.append(_Line(tp_out, ux[0], ux[1], -w))
    return PathGeometry(
        "left-turn-arc", entry, exit, tuple(segments), arc_center=center, arc_radius=radius
    )


@dataclass(frozen=True)
class ConflictGeometry:
    """The shared conflict point of the two paths.

    ``s_l_cp`` / ``s_s_cp`` are arc-length positions of the conflict point
    measured from each path's entry.  ``theta_l`` is the complement of the
    crossing angle between the left path's tangent and the straight lane
    (the angle that maps a lateral offset of the turning vehicle to an
    along-path shift of the conflict point); ``theta_s`` is the crossing
    angle itself.  Both lie in [0, pi/2]; production geometry keeps them
    strictly interior.
    """

    point: Point2
    s_l_cp: float
    s_s_cp: float
    theta_l: float
    theta_s: float

    def __post_init__(self):
        if not (0.0 <= self.theta_l <= math.pi / 2 and 0.0 <= self.theta_s <= math.pi / 2):
            raise GeometryError("crossing angles must lie in [0, pi/2]")


def _line_line(a: _Line, off_a: float, b: _Line, off_b: float):
    det = a.ux * b.uy - a.uy * b.ux
    if abs(det) < _EPS:
        return []
    dx, dy = b.start.x - a.start.x, b.start.y - a.start.y
    sa = (dx * b.uy - dy * b.ux) / det
    sb = (dx * a.uy - dy * a.ux) / det
    if -_EPS <= sa <= a.length + _EPS and -_EPS <= sb <= b.length + _EPS:
        return [(off_a + sa, off_b + sb)]
    return []


def _arc_line(arc: _Arc, off_arc: float, line: _Line, off_line: float):
    # Circle-line intersection, then filter by the arc's angular range.
    cx, cy = arc.center.x - line.start.x, arc.center.y - line.start.y
    proj = cx * line.ux + cy * line.uy
    perp2 = cx * cx + cy * cy - proj * proj
    disc = arc.radius * arc.radius - perp2
    if disc < -_EPS:
        return []
    disc = max(disc, 0.0)
    hits = []
    for sl in (proj - math.sqrt(disc), proj + math.sqrt(disc)):
        if not (-_EPS <= sl <= line.length + _EPS):
            continue
        px = line.start.x + sl * line.ux
        py = line.start.y + sl * line.uy
        ang = math.atan2(py - arc.center.y, px - arc.center.x)
        rel = (ang - arc.ang0) % (2 * math.pi)
        if arc.sweep < 0:
            rel = rel - 2 * math.pi if rel > _EPS else rel
        along = abs(rel) * arc.radius
        if -1e-9 <= along <= arc.length + 1e-9:
            hits.append((off_arc + along, off_line + sl))
    return hits


def conflict_point(path_l: PathGeometry, path_s: PathGeometry) -> ConflictGeometry:
    """Locate the single crossing of the two paths.

    Raises NoIntersection / MultipleIntersections when the crossing count
    is not exactly one.
    """
    hits = []
    off_a = 0.0
    for seg_a in path_l.segments:
        off_b = 0.0
        for seg_b in path_s.segments:
            if isinstance(seg_a, _Line) and isinstance(seg_b, _Line):
                hits += _line_line(seg_a, off_a, seg_b, off_b)
            elif isinstance(seg_a, _Arc) and isinstance(seg_b, _Line):
                hits += _arc_line(seg_a, off_a, seg_b, off_b)
            elif isinstance(seg_a, _Line) and isinstance(seg_b, _Arc):
                hits += [(sa, sb) for sb, sa in _arc_line(seg_b, off_b, seg_a, off_a)]
            else:
                raise GeometryError("arc-arc path crossings are not supported")
            off_b += seg_b.length
        off_a += seg_a.length
    # Merge duplicates from segment-joint double counting.
    merged: list[tuple[float, float]] = []
    for s_l, s_s in sorted(hits):
        if merged and abs(merged[-1][0] - s_l) < 1e-9 and abs(merged[-1][1] - s_s) < 1e-9:
            continue
        merged.append((s_l, s_s))
    if not merged:
        raise NoIntersection("paths do not cross")
    if len(merged) > 1:
        raise MultipleIntersections(f"paths cross {len(merged)} times")
    s_l, s_s = merged[0]
    pt = path_l.point_at(s_l)
    h_l = path_l.heading_at(s_l)
    h_s = path_s.heading_at(s_s)
    dot = abs(
        math.cos(h_l) * math.cos(h_s) + math.sin(h_l) * math.sin(h_s)
    )
    crossing = math.acos(min(1.0, dot))
    return ConflictGeometry(
        point=pt,
        s_l_cp=s_l,
        s_s_cp=s_s,
        theta_l=math.pi / 2 - crossing,
        theta_s=crossing,
    )


@dataclass(frozen=True)
class IntersectionConfig:
    """Configurable layout of the two-way four-lane intersection.

    The lane width and turn radius are configuration, not dataset values;
    entry distances are measured from each path's start to the stop line
    (the intersection box edge).
    """

    lane_width: float = 3.5
    turn_radius: float = 8.0
    entry_distance_left: float = 30.0
    entry_distance_straight: float = 30.0
    exit_margin: float = 15.0

    def __post_init__(self):
        for name in ("lane_width", "turn_radius", "entry_distance_left",
                     "entry_distance_straight", "exit_margin"):
            if getattr(self, name) <= 0:
                raise GeometryError(f"{name} must be positive")
        if self.turn_radius <= self.lane_width / 2:
            raise GeometryError("turn radius too small to cross the oncoming lane")


class IntersectionGeometry:
    """Concrete scenario geometry: the AV turns left from the west approach,
    the HV drives straight from the east, and their paths cross once inside
    the intersection box.

    Attributes:
        left_path / straight_path: the two vehicle paths.
        conflict: shared ConflictGeometry.
        box_half: half-size of the intersection box (two lanes per side).
        transit_left / transit_straight: (s_enter, s_exit) arc-length bounds
            of the intersection box on each path, used for transit times.
    """

    def __init__(self, config: IntersectionConfig | None = None):
        self.config = config or IntersectionConfig()
        cfg = self.config
        half_lane = cfg.lane_width / 2.0
        self.box_half = 2.0 * cfg.lane_width
        start_l = Point2(-(self.box_half + cfg.entry_distance_left), -half_lane)
        exit_l = Point2(half_lane, self.box_half + cfg.exit_margin)
        self.left_path = left_turn_path(start_l, 0.0, exit_l, math.pi / 2, cfg.turn_radius)
        start_s = Point2(self.box_half + cfg.entry_distance_straight, half_lane)
        exit_s = Point2(-(self.box_half + cfg.exit_margin), half_lane)
        self.straight_path = straight_path(start_s, exit_s)
        self.conflict = conflict_point(self.left_path, self.straight_path)
        self.transit_left = self._box_span(self.left_path)
        self.transit_straight = self._box_span(self.straight_path)

    def _inside_box(self, p: Point2) -> bool:
        return abs(p.x) <= self.box_half and abs(p.y) <= self.box_half

    def _box_span(self, path: PathGeometry) -> tuple[float, float]:
        """Arc-length positions where the path enters and leaves the box."""
        def refine(lo: float, hi: float, want_inside: bool) -> float:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if self._inside_box(path.point_at(mid)) == want_inside:
                    hi = mid
                else:
                    lo = mid
            return hi

        n = max(int(path.length * 100), 10)
        step = path.length / n
        inside = self._inside_box(path.point_at(0.0))
        if inside:
            raise GeometryError("path must start outside the intersection box")
        s_enter = s_exit = None
        for i in range(1, n + 1):
            s = i * step
            now = self._inside_box(path.point_at(s))
            if now and not inside:
                s_enter = refine(s - step, s, True)
            elif inside and not now:
                s_exit = refine(s - step, s, False)
                break
            inside = now
        if s_enter is None or s_exit is None:
            raise GeometryError("path does not traverse the intersection box")
        return s_enter, s_exit

    def path_for(self, role: str) -> PathGeometry:
        if role == "left":
            return self.left_path
        if role == "straight":
            return self.straight_path
        raise GeometryError(f"unknown role {role!r}")


def load_geometry(path) -> IntersectionGeometry:
    """Build an IntersectionGeometry from a JSON config file.

    Schema (all optional, meters): lane_width, turn_radius,
    entry_distance_left, entry_distance_straight, exit_margin.
    """
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise GeometryError("geometry file must hold a JSON object")
    known = {f for f in IntersectionConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise GeometryError(f"unknown geometry keys: {sorted(unknown)}")
    for key, val in raw.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise GeometryError(f"geometry key {key!r} must be a number")
    return IntersectionGeometry(IntersectionConfig(**raw))
