"""Trajectory CSV parsing and interaction-event extraction.

The CSV schema is a lowest-common-denominator projection of drone-style
trajectory datasets: ``frame,track_id,agent_type,t,x,y,vx,vy,heading,
length,width``.  Tracks are resampled to 10 Hz, matched to the two
scenario paths by lateral proximity, and paired into labeled events
wherever a left-turner and a straight vehicle are near the conflict point
at the same time.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .events import LabeledEvent, categorize_event
from .geometry import IntersectionGeometry, PathGeometry
from .orientation import OrientationConfig, TendencyCategory

__all__ = [
    "CSV_COLUMNS",
    "IngestError",
    "MissingColumn",
    "NonMonotonicTime",
    "UnresolvedEvent",
    "TrackRecord",
    "parse_trajectories",
    "extract_events",
    "label_event",
    "write_trajectory_csv",
]

CSV_COLUMNS = (
    "frame", "track_id", "agent_type", "t", "x", "y",
    "vx", "vy", "heading", "length", "width",
)

COPRESENCE_GATE = 50.0  # both vehicles within this range of the conflict point


class IngestError(ValueError):
    pass


class MissingColumn(IngestError):
    pass


class NonMonotonicTime(IngestError):
    pass


class UnresolvedEvent(IngestError):
    """Neither or only one vehicle crossed; the pair cannot be labeled."""


@dataclass
class TrackRecord:
    track_id: str
    agent_type: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    heading: np.ndarray
    length: float
    width: float

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


def _resample_track(track: TrackRecord, hz: float = 10.0) -> TrackRecord:
    """Linear interpolation onto a uniform grid anchored at the first frame."""
    step = 1.0 / hz
    n = int(math.floor((track.t[-1] - track.t[0]) / step + 1e-9)) + 1
    grid = track.t[0] + step * np.arange(n)
    def interp(arr):
        return np.interp(grid, track.t, arr)
    return TrackRecord(
        track_id=track.track_id,
        agent_type=track.agent_type,
        t=grid,
        x=interp(track.x), y=interp(track.y),
        vx=interp(track.vx), vy=interp(track.vy),
        heading=interp(track.heading),
        length=track.length, width=track.width,
    )


def parse_trajectories(path, hz: float = 10.0) -> tuple[list[TrackRecord], list[str]]:
    """Parse and resample all tracks.

    Returns (tracks, report); malformed rows are collected in the report
    with line numbers rather than silently dropped.  Raises MissingColumn
    for a bad header and NonMonotonicTime (naming the track) for duplicate
    or backward timestamps.
    """
    report: list[str] = []
    rows: dict[str, list] = {}
    meta: dict[str, tuple] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise MissingColumn(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                tid = row["track_id"]
                values = (
                    float(row["t"]), float(row["x"]), float(row["y"]),
                    float(row["vx"]), float(row["vy"]), float(row["heading"]),
                )
                meta.setdefault(
                    tid, (row["agent_type"], float(row["length"]), float(row["width"]))
                )
            except (TypeError, ValueError, KeyError) as exc:
                report.append(f"line {lineno}: malformed row ({exc})")
                continue
            rows.setdefault(tid, []).append(values)
    tracks = []
    for tid, recs in rows.items():
        arr = np.asarray(recs)
        t = arr[:, 0]
        if np.any(np.diff(t) <= 0):
            raise NonMonotonicTime(f"track {tid!r} has non-increasing timestamps")
        agent_type, length, width = meta[tid]
        track = TrackRecord(
            track_id=tid, agent_type=agent_type,
            t=t, x=arr[:, 1], y=arr[:, 2],
            vx=arr[:, 3], vy=arr[:, 4], heading=arr[:, 5],
            length=length, width=width,
        )
        tracks.append(_resample_track(track, hz))
    return tracks, report


def write_trajectory_csv(tracks: list[TrackRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for track in tracks:
            for k in range(len(track.t)):
                writer.writerow(
                    [
                        k, track.track_id, track.agent_type,
                        repr(float(track.t[k])),
                        repr(float(track.x[k])), repr(float(track.y[k])),
                        repr(float(track.vx[k])), repr(float(track.vy[k])),
                        repr(float(track.heading[k])),
                        repr(track.length), repr(track.width),
                    ]
                )


class _PathProjector:
    """Arc-length projection of points onto a sampled path polyline."""

    def __init__(self, path: PathGeometry, step: float = 0.1):
        n = int(path.length / step) + 2
        s = np.linspace(0.0, path.length, n)
        pts = np.array([(p.x, p.y) for p in (path.point_at(si) for si in s)])
        self.s = s
        self.pts = pts
        self.segs = pts[1:] - pts[:-1]
        self.seg_len2 = np.einsum("ij,ij->i", self.segs, self.segs)

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Returns (arc length, lateral distance) of the nearest path point."""
        rel = np.array([x, y]) - self.pts[:-1]
        frac = np.clip(
            np.einsum("ij,ij->i", rel, self.segs) / np.maximum(self.seg_len2, 1e-18),
            0.0, 1.0,
        )
        foot = self.pts[:-1] + frac[:, None] * self.segs
        d2 = np.einsum("ij,ij->i", np.array([x, y]) - foot, np.array([x, y]) - foot)
        k = int(np.argmin(d2))
        s_here = self.s[k] + frac[k] * (self.s[k + 1] - self.s[k])
        return float(s_here), float(math.sqrt(d2[k]))


def _match_path(track: TrackRecord, projector: _PathProjector, tol: float) -> np.ndarray | None:
    """Arc-length trace if the track follows the path, else None.

    Lateral distance is judged on interior points only; frames beyond the
    path ends project onto the clamped endpoints and would inflate it.
    """
    out = np.empty(len(track.t))
    lateral = np.empty(len(track.t))
    for k in range(len(track.t)):
        out[k], lateral[k] = projector.project(track.x[k], track.y[k])
    length = projector.s[-1]
    interior = (out > 0.5) & (out < length - 0.5)
    if interior.sum() < 5:
        return None
    if np.mean(lateral[interior]) > tol:
        return None
    if out[-1] - out[0] < 5.0:  # no meaningful forward progress
        return None
    return out


def label_event(
    t: np.ndarray, d_l: np.ndarray, d_s: np.ndarray, half_len_l: float, half_len_s: float
) -> tuple[int, int, float, float]:
    """Outcome labels from front-edge crossing order.

    Raises UnresolvedEvent when either vehicle never crosses in the window.
    """
    cross_l = np.flatnonzero(d_l <= half_len_l)
    cross_s = np.flatnonzero(d_s <= half_len_s)
    if not cross_l.size or not cross_s.size:
        raise UnresolvedEvent("a vehicle never crossed the conflict point")
    t_l = float(t[cross_l[0]])
    t_s = float(t[cross_s[0]])
    if t_l == t_s:
        raise UnresolvedEvent("simultaneous crossing cannot be ordered")
    label_l = 1 if t_l < t_s else 0
    return label_l, 1 - label_l, t_l, t_s


def extract_events(
    tracks: list[TrackRecord],
    geometry: IntersectionGeometry,
    config: OrientationConfig | None = None,
    lateral_tol: float = 1.2,
) -> tuple[list[LabeledEvent], list[str]]:
    """Pair left-turn tracks with co-present straight tracks.

    The event window opens when both vehicles are inside the co-presence
    gate and closes when both have crossed; pairs where either vehicle
    never crosses are reported and skipped.
    """
    config = config or OrientationConfig()
    proj_l = _PathProjector(geometry.left_path)
    proj_s = _PathProjector(geometry.straight_path)
    lefts, straights = [], []
    for track in tracks:
        trace_l = _match_path(track, proj_l, lateral_tol)
        if trace_l is not None:
            lefts.append((track, trace_l))
            continue
        trace_s = _match_path(track, proj_s, lateral_tol)
        if trace_s is not None:
            straights.append((track, trace_s))
    report: list[str] = []
    events: list[LabeledEvent] = []
    cg = geometry.conflict
    for track_l, trace_l in lefts:
        for track_s, trace_s in straights:
            t0 = max(track_l.t[0], track_s.t[0])
            t1 = min(track_l.t[-1], track_s.t[-1])
            if t1 <= t0:
                continue
            grid = np.arange(round(t0 * 10), round(t1 * 10) + 1) / 10.0
            d_l = cg.s_l_cp - np.interp(grid, track_l.t, trace_l)
            d_s = cg.s_s_cp - np.interp(grid, track_s.t, trace_s)
            v_l = np.interp(grid, track_l.t, track_l.speed)
            v_s = np.interp(grid, track_s.t, track_s.speed)
            gate = (np.abs(d_l) <= COPRESENCE_GATE) & (np.abs(d_s) <= COPRESENCE_GATE)
            if not gate.any():
                continue
            start = int(np.flatnonzero(gate)[0])
            pair_id = f"{track_l.track_id}+{track_s.track_id}"
            try:
                label_l, label_s, t_cl, t_cs = label_event(
                    grid[start:], d_l[start:], d_s[start:],
                    track_l.length / 2.0, track_s.length / 2.0,
                )
            except UnresolvedEvent as exc:
                report.append(f"{pair_id}: unresolved ({exc})")
                continue
            # Window closes once both have crossed (plus nothing beyond).
            after = np.flatnonzero(
                (d_l[start:] <= track_l.length / 2.0)
                & (d_s[start:] <= track_s.length / 2.0)
            )
            end = start + int(after[0]) + 1 if after.size else len(grid)
            try:
                event = LabeledEvent(
                    event_id=pair_id,
                    t=grid[start:end],
                    d_l=d_l[start:end], v_l=v_l[start:end],
                    d_s=d_s[start:end], v_s=v_s[start:end],
                    label_l=label_l, label_s=label_s,
                    category=TendencyCategory.AMBIGUOUS,  # recomputed below
                    l_l=track_l.length, w_l=track_l.width,
                    l_s=track_s.length, w_s=track_s.width,
                    theta_l=cg.theta_l, theta_s=cg.theta_s,
                    t_cross_left=t_cl, t_cross_straight=t_cs,
                )
            except Exception as exc:
                report.append(f"{pair_id}: skipped ({exc})")
                continue
            event.category = categorize_event(event, config)
            events.append(event)
    return events, report
