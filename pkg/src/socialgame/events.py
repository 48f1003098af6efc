"""Labeled interaction events: the currency between ingestion, learning,
and evaluation.

An event is a 10 Hz snapshot series of one left-turn/straight dyad, the
binary outcome labels (exactly one side proceeded first), and the tendency
category assigned from the straight vehicle's orientation series.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .orientation import (
    InteractionSnapshot,
    OrientationConfig,
    TendencyCategory,
    classify_tendency,
    io_series,
)

__all__ = [
    "EventValidationError",
    "LabeledEvent",
    "categorize_event",
    "dataset_fingerprint",
    "save_events",
    "load_events",
]


class EventValidationError(ValueError):
    pass


def _as_array(name, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise EventValidationError(f"{name} must be a non-empty 1-d series")
    if not np.all(np.isfinite(arr)):
        raise EventValidationError(f"{name} contains non-finite values")
    return arr


@dataclass
class LabeledEvent:
    """One labeled interaction event.

    Distances are measured to the conflict point along each vehicle's path
    and may go negative after crossing; the decision window (frames usable
    for prediction) is the prefix where both are still positive.
    """

    event_id: str
    t: np.ndarray
    d_l: np.ndarray
    v_l: np.ndarray
    d_s: np.ndarray
    v_s: np.ndarray
    label_l: int
    label_s: int
    category: TendencyCategory
    l_l: float = 4.5
    w_l: float = 2.0
    l_s: float = 4.5
    w_s: float = 2.0
    theta_l: float = 0.0
    theta_s: float = math.pi / 2
    off_l: np.ndarray | None = None
    off_s: np.ndarray | None = None
    t_cross_left: float | None = None
    t_cross_straight: float | None = None

    def __post_init__(self):
        self.t = _as_array("t", self.t)
        for name in ("d_l", "v_l", "d_s", "v_s"):
            arr = _as_array(name, getattr(self, name))
            if arr.shape != self.t.shape:
                raise EventValidationError(f"{name} length differs from t")
            setattr(self, name, arr)
        if np.any(np.diff(self.t) <= 0):
            raise EventValidationError("timestamps must be strictly increasing")
        if self.label_l + self.label_s != 1 or {self.label_l, self.label_s} - {0, 1}:
            raise EventValidationError("exactly one of label_l/label_s must be 1")
        for name in ("off_l", "off_s"):
            val = getattr(self, name)
            if val is not None:
                arr = _as_array(name, val)
                if arr.shape != self.t.shape:
                    raise EventValidationError(f"{name} length differs from t")
                setattr(self, name, arr)
        if self.decision_frames() == 0:
            raise EventValidationError("event has no frames before the first crossing")

    def decision_frames(self) -> int:
        """Number of leading frames where both vehicles are short of the
        conflict point."""
        both_ahead = (self.d_l > 0.0) & (self.d_s > 0.0)
        if not both_ahead[0]:
            return 0
        off = np.flatnonzero(~both_ahead)
        return int(off[0]) if off.size else len(self.t)

    def snapshots(self) -> list[InteractionSnapshot]:
        offs_l = self.off_l if self.off_l is not None else np.zeros_like(self.t)
        offs_s = self.off_s if self.off_s is not None else np.zeros_like(self.t)
        return [
            InteractionSnapshot(
                t=float(self.t[k]),
                d_l=float(self.d_l[k]), v_l=float(self.v_l[k]),
                d_s=float(self.d_s[k]), v_s=float(self.v_s[k]),
                l_l=self.l_l, w_l=self.w_l, l_s=self.l_s, w_s=self.w_s,
                off_l=float(offs_l[k]), off_s=float(offs_s[k]),
                theta_l=self.theta_l, theta_s=self.theta_s,
            )
            for k in range(len(self.t))
        ]


def categorize_event(
    event_or_snapshots, config: OrientationConfig | None = None
) -> TendencyCategory:
    """Tendency of the straight vehicle over the trailing window at the end
    of the decision prefix."""
    config = config or OrientationConfig()
    if isinstance(event_or_snapshots, LabeledEvent):
        snaps = event_or_snapshots.snapshots()[: event_or_snapshots.decision_frames()]
    else:
        snaps = list(event_or_snapshots)
    samples = io_series(snaps, config)
    return classify_tendency(samples, config.window,
                             config.precedence_max, config.yielding_min)


def dataset_fingerprint(events: list[LabeledEvent]) -> str:
    """Content hash over ids, labels, categories, and the raw series."""
    h = hashlib.sha256()
    for ev in events:
        h.update(ev.event_id.encode())
        h.update(bytes((ev.label_l, ev.label_s)))
        h.update(ev.category.value.encode())
        for arr in (ev.t, ev.d_l, ev.v_l, ev.d_s, ev.v_s):
            h.update(arr.tobytes())
    return h.hexdigest()


def _event_to_dict(ev: LabeledEvent) -> dict:
    doc = {
        "event_id": ev.event_id,
        "category": ev.category.value,
        "label_l": ev.label_l,
        "label_s": ev.label_s,
        "t": ev.t.tolist(),
        "d_l": ev.d_l.tolist(),
        "v_l": ev.v_l.tolist(),
        "d_s": ev.d_s.tolist(),
        "v_s": ev.v_s.tolist(),
        "dims": {"l_l": ev.l_l, "w_l": ev.w_l, "l_s": ev.l_s, "w_s": ev.w_s},
        "angles": {"theta_l": ev.theta_l, "theta_s": ev.theta_s},
        "t_cross_left": ev.t_cross_left,
        "t_cross_straight": ev.t_cross_straight,
    }
    if ev.off_l is not None:
        doc["off_l"] = ev.off_l.tolist()
    if ev.off_s is not None:
        doc["off_s"] = ev.off_s.tolist()
    return doc


def _event_from_dict(doc: dict) -> LabeledEvent:
    dims = doc.get("dims", {})
    angles = doc.get("angles", {})
    return LabeledEvent(
        event_id=doc["event_id"],
        t=doc["t"],
        d_l=doc["d_l"], v_l=doc["v_l"], d_s=doc["d_s"], v_s=doc["v_s"],
        label_l=int(doc["label_l"]), label_s=int(doc["label_s"]),
        category=TendencyCategory(doc["category"]),
        l_l=dims.get("l_l", 4.5), w_l=dims.get("w_l", 2.0),
        l_s=dims.get("l_s", 4.5), w_s=dims.get("w_s", 2.0),
        theta_l=angles.get("theta_l", 0.0),
        theta_s=angles.get("theta_s", math.pi / 2),
        off_l=doc.get("off_l"), off_s=doc.get("off_s"),
        t_cross_left=doc.get("t_cross_left"),
        t_cross_straight=doc.get("t_cross_straight"),
    )


def save_events(events: list[LabeledEvent], path) -> None:
    """One JSON document per line; float repr round-trips bit for bit."""
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(_event_to_dict(ev), separators=(",", ":")))
            fh.write("\n")


def load_events(path) -> list[LabeledEvent]:
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EventValidationError(
                    f"{path}: line {lineno} is not valid JSON at column {exc.colno}"
                ) from exc
            try:
                events.append(_event_from_dict(doc))
            except KeyError as exc:
                raise EventValidationError(
                    f"{path}: line {lineno} misses field {exc}"
                ) from exc
    return events
