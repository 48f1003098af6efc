"""Inference-time prediction and the evaluation reports.

Predictions follow the deployed pipeline: at each frame the straight
vehicle's tendency (over the trailing window) selects the expert
coefficients, the payoff matrix is solved, and the equilibrium proceed
probabilities are recorded.  A baseline mode bypasses the lookup and uses
one fixed coefficient set everywhere.
"""

from dataclasses import dataclass

import numpy as np

from .events import LabeledEvent
from .expert import (
    EventFeatures,
    ExpertLibrary,
    ExpertParams,
    precompute_features,
    lookup,
)
from .game import PayoffParams
from .nash import solve_proceed_probs
from .orientation import OrientationConfig, classify_tendency, io_series

__all__ = [
    "EventPrediction",
    "predict_events",
    "accuracy_report",
    "decision_timing",
]


@dataclass
class EventPrediction:
    event_id: str
    label_l: int
    p_l: np.ndarray  # per-frame proceed probability, left
    p_s: np.ndarray
    categories: list  # per-frame TendencyCategory
    mean_p_l: float
    mean_p_s: float

    @property
    def predicted_label_l(self) -> int:
        # Ties go to the straight vehicle (it holds the nominal right of way).
        return 1 if self.mean_p_l > self.mean_p_s else 0

    @property
    def correct(self) -> bool:
        return self.predicted_label_l == self.label_l

    def frame_predictions(self) -> np.ndarray:
        return self.p_l > self.p_s


def _coeff_rows(coeffs: ExpertParams) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(coeffs.alpha), np.asarray(coeffs.beta)


def _solve_frames(
    feats: EventFeatures, alpha: np.ndarray, beta: np.ndarray, frame_idx: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    T = feats.T[:, :, frame_idx]
    R = feats.R[:, :, frame_idx]
    u = alpha[:, :, None] * T + beta[:, :, None] * R
    u_l = u[0].T.reshape(-1, 2, 2)
    u_s = u[1].T.reshape(-1, 2, 2)
    return solve_proceed_probs(u_l, u_s)


def predict_events(
    events: list[LabeledEvent],
    library: ExpertLibrary | None,
    params: PayoffParams,
    config: OrientationConfig | None = None,
    baseline: ExpertParams | None = None,
) -> list[EventPrediction]:
    """Per-frame and event-level predictions for every event.

    Exactly one of ``library`` (expert pipeline with per-frame tendency
    lookup) or ``baseline`` (one coefficient set everywhere) must be given.
    """
    if (library is None) == (baseline is None):
        raise ValueError("pass either a library or a baseline coefficient set")
    config = config or OrientationConfig()
    out = []
    for event in events:
        n = event.decision_frames()
        feats = precompute_features([event], params, config)
        if baseline is not None:
            frame_cats = [None] * n
            alpha, beta = _coeff_rows(baseline)
            p_l, p_s = _solve_frames(feats, alpha, beta, np.arange(n))
        else:
            samples = io_series(event.snapshots()[:n], config)
            frame_cats = [
                classify_tendency(
                    samples[: k + 1], config.window,
                    config.precedence_max, config.yielding_min,
                )
                for k in range(n)
            ]
            p_l = np.empty(n)
            p_s = np.empty(n)
            for category in set(frame_cats):
                idx = np.flatnonzero([c is category for c in frame_cats])
                expert, _ = lookup(library, category)
                alpha, beta = _coeff_rows(expert)
                p_l[idx], p_s[idx] = _solve_frames(feats, alpha, beta, idx)
        out.append(
            EventPrediction(
                event_id=event.event_id,
                label_l=event.label_l,
                p_l=p_l, p_s=p_s,
                categories=frame_cats,
                mean_p_l=float(p_l.mean()),
                mean_p_s=float(p_s.mean()),
            )
        )
    return out


def accuracy_report(predictions: list[EventPrediction]) -> dict:
    """Accuracy split by realized decision scenario, plus overall."""
    rows = {}
    for name, label in (("left_first_straight_yields", 1), ("left_yields_straight_first", 0)):
        subset = [p for p in predictions if p.label_l == label]
        correct = sum(p.correct for p in subset)
        rows[name] = {
            "events": len(subset),
            "correct": correct,
            "accuracy": correct / len(subset) if subset else None,
        }
    total_correct = sum(p.correct for p in predictions)
    rows["overall"] = {
        "events": len(predictions),
        "correct": total_correct,
        "accuracy": total_correct / len(predictions) if predictions else None,
    }
    return rows


def decision_timing(
    predictions: list[EventPrediction], events: list[LabeledEvent]
) -> tuple[list[float | None], float | None]:
    """Distance to the conflict point at the accurate decision point.

    The accurate decision point is the earliest frame from which the
    per-frame prediction agrees with the label at every later frame; the
    distance is the turning vehicle's.  Events that never settle on the
    correct side contribute None.
    """
    distances: list[float | None] = []
    for pred, event in zip(predictions, events):
        frames = pred.frame_predictions().astype(int)
        agree = frames == pred.label_l
        if not agree[-1]:
            distances.append(None)
            continue
        k = len(agree)
        while k > 0 and agree[k - 1]:
            k -= 1
        distances.append(float(event.d_l[k]))
    settled = [d for d in distances if d is not None]
    return distances, (float(np.mean(settled)) if settled else None)
