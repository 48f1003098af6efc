import numpy as np
import pytest

from socialgame.events import (
    EventValidationError,
    LabeledEvent,
    categorize_event,
    dataset_fingerprint,
    load_events,
    save_events,
)
from socialgame.orientation import TendencyCategory
from socialgame.synth import synth_population


def make_event(**kw):
    n = kw.pop("n", 20)
    base = dict(
        event_id="ev-1",
        t=0.1 * np.arange(n),
        d_l=np.linspace(30.0, 10.0, n),
        v_l=np.full(n, 4.0),
        d_s=np.linspace(40.0, 12.0, n),
        v_s=np.full(n, 8.0),
        label_l=1,
        label_s=0,
        category=TendencyCategory.AMBIGUOUS,
    )
    base.update(kw)
    return LabeledEvent(**base)


class TestValidation:
    def test_round_numbers_pass(self):
        ev = make_event()
        assert ev.decision_frames() == 20

    def test_labels_must_be_exclusive(self):
        with pytest.raises(EventValidationError):
            make_event(label_l=1, label_s=1)
        with pytest.raises(EventValidationError):
            make_event(label_l=0, label_s=0)

    def test_non_monotonic_time_rejected(self):
        t = 0.1 * np.arange(20)
        t[5] = t[4]
        with pytest.raises(EventValidationError):
            make_event(t=t)

    def test_length_mismatch_rejected(self):
        with pytest.raises(EventValidationError):
            make_event(v_s=np.full(7, 8.0))

    def test_decision_frames_stop_at_first_crossing(self):
        d_s = np.linspace(5.0, -14.0, 20)  # straight crosses mid-event
        ev = make_event(d_s=d_s)
        assert ev.decision_frames() == int(np.flatnonzero(d_s <= 0)[0])

    def test_event_fully_crossed_is_rejected(self):
        with pytest.raises(EventValidationError):
            make_event(d_l=np.linspace(-1.0, -20.0, 20))


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        events = synth_population(6, TendencyCategory.YIELDING, seed=3)
        path = tmp_path / "events.jsonl"
        save_events(events, path)
        loaded = load_events(path)
        assert len(loaded) == len(events)
        for a, b in zip(events, loaded):
            assert a.event_id == b.event_id
            assert a.label_l == b.label_l
            assert a.category is b.category
            np.testing.assert_array_equal(a.t, b.t)
            np.testing.assert_array_equal(a.d_l, b.d_l)
            np.testing.assert_array_equal(a.v_s, b.v_s)
        assert dataset_fingerprint(events) == dataset_fingerprint(loaded)

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text('{"event_id": "x", truncated\n')
        with pytest.raises(EventValidationError, match="line 1"):
            load_events(path)

    def test_missing_field_reported(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text('{"event_id": "x"}\n')
        with pytest.raises(EventValidationError, match="line 1"):
            load_events(path)

    def test_fingerprint_changes_with_labels(self):
        ev1 = make_event()
        ev2 = make_event(label_l=0, label_s=1)
        assert dataset_fingerprint([ev1]) != dataset_fingerprint([ev2])


def test_categorize_matches_requested_population():
    for cat in TendencyCategory:
        events = synth_population(5, cat, seed=11)
        assert all(categorize_event(ev) is cat for ev in events)
