import math

import numpy as np
import pytest

from socialgame.nash import PROCEED
from socialgame.simulator import (
    BatchRandomization,
    ExternalPolicy,
    ReactivePolicy,
    ScriptedPolicy,
    SimConfig,
    Simulation,
    compute_pet,
    detect_collision,
    episode_metrics,
    run_batch,
    run_episode,
    save_episode_log,
    summarize_metrics,
)


def rect(cx, cy, half_l, half_w, angle=0.0):
    u = np.array([math.cos(angle), math.sin(angle)])
    n = np.array([-math.sin(angle), math.cos(angle)])
    c = np.array([cx, cy])
    return np.array(
        [
            c + u * half_l + n * half_w,
            c + u * half_l - n * half_w,
            c - u * half_l - n * half_w,
            c - u * half_l + n * half_w,
        ]
    )


class TestCollision:
    def test_same_center_overlaps(self):
        assert detect_collision(rect(0, 0, 2, 1), rect(0, 0, 2, 1, angle=0.7))

    def test_distant_rectangles_do_not(self):
        assert not detect_collision(rect(0, 0, 2.5, 1), rect(10, 0, 2.5, 1))

    def test_corner_touch_counts_as_contact(self):
        # Two 45-degree squares (diamonds) with exactly representable
        # corners meeting at the single point (1, 0).
        a = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
        b = a + np.array([2.0, 0.0])
        assert detect_collision(a, b)
        # Oracle: any positive separation breaks the contact.
        assert not detect_collision(a, b + np.array([1e-9, 0.0]))

    def test_rotated_rectangles_separate_correctly(self):
        a = rect(0, 0, 3, 0.5)
        assert not detect_collision(a, rect(5.0, 2.0, 3, 0.5, angle=math.pi / 3))
        assert detect_collision(a, rect(2.0, 2.0, 3, 0.5, angle=math.pi / 3))


class TestEpisodes:
    def test_conservative_hv_lets_the_av_cross_first(self, small_library):
        # Contested arrivals: the conservative profile opens the gap and the
        # engine takes it.
        config = SimConfig(
            hv_policy=ScriptedPolicy(profile="conservative"),
            v0_left=4.5,
            v0_straight=7.0,
            s0_left=15.0,
            seed=2,
        )
        log, sim = run_episode(config, small_library)
        assert log.terminal_reason == "both-crossed"
        crossings = sim.cross_times()
        assert crossings["left"] < crossings["straight"]
        assert episode_metrics(sim).collision is False

    def test_fast_aggressive_hv_crosses_first_without_collision(self, small_library):
        config = SimConfig(
            hv_policy=ScriptedPolicy(profile="aggressive", desired_speed=9.5),
            v0_left=2.0,
            v0_straight=9.5,
            s0_left=0.0,
            s0_straight=10.0,
            seed=3,
        )
        log, sim = run_episode(config, small_library)
        assert log.terminal_reason == "both-crossed"
        crossings = sim.cross_times()
        assert crossings["straight"] < crossings["left"]

    def test_same_seed_reproduces_bit_identical_logs(self, small_library):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="oscillating"), seed=17)
        log_a, _ = run_episode(config, small_library)
        log_b, _ = run_episode(config, small_library)
        assert log_a.terminal_reason == log_b.terminal_reason
        assert len(log_a.steps) == len(log_b.steps)
        assert all(a == b for a, b in zip(log_a.steps, log_b.steps))

    def test_speeds_stay_within_role_bounds_and_positions_monotone(self, small_library):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="oscillating"), seed=5)
        log, sim = run_episode(config, small_library)
        v_l = [rec.v_l for rec in log.steps]
        v_s = [rec.v_s for rec in log.steps]
        assert all(0.0 <= v <= config.engine.v_bounds_left[1] for v in v_l)
        assert all(0.0 <= v <= config.engine.v_bounds_straight[1] for v in v_s)
        s_l = [rec.s_l for rec in log.steps]
        s_s = [rec.s_s for rec in log.steps]
        assert all(a <= b + 1e-12 for a, b in zip(s_l, s_l[1:]))
        assert all(a <= b + 1e-12 for a, b in zip(s_s, s_s[1:]))

    def test_external_policy_holds_last_command(self):
        config = SimConfig(hv_policy=ExternalPolicy(), seed=1, timeout=5.0)
        sim = Simulation(config)
        sim.step(hv_accel=-2.0)
        first = sim.straight.v
        sim.step()  # no new command: hold
        second = sim.straight.v
        assert first == pytest.approx(7.0 - 0.2)
        assert second == pytest.approx(7.0 - 0.4)

    def test_external_commands_are_clamped(self):
        config = SimConfig(hv_policy=ExternalPolicy(), seed=1, timeout=5.0)
        sim = Simulation(config)
        rec = sim.step(hv_accel=-50.0)
        assert rec.a_s == -4.0
        rec = sim.step(hv_accel=50.0)
        assert rec.a_s == 2.0

    def test_reactive_policy_waits_for_an_acceptable_gap(self, small_library):
        config = SimConfig(
            hv_policy=ReactivePolicy(desired_speed=8.0, gap_threshold=2.0),
            v0_left=4.0,
            v0_straight=8.0,
            seed=8,
        )
        log, sim = run_episode(config, small_library)
        assert log.terminal_reason == "both-crossed"
        assert episode_metrics(sim).collision is False

    def test_timeout_reason(self):
        config = SimConfig(
            hv_policy=ExternalPolicy(), v0_straight=0.0, v0_left=0.0, timeout=1.0
        )
        sim = Simulation(config)
        while not sim.terminal:
            sim.step(0.0)
        assert sim.terminal_reason == "timeout"


class TestMetrics:
    def run(self, seed=2, **kw):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"),
                           seed=seed, **kw)
        log, sim = run_episode(config)
        return log, sim

    def test_pet_matches_zone_event_gap(self):
        _, sim = self.run()
        pet = compute_pet(sim)
        events = sim.zone_events()
        first, second = sorted(events.values(), key=lambda ev: ev[0])
        assert pet == pytest.approx(second[0] - first[1])
        assert pet >= 0.0

    def test_transit_time_is_exit_minus_entry(self):
        _, sim = self.run()
        m = episode_metrics(sim)
        span = sim.transit_times()["left"]
        assert m.transit_av == pytest.approx(span[1] - span[0])
        assert m.combined == pytest.approx(m.transit_av + m.transit_hv)

    def test_consistency_flags_agreement(self, small_library):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"), seed=2)
        _, sim = run_episode(config, small_library)
        m = episode_metrics(sim)
        crossings = sim.cross_times()
        av_first = crossings["left"] < crossings["straight"]
        assert m.decision_consistency == ((sim._last_live_decision == PROCEED) == av_first)

    def test_collision_and_pet_mutually_exclusive(self):
        # Force a collision: both vehicles driven into the conflict point.
        config = SimConfig(hv_policy=ExternalPolicy(), v0_left=5.0, v0_straight=10.0,
                           s0_left=18.0, s0_straight=16.0, seed=0, timeout=30.0)
        sim = Simulation(config)
        while not sim.terminal:
            sim.step(2.0)
        if sim.terminal_reason == "collision":
            assert compute_pet(sim) is None
            assert episode_metrics(sim).severe_conflict is False

    def test_log_serialization(self, tmp_path):
        log, _ = self.run()
        out = tmp_path / "episode.jsonl"
        save_episode_log(log, out)
        lines = out.read_text().splitlines()
        assert len(lines) == len(log.steps) + 1
        import json

        last = json.loads(lines[-1])
        assert last["terminal"] == log.terminal_reason
        first = json.loads(lines[0])
        assert abs(first["p_l"][0] + first["p_l"][1] - 1.0) < 1e-9


class TestBatch:
    def test_single_episode_equals_direct_run(self):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"))
        batch = run_batch(config, episodes=1, master_seed=5)
        child = np.random.SeedSequence(5).spawn(1)[0]
        ep_seed = int(child.generate_state(1)[0])
        from dataclasses import replace

        _, sim = run_episode(replace(config, seed=ep_seed))
        assert batch[0] == episode_metrics(sim)

    def test_fixed_master_seed_reproduces_summary(self):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"))
        rand = BatchRandomization()
        a = run_batch(config, 8, master_seed=9, randomize=rand)
        b = run_batch(config, 8, master_seed=9, randomize=rand)
        assert summarize_metrics(a) == summarize_metrics(b)

    def test_profile_mix_randomization(self):
        config = SimConfig(hv_policy=ScriptedPolicy(profile="conservative"))
        rand = BatchRandomization(profiles=("aggressive", "conservative", "oscillating"))
        metrics = run_batch(config, 6, master_seed=1, randomize=rand)
        assert len(metrics) == 6
