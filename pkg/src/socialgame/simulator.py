"""Closed-loop intersection simulation.

The left-turning AV is controlled by the decision engine (orientation
tracking, expert lookup, game solving each decision period); the oncoming
straight HV follows a scripted profile, a reactive gap-acceptance rule, or
externally supplied acceleration commands.  Episodes log engine internals
per step and end when both vehicles clear the intersection, on collision,
or on timeout.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .expert import ExpertLibrary, default_expert, lookup
from .game import AgentState, PayoffParams, build_payoff_matrix, decide
from .geometry import IntersectionConfig, IntersectionGeometry, PathGeometry
from .kinematics import VehicleState, step_kinematics
from .nash import PROCEED, YIELD, solve_mixed_nash
from .orientation import (
    InteractionSnapshot,
    IOSample,
    OrientationConfig,
    TendencyCategory,
    classify_tendency,
    io_sample_at,
)

__all__ = [
    "ScriptedPolicy",
    "ReactivePolicy",
    "ExternalPolicy",
    "SimConfig",
    "StepRecord",
    "EpisodeLog",
    "Metrics",
    "Simulation",
    "run_episode",
    "run_batch",
    "summarize_metrics",
    "detect_collision",
    "compute_pet",
    "episode_metrics",
    "save_episode_log",
]

CONTROL_BOUNDS = (-4.0, 2.0)  # external (human) acceleration command range


@dataclass(frozen=True)
class ScriptedPolicy:
    """Fixed behavior profiles for the straight vehicle."""

    profile: str = "conservative"  # aggressive | conservative | oscillating | mix
    desired_speed: float = 8.0

    def accel(self, view: "SimView", rng) -> float:
        track = (self.desired_speed - view.hv_speed) / 1.0
        track = min(max(track, -3.0), 2.0)
        if self.profile == "aggressive":
            return track
        if self.profile == "conservative":
            if view.conflict_unresolved and (view.hv_ttcp < 4.0 or view.hv_gap < 8.0):
                if not view.av_moving:
                    # The opponent has ceded the gap; creep through it.
                    creep = (min(3.0, self.desired_speed) - view.hv_speed) / 1.0
                    return min(max(creep, -1.5), 1.0)
                return -1.5
            if view.hv_gap < 12.0:
                # Resume gently while the conflict point is still close.
                return min(track, 0.8)
            return track
        if self.profile == "oscillating":
            phase = int(view.t / 1.5) % 2
            return track if phase == 0 else -1.5
        raise ValueError(f"unknown scripted profile {self.profile!r}")


@dataclass(frozen=True)
class ReactivePolicy:
    """Gap acceptance projected on the conflict point: proceed when the AV
    arrives sufficiently later, otherwise brake comfortably."""

    desired_speed: float = 8.0
    comfort_decel: float = -2.0
    gap_threshold: float = 1.5

    def accel(self, view: "SimView", rng) -> float:
        track = min(max((self.desired_speed - view.hv_speed) / 1.0, -3.0), 2.0)
        if not view.conflict_unresolved:
            return track
        if view.av_ttcp - view.hv_ttcp > self.gap_threshold:
            return track
        return self.comfort_decel


@dataclass(frozen=True)
class ExternalPolicy:
    """Acceleration commands arrive from outside (zero-order hold)."""

    initial_accel: float = 0.0


@dataclass(frozen=True)
class SimView:
    """What a straight-vehicle policy may observe."""

    t: float
    hv_speed: float
    hv_ttcp: float
    av_ttcp: float
    conflict_unresolved: bool
    av_moving: bool = True
    hv_gap: float = math.inf  # remaining distance to the conflict point


@dataclass
class SimConfig:
    geometry: IntersectionConfig = field(default_factory=IntersectionConfig)
    v0_left: float = 3.0
    v0_straight: float = 7.0
    s0_left: float = 0.0
    s0_straight: float = 0.0
    hv_policy: object = field(default_factory=ScriptedPolicy)
    decision_period: float = 0.1
    dt: float = 0.1
    timeout: float = 40.0
    seed: int = 0
    engine: PayoffParams = field(default_factory=PayoffParams)
    orientation: OrientationConfig = field(default_factory=OrientationConfig)
    decision_threshold: float = 0.5
    vehicle_length: float = 4.5
    vehicle_width: float = 2.0

    def __post_init__(self):
        if self.dt <= 0 or self.timeout <= 0:
            raise ValueError("dt and timeout must be positive")
        if self.decision_period < self.dt:
            raise ValueError("decision period cannot be shorter than the step")


@dataclass(frozen=True)
class StepRecord:
    tick: int
    t: float
    s_l: float
    v_l: float
    a_l: float
    s_s: float
    v_s: float
    a_s: float
    d_l: float
    d_s: float
    av_decision: str
    p_l: tuple[float, float]
    p_s: tuple[float, float]
    io: float
    itsi: float
    s_norm: float
    category: str
    fallback: bool
    engine_live: bool = True  # False once the conflict is resolved and the
    # probabilities are the clear-the-intersection placeholder


@dataclass
class EpisodeLog:
    steps: list
    terminal_reason: str
    seed: int
    collision_tick: int | None = None

    @property
    def duration(self) -> float:
        return self.steps[-1].t if self.steps else 0.0


@dataclass
class Metrics:
    transit_av: float | None
    transit_hv: float | None
    combined: float | None
    pet: float | None
    collision: bool
    severe_conflict: bool
    decision_consistency: bool | None
    terminal_reason: str
    seed: int


def _footprint(path: PathGeometry, state: VehicleState) -> np.ndarray:
    """Oriented rectangle corners for the vehicle at its path position."""
    p = path.point_at(state.s)
    h = path.heading_at(state.s)
    ux, uy = math.cos(h), math.sin(h)
    nx, ny = math.sin(h), -math.cos(h)  # right of travel
    cx = p.x + state.lateral_offset * nx
    cy = p.y + state.lateral_offset * ny
    half_l, half_w = state.length / 2.0, state.width / 2.0
    return np.array(
        [
            [cx + ux * half_l + nx * half_w, cy + uy * half_l + ny * half_w],
            [cx + ux * half_l - nx * half_w, cy + uy * half_l - ny * half_w],
            [cx - ux * half_l - nx * half_w, cy - uy * half_l - ny * half_w],
            [cx - ux * half_l + nx * half_w, cy - uy * half_l + ny * half_w],
        ]
    )


def _separated_on_axis(corners_a, corners_b, axis) -> bool:
    pa = corners_a @ axis
    pb = corners_b @ axis
    return pa.max() < pb.min() or pb.max() < pa.min()


def detect_collision(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Oriented-rectangle overlap by the separating-axis test; touching
    boundaries count as contact."""
    for corners in (corners_a, corners_b):
        for k in range(2):
            edge = corners[(k + 1) % 4] - corners[k]
            axis = np.array([-edge[1], edge[0]])
            if _separated_on_axis(corners_a, corners_b, axis):
                return False
    return True


class Simulation:
    """One episode's state machine; ``step`` advances a fixed interval."""

    decision_hysteresis = 0.1  # probability margin required to flip decisions
    hold_line_margin = 4.5  # yielding keeps the front this far from the conflict

    def __init__(self, config: SimConfig, library: ExpertLibrary | None = None):
        self.config = config
        self.library = library
        self.geometry = IntersectionGeometry(config.geometry)
        self.rng = np.random.default_rng(config.seed)
        self.left = VehicleState(
            role="left", s=config.s0_left, v=config.v0_left,
            length=config.vehicle_length, width=config.vehicle_width,
        )
        self.straight = VehicleState(
            role="straight", s=config.s0_straight, v=config.v0_straight,
            length=config.vehicle_length, width=config.vehicle_width,
        )
        self.tick = 0
        self.t = 0.0
        self.steps: list[StepRecord] = []
        self.terminal_reason: str | None = None
        self.collision_tick: int | None = None
        self._snapshots: list[InteractionSnapshot] = []
        self._io_samples: list[IOSample] = []
        self._hv_accel_hold = (
            config.hv_policy.initial_accel
            if isinstance(config.hv_policy, ExternalPolicy)
            else 0.0
        )
        self._av_accel = 0.0
        self._last_decision = YIELD
        self._last_live_decision: str | None = None  # engine output while contested
        self._last_profile = None
        self._last_category: TendencyCategory | None = None
        self._last_fallback = False
        self._zone_events: dict = {}  # role -> [enter_t, exit_t]
        self._cross_times: dict = {}  # role -> t when front passed the conflict point
        self._transit: dict = {}  # role -> [enter_t, exit_t] of the intersection box
        zone_half = self.geometry.config.lane_width / 2.0
        cg = self.geometry.conflict
        self._zone_span = {
            "left": (cg.s_l_cp - zone_half, cg.s_l_cp + zone_half),
            "straight": (cg.s_s_cp - zone_half, cg.s_s_cp + zone_half),
        }

    # -- observers ---------------------------------------------------------

    @property
    def terminal(self) -> bool:
        return self.terminal_reason is not None

    def distances(self) -> tuple[float, float]:
        cg = self.geometry.conflict
        return cg.s_l_cp - self.left.s, cg.s_s_cp - self.straight.s

    def _snapshot(self) -> InteractionSnapshot:
        d_l, d_s = self.distances()
        cg = self.geometry.conflict
        return InteractionSnapshot(
            t=self.t,
            d_l=d_l, v_l=self.left.v, d_s=d_s, v_s=self.straight.v,
            l_l=self.left.length, w_l=self.left.width,
            l_s=self.straight.length, w_s=self.straight.width,
            theta_l=cg.theta_l, theta_s=cg.theta_s,
        )

    def _conflict_unresolved(self) -> bool:
        """The turning vehicle still occupies (or has yet to clear) the part
        of the oncoming lane ahead of the straight vehicle."""
        _, d_s = self.distances()
        hv_crossed = self.straight.front > self.geometry.conflict.s_s_cp
        if hv_crossed or d_s <= 0.0:
            return False
        if self.left.rear > self._zone_span["left"][1]:
            # Past the crossing: check the footprint against the oncoming
            # lane corridor, which the exit leg still sweeps for a while.
            corners = _footprint(self.geometry.left_path, self.left)
            half_lane = self.geometry.config.lane_width / 2.0
            lane_y = self.geometry.conflict.point.y
            band_lo = lane_y - half_lane - self.straight.width / 2.0
            band_hi = lane_y + half_lane + self.straight.width / 2.0
            hv_front_x = self.geometry.straight_path.point_at(self.straight.front).x
            in_corridor = (
                (corners[:, 1] >= band_lo)
                & (corners[:, 1] <= band_hi)
                & (corners[:, 0] <= hv_front_x + 0.5)
            )
            return bool(in_corridor.any())
        return True

    # -- control -----------------------------------------------------------

    def _decide_av(self) -> None:
        d_l, d_s = self.distances()
        cfg = self.config
        cg = self.geometry.conflict
        committed = self.left.front >= cg.s_l_cp - 2.0  # cannot hold clear anymore
        if d_l <= 0.5 or d_s <= 0.5 or committed:
            # Conflict resolved, or stopping short is no longer possible:
            # clear the intersection rather than stop inside it.
            self._last_decision = PROCEED
            self._last_profile = None
            self._av_accel = cfg.engine.a_proceed[0]
            return
        category = classify_tendency(
            self._io_samples, cfg.orientation.window,
            cfg.orientation.precedence_max, cfg.orientation.yielding_min,
        )
        if self.library is not None:
            expert, fb = lookup(self.library, category)
        else:
            expert, fb = default_expert(), False
        engine = cfg.engine if self.library is None else expert.apply_to(cfg.engine)
        game = build_payoff_matrix(
            (AgentState(d=d_l, v=self.left.v), AgentState(d=d_s, v=self.straight.v)),
            engine, cfg.orientation, rng=self.rng,
        )
        profile = solve_mixed_nash(game)
        # Hysteresis: flip the standing decision only on a decisive margin,
        # so boundary equilibria do not dither the controls.
        p = profile.proceed_l
        threshold = cfg.decision_threshold
        if self._last_live_decision == PROCEED:
            decision = PROCEED if p > threshold - self.decision_hysteresis else YIELD
        elif self._last_live_decision == YIELD:
            decision = PROCEED if p > threshold + self.decision_hysteresis else YIELD
        else:
            decision = decide(profile, "left", threshold)
        self._last_decision = decision
        self._last_live_decision = decision
        self._last_profile = profile
        self._last_category = category
        self._last_fallback = fb
        if decision == PROCEED:
            self._av_accel = cfg.engine.a_proceed[0]
        else:
            # Yielding targets a hold line clear of the oncoming lane's swept
            # strip; brake harder than the comfort rate if needed to make it.
            hold_gap = (cg.s_l_cp - self.hold_line_margin) - self.left.front
            accel = cfg.engine.a_yield[0]
            v = self.left.v
            if v > 0.0 and hold_gap < v * v / (2.0 * abs(accel)):
                accel = (
                    -v * v / (2.0 * hold_gap) if hold_gap > 0.05 else CONTROL_BOUNDS[0]
                )
                accel = max(accel, CONTROL_BOUNDS[0])
            self._av_accel = accel

    def _hv_accel(self, external: float | None) -> float:
        policy = self.config.hv_policy
        if isinstance(policy, ExternalPolicy):
            if external is not None:
                self._hv_accel_hold = min(max(external, CONTROL_BOUNDS[0]), CONTROL_BOUNDS[1])
            return self._hv_accel_hold
        d_l, d_s = self.distances()
        view = SimView(
            t=self.t,
            hv_speed=self.straight.v,
            hv_ttcp=d_s / self.straight.v if self.straight.v > 0 else math.inf,
            av_ttcp=d_l / self.left.v if self.left.v > 0 else math.inf,
            conflict_unresolved=self._conflict_unresolved(),
            av_moving=self.left.v > 0.3,
            hv_gap=d_s,
        )
        return policy.accel(view, self.rng)

    # -- bookkeeping -------------------------------------------------------

    def _interp_time(self, s_prev, s_now, boundary, t_prev, t_now) -> float:
        if s_now == s_prev:
            return t_now
        frac = (boundary - s_prev) / (s_now - s_prev)
        return t_prev + (t_now - t_prev) * min(max(frac, 0.0), 1.0)

    def _update_events(self, role, state_prev: VehicleState, state_now: VehicleState):
        t_prev, t_now = self.t - self.config.dt, self.t
        lo, hi = self._zone_span[role]
        cg = self.geometry.conflict
        s_cp = cg.s_l_cp if role == "left" else cg.s_s_cp
        if role not in self._cross_times and state_now.front >= s_cp:
            self._cross_times[role] = self._interp_time(
                state_prev.front, state_now.front, s_cp, t_prev, t_now
            )
        events = self._zone_events.setdefault(role, [None, None])
        if events[0] is None and state_now.front >= lo:
            events[0] = self._interp_time(state_prev.front, state_now.front, lo, t_prev, t_now)
        if events[0] is not None and events[1] is None and state_now.rear > hi:
            events[1] = self._interp_time(state_prev.rear, state_now.rear, hi, t_prev, t_now)
        span = (
            self.geometry.transit_left if role == "left" else self.geometry.transit_straight
        )
        transit = self._transit.setdefault(role, [None, None])
        if transit[0] is None and state_now.s >= span[0]:
            transit[0] = self._interp_time(state_prev.s, state_now.s, span[0], t_prev, t_now)
        if transit[0] is not None and transit[1] is None and state_now.s >= span[1]:
            transit[1] = self._interp_time(state_prev.s, state_now.s, span[1], t_prev, t_now)

    # -- main loop ---------------------------------------------------------

    def step(self, hv_accel: float | None = None) -> StepRecord:
        if self.terminal:
            raise RuntimeError("episode already terminated")
        cfg = self.config
        self._snapshots.append(self._snapshot())
        self._io_samples.append(
            io_sample_at(self._snapshots, len(self._snapshots) - 1, cfg.orientation)
        )
        decision_every = max(int(round(cfg.decision_period / cfg.dt)), 1)
        if self.tick % decision_every == 0:
            self._decide_av()
        accel_hv = self._hv_accel(hv_accel)
        prev_left, prev_straight = self.left, self.straight
        self.left = step_kinematics(
            self.left, self._av_accel, cfg.dt, cfg.engine.v_bounds_left
        )
        self.straight = step_kinematics(
            self.straight, accel_hv, cfg.dt, cfg.engine.v_bounds_straight
        )
        self.tick += 1
        self.t = self.tick * cfg.dt
        self._update_events("left", prev_left, self.left)
        self._update_events("straight", prev_straight, self.straight)
        sample = self._io_samples[-1]
        profile = self._last_profile
        record = StepRecord(
            tick=self.tick,
            t=self.t,
            s_l=self.left.s, v_l=self.left.v, a_l=self._av_accel,
            s_s=self.straight.s, v_s=self.straight.v, a_s=accel_hv,
            d_l=self.distances()[0], d_s=self.distances()[1],
            av_decision=self._last_decision,
            p_l=(profile.p_l if profile else (1.0, 0.0)),
            p_s=(profile.p_s if profile else (1.0, 0.0)),
            io=sample.io, itsi=sample.itsi, s_norm=sample.s_norm,
            category=(self._last_category.value if self._last_category else "none"),
            fallback=self._last_fallback,
            engine_live=profile is not None,
        )
        self.steps.append(record)
        if detect_collision(
            _footprint(self.geometry.left_path, self.left),
            _footprint(self.geometry.straight_path, self.straight),
        ):
            self.terminal_reason = "collision"
            self.collision_tick = self.tick
        elif all(
            self._transit.get(role, [None, None])[1] is not None
            for role in ("left", "straight")
        ):
            self.terminal_reason = "both-crossed"
        elif self.t >= cfg.timeout:
            self.terminal_reason = "timeout"
        return record

    def run(self) -> EpisodeLog:
        while not self.terminal:
            self.step()
        return EpisodeLog(
            steps=self.steps,
            terminal_reason=self.terminal_reason,
            seed=self.config.seed,
            collision_tick=self.collision_tick,
        )

    # Metrics helpers read these after the run.
    def zone_events(self) -> dict:
        return self._zone_events

    def cross_times(self) -> dict:
        return self._cross_times

    def transit_times(self) -> dict:
        return self._transit


def run_episode(config: SimConfig, library: ExpertLibrary | None = None):
    sim = Simulation(config, library)
    log = sim.run()
    return log, sim


def compute_pet(sim: Simulation) -> float | None:
    """Post-encroachment time: the later vehicle's conflict-zone entry minus
    the earlier vehicle's exit.  Undefined on collision or missing events."""
    if sim.terminal_reason == "collision":
        return None
    events = sim.zone_events()
    if any(
        role not in events or events[role][0] is None or events[role][1] is None
        for role in ("left", "straight")
    ):
        return None
    first, second = sorted(events.values(), key=lambda ev: ev[0])
    return max(second[0] - first[1], 0.0)


def episode_metrics(sim: Simulation) -> Metrics:
    transit = sim.transit_times()

    def span_or_none(role):
        pair = transit.get(role, [None, None])
        if pair[0] is None or pair[1] is None:
            return None
        return pair[1] - pair[0]

    t_av = span_or_none("left")
    t_hv = span_or_none("straight")
    pet = compute_pet(sim)
    crossings = sim.cross_times()
    consistency = None
    if ("left" in crossings or "straight" in crossings) and sim._last_live_decision:
        av_first = crossings.get("left", math.inf) < crossings.get("straight", math.inf)
        consistency = (sim._last_live_decision == PROCEED) == av_first
    return Metrics(
        transit_av=t_av,
        transit_hv=t_hv,
        combined=(t_av + t_hv) if (t_av is not None and t_hv is not None) else None,
        pet=pet,
        collision=sim.terminal_reason == "collision",
        severe_conflict=(pet is not None and pet < 2.0),
        decision_consistency=consistency,
        terminal_reason=sim.terminal_reason,
        seed=sim.config.seed,
    )


@dataclass(frozen=True)
class BatchRandomization:
    v_left: tuple[float, float] = (2.0, 4.5)
    v_straight: tuple[float, float] = (5.0, 9.0)
    profiles: tuple | None = None  # e.g. ("aggressive", "conservative", "oscillating")


def run_batch(
    config: SimConfig,
    episodes: int,
    master_seed: int,
    library: ExpertLibrary | None = None,
    randomize: BatchRandomization | None = None,
    log_sink=None,
) -> list[Metrics]:
    """Seeded batch of episodes; per-episode seeds derive from the master.

    ``log_sink(index, log)``, when given, receives each EpisodeLog so
    callers can persist exactly the episodes the metrics describe.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    children = np.random.SeedSequence(master_seed).spawn(episodes)
    out = []
    for k in range(episodes):
        ep_seed = int(children[k].generate_state(1)[0])
        ep_config = replace(config, seed=ep_seed)
        if randomize is not None:
            rng = np.random.default_rng(children[k])
            ep_config = replace(
                ep_config,
                v0_left=rng.uniform(*randomize.v_left),
                v0_straight=rng.uniform(*randomize.v_straight),
            )
            if randomize.profiles is not None:
                profile = randomize.profiles[int(rng.integers(len(randomize.profiles)))]
                ep_config = replace(
                    ep_config, hv_policy=replace(config.hv_policy, profile=profile)
                )
        log, sim = run_episode(ep_config, library)
        if log_sink is not None:
            log_sink(k, log)
        out.append(episode_metrics(sim))
    return out


def summarize_metrics(metrics: list[Metrics]) -> dict:
    pets = [m.pet for m in metrics if m.pet is not None]
    transits = [m.transit_av for m in metrics if m.transit_av is not None]
    return {
        "episodes": len(metrics),
        "collisions": sum(m.collision for m in metrics),
        "severe_conflicts": sum(m.severe_conflict for m in metrics),
        "timeouts": sum(m.terminal_reason == "timeout" for m in metrics),
        "pet_median": float(np.median(pets)) if pets else None,
        "pet_mean": float(np.mean(pets)) if pets else None,
        "transit_av_mean": float(np.mean(transits)) if transits else None,
        "consistency_rate": (
            float(
                np.mean([m.decision_consistency for m in metrics
                         if m.decision_consistency is not None])
            )
            if any(m.decision_consistency is not None for m in metrics)
            else None
        ),
    }


def save_episode_log(log: EpisodeLog, path) -> None:
    """JSON-lines, one step per line, with a trailing terminal record."""
    with open(path, "w") as fh:
        for rec in log.steps:
            doc = {
                "tick": rec.tick, "t": rec.t,
                "left": {"s": rec.s_l, "v": rec.v_l, "a": rec.a_l},
                "straight": {"s": rec.s_s, "v": rec.v_s, "a": rec.a_s},
                "d_l": rec.d_l, "d_s": rec.d_s,
                "av_decision": rec.av_decision,
                "p_l": list(rec.p_l), "p_s": list(rec.p_s),
                "io": rec.io, "itsi": rec.itsi, "s_norm": rec.s_norm,
                "category": rec.category, "fallback": rec.fallback,
            }
            fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
        fh.write(
            json.dumps(
                {"terminal": log.terminal_reason, "seed": log.seed},
                separators=(",", ":"),
            )
            + "\n"
        )
