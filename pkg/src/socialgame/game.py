"""Payoff construction for the proceed/yield game.

Each cell of the 2x2 bimatrix combines, per agent:

* an efficiency benefit from the decision's time delay to the conflict
  point (logistic-squashed into (-1, 1)),
* a safety benefit accumulated over a discounted constant-acceleration
  rollout of both agents' future states, and
* a normally distributed disturbance term drawn once per (agent, cell).

The coefficient weights on efficiency and safety are the quantities the
expert-learning stage calibrates per tendency category.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import clamped_motion
from .nash import PROCEED, STRATEGY_CELLS, YIELD, Bimatrix, MixedProfile
from .orientation import OrientationConfig, SigmoidCalibration, normalize, ttcp

__all__ = [
    "AgentState",
    "PayoffParams",
    "extrapolate",
    "safety_benefit",
    "efficiency_benefit",
    "payoff",
    "build_payoff_matrix",
    "decide",
    "benefit_features",
]

_TTCP_FLOOR = 1e-6  # keeps the cooperative-acceleration denominator usable
_EXP_CLIP = 500.0


@dataclass(frozen=True)
class AgentState:
    """Distance to the conflict point and current speed of one agent."""

    d: float
    v: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("speed must be non-negative")


def _neutral_coeffs() -> np.ndarray:
    return np.ones((2, 4))


@dataclass(frozen=True)
class PayoffParams:
    """Engine parameters.

    ``alpha``/``beta`` are (2, 4) arrays: rows index the agent (left,
    straight), columns the joint strategy in canonical order (PP, PY, YP,
    YY).  Proceed/yield accelerations are per agent; speed bounds per role.
    ``efficiency_flip`` negates the delay exponent for sensitivity studies;
    the default follows the published sign convention.
    """

    alpha: np.ndarray = field(default_factory=_neutral_coeffs)
    beta: np.ndarray = field(default_factory=_neutral_coeffs)
    a_proceed: tuple[float, float] = (1.5, 1.5)
    a_yield: tuple[float, float] = (-2.0, -2.0)
    mu: float = 0.0
    sigma: float = 0.01 / 3.0
    gamma: float = 0.5
    n_steps: int = 5
    dt: float = 0.1
    v_bounds_left: tuple[float, float] = (0.0, 5.0)
    v_bounds_straight: tuple[float, float] = (0.0, 10.0)
    ttcp_cap: float = 20.0
    efficiency_flip: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.alpha.shape != (2, 4) or self.beta.shape != (2, 4):
            raise ValueError("alpha and beta must have shape (2, 4)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if self.n_steps < 1 or self.dt <= 0 or self.sigma < 0:
            raise ValueError("invalid rollout or disturbance parameters")
        if min(self.a_proceed) <= 0 or max(self.a_yield) >= 0:
            raise ValueError("proceed accelerations must be positive, yield negative")

    def with_coefficients(self, alpha, beta) -> "PayoffParams":
        return replace(self, alpha=np.asarray(alpha, float), beta=np.asarray(beta, float))

    def bounds_for(self, agent: int) -> tuple[float, float]:
        return self.v_bounds_left if agent == 0 else self.v_bounds_straight


def extrapolate(
    states: tuple[AgentState, AgentState],
    strategy: tuple[str, str],
    params: PayoffParams,
    n: int | None = None,
) -> list[tuple[AgentState, AgentState]]:
    """Roll both agents forward under the joint strategy.

    Proceeding agents hold their proceed acceleration, yielding agents their
    yield deceleration; speeds saturate at the role bounds and distances
    stop at the conflict point.
    """
    n = params.n_steps if n is None else n
    if n < 1:
        raise ValueError("need at least one extrapolation step")
    out = []
    current = list(states)
    for _ in range(n):
        stepped = []
        for agent in (0, 1):
            accel = (
                params.a_proceed[agent]
                if strategy[agent] == PROCEED
                else params.a_yield[agent]
            )
            lo, hi = params.bounds_for(agent)
            v_new, ds = clamped_motion(current[agent].v, accel, params.dt, lo, hi)
            stepped.append(AgentState(d=max(current[agent].d - ds, 0.0), v=v_new))
        current = stepped
        out.append((current[0], current[1]))
    return out


def _step_safety(
    d_own: float, v_own: float, d_other: float, v_other: float,
    ttcp_calib: SigmoidCalibration, ac_calib: SigmoidCalibration, cap: float,
) -> float:
    """One agent's instantaneous safety term at an extrapolated state."""
    t_own = ttcp(d_own, v_own, cap)
    t_other = max(ttcp(d_other, v_other, cap), _TTCP_FLOOR)
    dttcp = t_own - t_other
    a_c = 2.0 * (d_own - v_own * t_other) / (t_other * t_other)
    tn = normalize(dttcp, ttcp_calib)
    an = normalize(a_c, ac_calib)
    ea, eb = math.exp(tn), math.exp(an)
    return (ea * tn + eb * an) / (ea + eb)


def safety_benefit(
    rollout: list[tuple[AgentState, AgentState]],
    calibs: tuple[SigmoidCalibration, SigmoidCalibration],
    gamma: float,
    n_steps: int,
    ttcp_cap: float = 20.0,
) -> tuple[float, float]:
    """Discounted sum of per-step safety terms for both agents."""
    if len(rollout) < n_steps:
        raise ValueError("rollout shorter than the requested step count")
    ttcp_calib, ac_calib = calibs
    totals = [0.0, 0.0]
    for n in range(1, n_steps + 1):
        left, straight = rollout[n - 1]
        weight = gamma ** n
        totals[0] += weight * _step_safety(
            left.d, left.v, straight.d, straight.v, ttcp_calib, ac_calib, ttcp_cap
        )
        totals[1] += weight * _step_safety(
            straight.d, straight.v, left.d, left.v, ttcp_calib, ac_calib, ttcp_cap
        )
    return totals[0], totals[1]


def _proceed_time(v0: float, a_p: float, d0: float) -> float:
    """Constant-acceleration time to cover d0 (exact quadratic root)."""
    return (-v0 + math.sqrt(v0 * v0 + 2.0 * a_p * d0)) / a_p


def efficiency_benefit(
    state: AgentState,
    action: str,
    a_p: float,
    a_y: float,
    opponent_ttcp0: float,
    ttcp_cap: float = 20.0,
    flip: bool = False,
) -> float:
    """Delay-based efficiency term in (-1, 1).

    Proceed: constant-acceleration time to the conflict point.  Yield: brake
    to a stop, wait out the opponent's current arrival time, then cover the
    remaining distance; if braking cannot stop short of the conflict point
    the proceed time is used as fallback.
    """
    if state.d <= 0.0:
        raise ValueError("agent already at or past the conflict point")
    ttcp0 = ttcp(state.d, state.v, ttcp_cap)
    if action == PROCEED:
        t_decision = _proceed_time(state.v, a_p, state.d)
    else:
        d_rest = state.d - state.v * state.v / (2.0 * abs(a_y))
        if d_rest < 0.0:
            t_decision = _proceed_time(state.v, a_p, state.d)
        else:
            t_decision = math.sqrt(2.0 * d_rest / a_p) + opponent_ttcp0
    x = ttcp0 - t_decision
    if flip:
        x = -x
    x = min(max(x, -_EXP_CLIP), _EXP_CLIP)
    return 2.0 / (1.0 + math.exp(x)) - 1.0


def payoff(alpha: float, beta: float, T: float, R: float, eps: float = 0.0) -> float:
    """Linear benefit combination for one agent in one cell."""
    return alpha * T + beta * R + eps


def build_payoff_matrix(
    states: tuple[AgentState, AgentState],
    params: PayoffParams,
    config: OrientationConfig | None = None,
    rng: np.random.Generator | int | None = None,
) -> Bimatrix:
    """Assemble the bimatrix over all four joint strategies.

    One disturbance value is drawn per (agent, cell) in canonical order, so
    a fixed generator state reproduces the matrix bit for bit.  Passing
    ``rng=None`` (or sigma=0) disables the disturbance.
    """
    config = config or OrientationConfig()
    calibs = (config.ttcp_calib, config.ac_calib)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    left, straight = states
    ttcp0 = (
        ttcp(left.d, left.v, params.ttcp_cap),
        ttcp(straight.d, straight.v, params.ttcp_cap),
    )
    u = np.zeros((2, 2, 2))  # agent, left action, straight action
    for cell, strategy in enumerate(STRATEGY_CELLS):
        rollout = extrapolate(states, strategy, params)
        r_l, r_s = safety_benefit(
            rollout, calibs, params.gamma, params.n_steps, params.ttcp_cap
        )
        for agent, (state, r_val) in enumerate(((left, r_l), (straight, r_s))):
            t_val = efficiency_benefit(
                state,
                strategy[agent],
                params.a_proceed[agent],
                params.a_yield[agent],
                ttcp0[1 - agent],
                params.ttcp_cap,
                params.efficiency_flip,
            )
            eps = 0.0
            if rng is not None and params.sigma > 0.0:
                eps = float(rng.normal(params.mu, params.sigma))
            u[agent, cell // 2, cell % 2] = payoff(
                params.alpha[agent, cell], params.beta[agent, cell], t_val, r_val, eps
            )
    return Bimatrix.from_arrays(u[0], u[1])


def decide(profile: MixedProfile, role: str, threshold: float = 0.5) -> str:
    """Map the solved profile to an action; exact ties yield for safety."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    p = profile.proceed_l if role == "left" else profile.proceed_s
    return PROCEED if p > threshold else YIELD


def benefit_features(
    d_l: np.ndarray,
    v_l: np.ndarray,
    d_s: np.ndarray,
    v_s: np.ndarray,
    params: PayoffParams,
    config: OrientationConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized efficiency and safety benefits for stacked states.

    Returns (T, R), each shaped (2, 4, F): agent x joint strategy x frame.
    These are the coefficient-independent parts of the payoff; the learning
    stage reuses them across every candidate coefficient vector.
    """
    config = config or OrientationConfig()
    d = np.stack([np.asarray(d_l, float), np.asarray(d_s, float)])
    v = np.stack([np.asarray(v_l, float), np.asarray(v_s, float)])
    if np.any(d <= 0.0):
        raise ValueError("benefit features need strictly positive conflict distances")
    frames = d.shape[1]
    cap = params.ttcp_cap

    def vec_ttcp(dd, vv):
        return np.where(vv > 0.0, np.minimum(np.divide(dd, np.where(vv > 0, vv, 1.0)), cap), cap)

    def vec_norm(x, calib):
        z = np.clip(calib.alpha * (x - calib.beta), -_EXP_CLIP, _EXP_CLIP)
        return 1.0 - 1.0 / (1.0 + np.exp(-z))

    T = np.zeros((2, 4, frames))
    R = np.zeros((2, 4, frames))
    ttcp0 = vec_ttcp(d, v)
    for cell, strategy in enumerate(STRATEGY_CELLS):
        # Efficiency: depends only on the agent's own action in the cell.
        for agent in (0, 1):
            a_p = params.a_proceed[agent]
            a_y = params.a_yield[agent]
            if strategy[agent] == PROCEED:
                t_dec = (-v[agent] + np.sqrt(v[agent] ** 2 + 2.0 * a_p * d[agent])) / a_p
            else:
                d_rest = d[agent] - v[agent] ** 2 / (2.0 * abs(a_y))
                t_yield = np.sqrt(2.0 * np.maximum(d_rest, 0.0) / a_p) + ttcp0[1 - agent]
                t_fallback = (-v[agent] + np.sqrt(v[agent] ** 2 + 2.0 * a_p * d[agent])) / a_p
                t_dec = np.where(d_rest < 0.0, t_fallback, t_yield)
            x = ttcp0[agent] - t_dec
            if params.efficiency_flip:
                x = -x
            x = np.clip(x, -_EXP_CLIP, _EXP_CLIP)
            T[agent, cell] = 2.0 / (1.0 + np.exp(x)) - 1.0
        # Safety: discounted rollout shared by both agents.
        dd = d.copy()
        vv = np.stack([
            np.clip(v[agent], *params.bounds_for(agent)) for agent in (0, 1)
        ])
        for n in range(1, params.n_steps + 1):
            for agent in (0, 1):
                accel = (
                    params.a_proceed[agent]
                    if strategy[agent] == PROCEED
                    else params.a_yield[agent]
                )
                lo, hi = params.bounds_for(agent)
                v_new = np.clip(vv[agent] + accel * params.dt, lo, hi)
                with np.errstate(divide="ignore", invalid="ignore"):
                    t_hit = np.where(accel != 0.0, (v_new - vv[agent]) / accel, params.dt)
                ds = 0.5 * (vv[agent] + v_new) * t_hit + v_new * (params.dt - t_hit)
                dd[agent] = np.maximum(dd[agent] - ds, 0.0)
                vv[agent] = v_new
            t_arr = vec_ttcp(dd, vv)
            weight = params.gamma ** n
            for agent in (0, 1):
                t_other = np.maximum(t_arr[1 - agent], _TTCP_FLOOR)
                dttcp = t_arr[agent] - t_other
                a_c = 2.0 * (dd[agent] - vv[agent] * t_other) / (t_other * t_other)
                tn = vec_norm(dttcp, config.ttcp_calib)
                an = vec_norm(a_c, config.ac_calib)
                ea, eb = np.exp(tn), np.exp(an)
                R[agent, cell] += weight * (ea * tn + eb * an) / (ea + eb)
    return T, R
