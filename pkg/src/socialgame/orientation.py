"""Interaction Orientation: quantifying how strongly the observed vehicle
tends to take or cede precedence.

Two ingredients are combined per instant:

* an environment-state index (softmax blend of the normalized time-to-conflict
  difference and the normalized cooperative acceleration), and
* a trajectory motion feature: the observed vehicle's displacement over a
  trailing window, normalized between the displacements implied by the
  collision-avoidance boundary accelerations read off its space-time diagram.

The orientation value is ``1 - index * motion_feature``: 0 marks a pronounced
precedence tendency, 1 a distinct yielding tendency.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Sequence

log = logging.getLogger(__name__)

__all__ = [
    "OrientationError",
    "ZeroSpeed",
    "DegenerateGeometry",
    "IllConditioned",
    "AreaInPast",
    "EmptySeries",
    "SigmoidCalibration",
    "fit_sigmoid",
    "normalize",
    "InteractionSnapshot",
    "delta_ttcp",
    "ttcp",
    "cooperative_accel",
    "itsi",
    "OccupiedArea",
    "occupied_area",
    "shift_for_lateral_deviation",
    "AccelBounds",
    "boundary_accelerations",
    "s_norm",
    "interaction_orientation",
    "IOSample",
    "TendencyCategory",
    "classify_tendency",
    "OrientationConfig",
    "io_sample_at",
    "io_series",
]


class OrientationError(ValueError):
    pass


class ZeroSpeed(OrientationError):
    """A speed of zero makes the requested quantity unbounded."""


class DegenerateGeometry(OrientationError):
    pass


class IllConditioned(OrientationError):
    pass


class AreaInPast(OrientationError):
    pass


class EmptySeries(OrientationError):
    pass


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


@dataclass(frozen=True)
class SigmoidCalibration:
    """Two-point calibration of the decreasing logistic normalizer.

    ``alpha`` is the shape factor (steepness per unit of the raw quantity),
    ``beta`` the midpoint where the normalized value is 0.5.  The anchor
    points used for the fit are retained for provenance.
    """

    alpha: float
    beta: float
    anchors: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha == 0.0:
            raise IllConditioned("shape factor must be finite and nonzero")


def fit_sigmoid(
    anchors: tuple[tuple[float, float], tuple[float, float]]
) -> SigmoidCalibration:
    """Fit (alpha, beta) so that normalize(v_j) == y_j at both anchors.

    With c_j = ln((1-y_j)/y_j) the fit is alpha = (c1-c2)/(v1-v2) and
    beta = v1 - c1/alpha.
    """
    (v1, y1), (v2, y2) = anchors
    if v1 == v2:
        raise IllConditioned("anchor values must be distinct")
    for y in (y1, y2):
        if not 0.0 < y < 1.0:
            raise IllConditioned("anchor norms must lie in (0, 1)")
    c1 = math.log((1.0 - y1) / y1)
    c2 = math.log((1.0 - y2) / y2)
    alpha = (c1 - c2) / (v1 - v2)
    if alpha == 0.0:
        raise IllConditioned("anchors imply a flat normalizer")
    beta = v1 - c1 / alpha
    return SigmoidCalibration(alpha=alpha, beta=beta, anchors=anchors)


def normalize(value: float, calib: SigmoidCalibration) -> float:
    """Decreasing logistic map to (0, 1): 1 - sigmoid(alpha*(value - beta))."""
    return 1.0 - _sigmoid(calib.alpha * (value - calib.beta))


@dataclass(frozen=True)
class InteractionSnapshot:
    """One instant of the left-turn / straight dyad.

    ``d_l`` / ``d_s`` are along-path distances from each vehicle to the
    conflict point (negative once crossed); ``theta_l`` / ``theta_s`` are the
    conflict crossing angles used by the lateral-deviation shift.  The
    ``off_*`` fields are signed lateral offsets from the lane centerlines.
    """

    t: float
    d_l: float
    v_l: float
    d_s: float
    v_s: float
    l_l: float = 4.5
    w_l: float = 2.0
    l_s: float = 4.5
    w_s: float = 2.0
    off_l: float = 0.0
    off_s: float = 0.0
    theta_l: float = 0.0
    theta_s: float = math.pi / 2

    def __post_init__(self):
        if self.v_l < 0 or self.v_s < 0:
            raise OrientationError("speeds must be non-negative")

    @property
    def t_s(self) -> float:
        """Straight vehicle's time to the conflict point (inf when stopped)."""
        return self.d_s / self.v_s if self.v_s > 0 else math.inf

    def swapped(self) -> "InteractionSnapshot":
        """Mirror the roles so the turning vehicle becomes the observed one.

        The crossing angles derive from the single symmetric crossing and
        keep their (complement, raw) meaning, so they do not swap.
        """
        return replace(
            self,
            d_l=self.d_s, v_l=self.v_s, d_s=self.d_l, v_s=self.v_l,
            l_l=self.l_s, w_l=self.w_s, l_s=self.l_l, w_s=self.w_l,
            off_l=self.off_s, off_s=self.off_l,
        )


def ttcp(distance: float, speed: float, cap: float = 20.0) -> float:
    """Time to the conflict point, capped so a stopped vehicle stays finite."""
    if speed <= 0.0:
        return cap
    return min(distance / speed, cap)


def delta_ttcp(snap: InteractionSnapshot) -> float:
    """Time-to-conflict difference, turning vehicle minus straight vehicle."""
    if snap.v_l <= 0.0 or snap.v_s <= 0.0:
        raise ZeroSpeed("delta_ttcp needs both speeds positive")
    return snap.d_l / snap.v_l - snap.d_s / snap.v_s


def cooperative_accel(snap: InteractionSnapshot, t_s: float | None = None) -> float:
    """Acceleration the turning vehicle needs to clear the conflict point
    relative to the straight vehicle's arrival time ``t_s``.

    Two regimes: when the plain constant-acceleration solution would require
    reversing (d_l < v_l*t_s/2), the braking-limit form v_l^2/(2*d_l) is used
    instead.
    """
    if t_s is None:
        t_s = snap.t_s
    if not math.isfinite(t_s) or t_s <= 0.0:
        raise DegenerateGeometry(f"straight arrival time {t_s} is unusable")
    if snap.d_l <= 0.0:
        raise DegenerateGeometry("turning vehicle already at or past the conflict point")
    if snap.d_l >= 0.5 * snap.v_l * t_s:
        return 2.0 * (snap.d_l - snap.v_l * t_s) / (t_s * t_s)
    return snap.v_l * snap.v_l / (2.0 * snap.d_l)


def itsi(ttcp_norm: float, ac_norm: float) -> float:
    """Softmax-weighted blend of the two normalized environment indicators."""
    ea = math.exp(ttcp_norm)
    eb = math.exp(ac_norm)
    return (ea * ttcp_norm + eb * ac_norm) / (ea + eb)


@dataclass(frozen=True)
class OccupiedArea:
    """Rectangle the turning vehicle occupies on the straight vehicle's
    space-time diagram: time span [t1, t2], position span [S1, S2]."""

    t1: float
    t2: float
    s1: float
    s2: float

    def __post_init__(self):
        if not (self.t2 > self.t1 and self.s2 > self.s1):
            raise OrientationError("occupied area must have positive extent")


def occupied_area(
    snap: InteractionSnapshot, straight_state: tuple[float, float, float]
) -> OccupiedArea:
    """Project the turning vehicle onto the straight vehicle's ST diagram.

    ``straight_state`` is (t0, S0, v_s): the straight vehicle's current
    diagram coordinates and speed.  The time span is when the turning
    vehicle's body covers the conflict point; the position span covers the
    conflict point plus the turning vehicle's footprint.
    """
    t0, s0, _v_s = straight_state
    if snap.v_l <= 0.0:
        raise ZeroSpeed("occupied area is unbounded for a stopped turning vehicle")
    t1 = t0 + snap.d_l / snap.v_l
    t2 = t1 + snap.l_l / snap.v_l
    s1 = s0 + snap.d_s
    s2 = s1 + snap.w_l + snap.l_l
    return OccupiedArea(t1=t1, t2=t2, s1=s1, s2=s2)


def shift_for_lateral_deviation(
    area: OccupiedArea, snap: InteractionSnapshot, deviator: str
) -> OccupiedArea:
    """Shift the occupied area for a lateral deviation of either vehicle.

    A deviation moves the conflict point: the along-path distance changes
    project through the crossing angles, and the area translates by
    (-dt, +dS) with dt the straight vehicle's time shift.
    """
    if deviator == "left":
        offset = snap.off_l
        ds_l = math.tan(snap.theta_l) * offset
        ds_s = math.sin(snap.theta_l) * ds_l
    elif deviator == "straight":
        offset = snap.off_s
        ds_l = math.sin(snap.theta_s) * offset
        ds_s = math.tan(snap.theta_s) * offset
    else:
        raise OrientationError(f"unknown deviator {deviator!r}")
    if offset == 0.0:
        return area
    if snap.v_s <= 0.0:
        raise ZeroSpeed("time shift undefined for a stopped straight vehicle")
    dt = ds_s / snap.v_s
    return OccupiedArea(
        t1=area.t1 - dt, t2=area.t2 - dt, s1=area.s1 + ds_l, s2=area.s2 + ds_l
    )


@dataclass(frozen=True)
class AccelBounds:
    """Avoidance acceleration envelope.

    Normally a_min <= a_max; extreme approach speeds can invert the corner
    solutions, which downstream normalization treats as degenerate.
    """

    a_min: float
    a_max: float

    def __post_init__(self):
        if not (math.isfinite(self.a_min) and math.isfinite(self.a_max)):
            raise OrientationError("boundary accelerations must be finite")


def boundary_accelerations(
    area: OccupiedArea, straight_state: tuple[float, float, float]
) -> AccelBounds:
    """Constant accelerations that graze the occupied area's corners.

    The maximum avoidance acceleration passes through the top-left corner
    (t1, S2) (clear ahead of the turning vehicle); the minimum passes through
    the bottom-right corner (t2, S1) (pass behind it).
    """
    t0, s0, v0 = straight_state
    if area.t1 <= t0:
        raise AreaInPast("occupied area starts at or before the current instant")
    dt1 = area.t1 - t0
    dt2 = area.t2 - t0
    a_min = 2.0 * ((area.s1 - s0) - v0 * dt2) / (dt2 * dt2)
    a_max = 2.0 * ((area.s2 - s0) - v0 * dt1) / (dt1 * dt1)
    return AccelBounds(a_min=a_min, a_max=a_max)


def _displacement_with_stop(v0: float, accel: float, dt: float) -> float:
    """v0*dt + a*dt^2/2, accruing distance only until the stop instant."""
    if v0 + accel * dt < 0.0:
        return v0 * v0 / (2.0 * abs(accel))
    return v0 * dt + 0.5 * accel * dt * dt


def s_norm(
    actual_displacement: float,
    straight_state: tuple[float, float],
    bounds: AccelBounds,
    t_s: float,
) -> float:
    """Normalize the straight vehicle's observed displacement between the
    displacements implied by the boundary accelerations over [t0, t_s].

    Returns 1 when the vehicle out-ran the maximal-avoidance trajectory
    (pressing ahead), 0 when it fell behind the minimal one (holding back).
    """
    v0, t0 = straight_state
    if t_s <= t0:
        raise OrientationError("window end must be after its start")
    dt = t_s - t0
    lo = _displacement_with_stop(v0, bounds.a_min, dt)
    hi = _displacement_with_stop(v0, bounds.a_max, dt)
    if hi <= lo:
        # Far-future areas collapse (or invert) the envelope; routine, so
        # logged quietly and normalized to the neutral value.
        log.debug("degenerate displacement bounds [%.6f, %.6f]; using 0.5", lo, hi)
        return 0.5
    if actual_displacement >= hi:
        return 1.0
    if actual_displacement <= lo:
        return 0.0
    return (actual_displacement - lo) / (hi - lo)


def interaction_orientation(itsi_value: float, s_norm_value: float) -> float:
    """Orientation in [0, 1]: 0 = precedence tendency, 1 = yielding."""
    return 1.0 - itsi_value * s_norm_value


@dataclass(frozen=True)
class IOSample:
    t: float
    itsi: float
    s_norm: float
    io: float

    def __post_init__(self):
        if self.io != 1.0 - self.itsi * self.s_norm:
            raise OrientationError("io must equal 1 - itsi*s_norm exactly")


class TendencyCategory(Enum):
    PRECEDENCE = "precedence"
    AMBIGUOUS = "ambiguous"
    YIELDING = "yielding"


def classify_tendency(
    io_samples: Sequence[IOSample],
    window: float = 1.0,
    precedence_max: float = 0.4,
    yielding_min: float = 0.6,
) -> TendencyCategory:
    """Bucket the mean orientation over the trailing window into the three
    tendency categories."""
    if not io_samples:
        raise EmptySeries("cannot classify an empty orientation series")
    t_end = io_samples[-1].t
    tail = [s.io for s in io_samples if s.t >= t_end - window]
    mean_io = sum(tail) / len(tail)
    if mean_io >= yielding_min:
        return TendencyCategory.YIELDING
    if mean_io <= precedence_max:
        return TendencyCategory.PRECEDENCE
    return TendencyCategory.AMBIGUOUS


@dataclass
class OrientationConfig:
    """Calibration for the orientation pipeline.

    The anchors are configuration (symmetric, saturating outside typical
    urban ranges), not dataset constants; recalibrate per dataset.  Their
    orientation is increasing (a positive arrival-time difference, i.e. the
    turning vehicle arriving later, normalizes high): that way the
    environment index and the motion feature rise together for an observed
    vehicle that is positioned ahead and pressing, which is what spreads
    the orientation value over its full range.  The time-to-conflict cap
    keeps stopped vehicles finite deep in the logistic tail.
    """

    ttcp_cap: float = 20.0
    ttcp_anchors: tuple = ((-3.0, 0.1), (3.0, 0.9))
    ac_anchors: tuple = ((-2.0, 0.1), (2.0, 0.9))
    window: float = 1.0
    precedence_max: float = 0.4
    yielding_min: float = 0.6

    @cached_property
    def ttcp_calib(self) -> SigmoidCalibration:
        return fit_sigmoid(self.ttcp_anchors)

    @cached_property
    def ac_calib(self) -> SigmoidCalibration:
        return fit_sigmoid(self.ac_anchors)


def _capped_delta_ttcp(snap: InteractionSnapshot, cap: float) -> float:
    return ttcp(snap.d_l, snap.v_l, cap) - ttcp(snap.d_s, snap.v_s, cap)


def _itsi_at(snap: InteractionSnapshot, config: OrientationConfig) -> tuple[float, float, float]:
    """ITSI plus the raw indicators behind it (for analysis output)."""
    dt_val = _capped_delta_ttcp(snap, config.ttcp_cap)
    try:
        ac_val = cooperative_accel(snap, t_s=ttcp(snap.d_s, snap.v_s, config.ttcp_cap))
        ac_n = normalize(ac_val, config.ac_calib)
    except DegenerateGeometry:
        ac_val = math.nan
        ac_n = 0.5
    ttcp_n = normalize(dt_val, config.ttcp_calib)
    return itsi(ttcp_n, ac_n), dt_val, ac_val


def io_sample_at(
    snapshots: Sequence[InteractionSnapshot],
    k: int,
    config: OrientationConfig | None = None,
) -> IOSample:
    """Orientation sample for index ``k`` of a snapshot history.

    The environment index is evaluated at instant ``k``; the motion feature
    compares the observed vehicle's displacement over the trailing window
    against the boundary-acceleration envelope frozen at the window start.
    Where the envelope is undefined (stopped turning vehicle, conflict
    already crossed), the motion feature falls back to the neutral 0.5.
    """
    config = config or OrientationConfig()
    snap = snapshots[k]
    itsi_v, _, _ = _itsi_at(snap, config)
    s_norm_v = 0.5
    if k > 0:
        k0 = k - 1
        while k0 > 0 and snapshots[k0 - 1].t >= snap.t - config.window:
            k0 -= 1
        snap0 = snapshots[k0]
        try:
            area = occupied_area(snap0, (snap0.t, 0.0, snap0.v_s))
            if snap0.off_l != 0.0:
                area = shift_for_lateral_deviation(area, snap0, "left")
            if snap0.off_s != 0.0:
                area = shift_for_lateral_deviation(area, snap0, "straight")
            bounds = boundary_accelerations(area, (snap0.t, 0.0, snap0.v_s))
            actual = snap0.d_s - snap.d_s
            s_norm_v = s_norm(actual, (snap0.v_s, snap0.t), bounds, snap.t)
        except (ZeroSpeed, AreaInPast):
            s_norm_v = 0.5
    return IOSample(t=snap.t, itsi=itsi_v, s_norm=s_norm_v,
                    io=interaction_orientation(itsi_v, s_norm_v))


def io_series(
    snapshots: Sequence[InteractionSnapshot],
    config: OrientationConfig | None = None,
    subject: str = "straight",
) -> list[IOSample]:
    """Rolling orientation series for the observed vehicle."""
    config = config or OrientationConfig()
    if subject == "left":
        snapshots = [s.swapped() for s in snapshots]
    elif subject != "straight":
        raise OrientationError(f"unknown subject {subject!r}")
    return [io_sample_at(snapshots, k, config) for k in range(len(snapshots))]
