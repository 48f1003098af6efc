"""Point-mass vehicle state and exact constant-acceleration stepping.

Speeds saturate at configurable bounds.  When the speed would cross a bound
mid-step, the step is split at the crossing instant so the displacement is
exact rather than trapezoid-approximate; two half-steps therefore compose to
one full step bit-for-bit in exact arithmetic.
"""

import math
from dataclasses import dataclass, replace

__all__ = ["VehicleState", "clamped_motion", "step_kinematics"]


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state along an assigned path.

    ``s`` is the arc-length position of the vehicle center from the path
    entry; ``lateral_offset`` is a signed offset from the path centerline
    (positive to the right of travel).
    """

    role: str  # "left" or "straight"
    s: float
    v: float
    a: float = 0.0
    length: float = 4.5
    width: float = 2.0
    lateral_offset: float = 0.0

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("speed must be non-negative")
        if self.length <= 0 or self.width <= 0:
            raise ValueError("vehicle dimensions must be positive")

    @property
    def front(self) -> float:
        return self.s + self.length / 2.0

    @property
    def rear(self) -> float:
        return self.s - self.length / 2.0


def clamped_motion(
    v0: float,
    accel: float,
    dt: float,
    v_min: float = 0.0,
    v_max: float = math.inf,
) -> tuple[float, float]:
    """Advance speed under constant acceleration with saturating bounds.

    Returns (v_end, displacement).  If the speed reaches a bound before the
    step ends, the remaining time is spent at the bound, so the displacement
    is the exact integral of the clamped speed profile.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if v_min > v_max:
        raise ValueError("empty speed bounds")
    v0 = min(max(v0, v_min), v_max)
    v_free = v0 + accel * dt
    v_end = min(max(v_free, v_min), v_max)
    if v_free == v_end or accel == 0.0:
        return v_end, 0.5 * (v0 + v_end) * dt
    t_hit = (v_end - v0) / accel  # first instant the bound is reached
    ds = 0.5 * (v0 + v_end) * t_hit + v_end * (dt - t_hit)
    return v_end, ds


def step_kinematics(
    state: VehicleState,
    accel: float,
    dt: float,
    v_bounds: tuple[float, float] = (0.0, math.inf),
) -> VehicleState:
    """One integration step; position advances by the exact displacement."""
    v_end, ds = clamped_motion(state.v, accel, dt, v_bounds[0], v_bounds[1])
    return replace(state, s=state.s + ds, v=v_end, a=accel)
