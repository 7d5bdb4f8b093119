"""Differential-drive kinematics: wheel speeds to body twist and pose integration.

All quantities are SI (meters, seconds, radians). The body reference point is
the midpoint of the driven-wheel axle; heading is CCW from +x and kept
normalized to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Below this angular rate (rad/s) or wheel-speed difference (m/s) motion is
# treated as a straight line; well under any commanded resolution.
EPSILON = 1e-9

#: Sentinel turning radius for straight-line motion (v_r == v_l).
STRAIGHT = math.inf


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose:
    """Planar pose of the driven-axle midpoint."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class WheelSpeeds:
    """Ground speeds of the left and right driven wheels, m/s."""

    v_l: float
    v_r: float

    def __post_init__(self):
        if not (math.isfinite(self.v_l) and math.isfinite(self.v_r)):
            raise ValueError("wheel speeds must be finite")


@dataclass(frozen=True)
class BodyTwist:
    """Body-frame velocity: linear speed V (m/s) and yaw rate omega (rad/s)."""

    v: float
    omega: float


def body_twist(ws: WheelSpeeds, track_width: float) -> BodyTwist:
    """Map wheel speeds to the body twist.

    V = (v_r + v_l) / 2 and omega = (v_r - v_l) / track_width.
    """
    if track_width <= 0.0:
        raise ValueError(f"track width must be positive, got {track_width}")
    v = 0.5 * (ws.v_r + ws.v_l)
    omega = (ws.v_r - ws.v_l) / track_width
    return BodyTwist(v, omega)


def turning_radius(ws: WheelSpeeds, track_width: float) -> float:
    """Signed distance from the axle midpoint to the instantaneous center of rotation.

    R = (track/2) * (v_r + v_l) / (v_r - v_l). Returns ``STRAIGHT`` (inf) when
    the wheel speeds are equal within EPSILON, since a straight line has no
    finite turning radius. An in-place turn (v_r = -v_l) gives R = 0; a pivot
    about one stationary wheel gives |R| = track/2.
    """
    if track_width <= 0.0:
        raise ValueError(f"track width must be positive, got {track_width}")
    diff = ws.v_r - ws.v_l
    if abs(diff) <= EPSILON:
        return STRAIGHT
    # ratio first: keeps the pivot (v/v = 1) and in-place (0/2v = 0) cases exact
    return 0.5 * track_width * ((ws.v_r + ws.v_l) / diff)


def integrate_pose(p: Pose, t: BodyTwist, dt: float) -> Pose:
    """Advance a pose along a constant twist for dt seconds.

    Uses the exact constant-twist arc (not an Euler step), so composing steps
    of any size is equivalent to one big step and closed circles close
    exactly. Falls back to the straight-line update when |omega| <= EPSILON.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if abs(t.omega) <= EPSILON:
        x = p.x + t.v * math.cos(p.theta) * dt
        y = p.y + t.v * math.sin(p.theta) * dt
        return Pose(x, y, p.theta)
    theta1 = p.theta + t.omega * dt
    r = t.v / t.omega
    x = p.x + r * (math.sin(theta1) - math.sin(p.theta))
    y = p.y - r * (math.cos(theta1) - math.cos(p.theta))
    return Pose(x, y, theta1)
