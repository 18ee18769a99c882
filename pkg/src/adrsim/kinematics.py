"""Nonholonomic Ackermann kinematics.

Planar bicycle-style model: (x, y) is the rear-axle midpoint, theta the
heading, and the controls are rear-wheel speed v and steering angle phi:

    dx/dt     = v cos(theta)
    dy/dt     = v sin(theta)
    dtheta/dt = (v / L) tan(phi)

Integration uses classical RK4. Steering is hard-limited to +/-60 degrees,
matching the revolute joint limits of the robot model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError
from .kernels import _rk4_advance
from .robot_model import STEERING_LIMIT

DEFAULT_V_MAX = 2.0  # m/s
DEFAULT_DT = 0.01  # s

INFINITE_RADIUS = math.inf


def normalize_angle(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    a = (angle + math.pi) % (2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class KinematicState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class ControlInput:
    v: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class JointState:
    """Joint-level command derived from (v, phi)."""

    base2lstr: float
    base2rstr: float
    fl_axle: float
    fr_axle: float
    rl_axle: float
    rr_axle: float


def clamp_control(u: ControlInput, v_max: float = DEFAULT_V_MAX) -> ControlInput:
    v = min(max(u.v, -v_max), v_max)
    phi = min(max(u.phi, -STEERING_LIMIT), STEERING_LIMIT)
    return ControlInput(v, phi)


def derivative(s: KinematicState, u: ControlInput, wheelbase: float):
    """(dx, dy, dtheta) at the given state and (already clamped) control."""
    if wheelbase <= 0:
        raise InvalidParameterError("wheelbase must be positive")
    return (
        math.cos(s.theta) * u.v,
        math.sin(s.theta) * u.v,
        u.v / wheelbase * math.tan(u.phi),
    )


def step(s: KinematicState, u: ControlInput, dt: float,
         wheelbase: float) -> KinematicState:
    """Advance one RK4 step; theta is re-normalized to (-pi, pi]."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    if dt > 0.1:
        raise InvalidParameterError("dt must not exceed 0.1 s")
    x, y, theta = _rk4_advance(s.x, s.y, s.theta, u.v, u.phi, wheelbase, dt)
    return KinematicState(x, y, theta)


def turning_radius(u: ControlInput, wheelbase: float) -> float:
    """Signed radius L/tan(phi); +inf for straight motion, positive = left turn."""
    if u.phi == 0.0:
        return INFINITE_RADIUS
    return wheelbase / math.tan(u.phi)


def joint_map(u: ControlInput, wheel_radius: float) -> JointState:
    """Map (v, phi) onto the six joints: both steering pivots get phi,
    all four axles spin at v / wheel_radius."""
    if wheel_radius <= 0:
        raise InvalidParameterError("wheel radius must be positive")
    omega = u.v / wheel_radius
    return JointState(base2lstr=u.phi, base2rstr=u.phi,
                      fl_axle=omega, fr_axle=omega,
                      rl_axle=omega, rr_axle=omega)


def ackermann_joint_map(u: ControlInput, wheel_radius: float, wheelbase: float,
                        track_width: float) -> JointState:
    """Geometric Ackermann variant: inner wheel steers tighter than outer.

    Off by default everywhere; the simple equal-angle map above is the
    reference behavior.
    """
    if wheel_radius <= 0:
        raise InvalidParameterError("wheel radius must be positive")
    omega = u.v / wheel_radius
    if u.phi == 0.0:
        return joint_map(u, wheel_radius)
    radius = wheelbase / math.tan(u.phi)
    left = math.atan(wheelbase / (radius - track_width / 2.0))
    right = math.atan(wheelbase / (radius + track_width / 2.0))
    return JointState(base2lstr=left, base2rstr=right,
                      fl_axle=omega, fr_axle=omega,
                      rl_axle=omega, rr_axle=omega)


def trajectory_csv_rows(times, states, controls):
    """Rows for the trajectory log format `t,x,y,theta,v,phi` at 6 decimals."""
    rows = ["t,x,y,theta,v,phi"]
    for t, s, u in zip(times, states, controls):
        rows.append(",".join(f"{v:.6f}" for v in (t, s.x, s.y, s.theta, u.v, u.phi)))
    return rows
