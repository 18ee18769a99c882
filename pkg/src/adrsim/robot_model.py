"""Parametric delivery-robot model: dimensions, inertia, links, and joints.

The body shell is treated as a uniform solid box and each wheel as a solid
cylinder, with analytic principal moments of inertia. The canonical model has
seven kinematic links (shell, two steering knuckles, four wheels), six
kinematic joints (two limited steering pivots, four continuous axles), and
fixed-mounted sensor placeholders.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

from .errors import InvalidParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STEERING_LIMIT = math.pi / 3  # rad, +/- 60 degrees

KINEMATIC_LINK_NAMES = (
    "base_link",
    "lstr_link",
    "rstr_link",
    "fl_wheel",
    "fr_wheel",
    "rl_wheel",
    "rr_wheel",
)

KINEMATIC_JOINT_NAMES = (
    "base2lstr",
    "base2rstr",
    "fl_axle",
    "fr_axle",
    "rl_axle",
    "rr_axle",
)

DEFAULT_MASSES = {
    "base_link": 40.0,
    "lstr_link": 1.0,
    "rstr_link": 1.0,
    "fl_wheel": 3.0,
    "fr_wheel": 3.0,
    "rl_wheel": 3.0,
    "rr_wheel": 3.0,
}

WHEEL_THICKNESS = 0.05  # m, not dimensioned in the source tables
STEERING_KNUCKLE_SIZE = 0.05  # m, small cube standing in for the knuckle


@dataclass(frozen=True)
class Dimensions:
    """Overall robot dimensions in meters."""

    wheel_radius: float = 0.150
    shell_length: float = 0.963
    shell_width: float = 0.672
    shell_height: float = 0.557
    total_height: float = 0.640
    wheelbase: float = 0.530
    track_width: float = 0.572

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"dimension {name} must be positive")
        if self.total_height < self.shell_height:
            raise InvalidParameterError("total_height must be >= shell_height")
        if self.wheelbase >= self.shell_length:
            raise InvalidParameterError("wheelbase must be smaller than shell_length")


@dataclass(frozen=True)
class InertiaTensor:
    """Principal moments of inertia (kg m^2); off-diagonal terms are zero."""

    ixx: float
    iyy: float
    izz: float

    def __post_init__(self):
        if self.ixx < 0 or self.iyy < 0 or self.izz < 0:
            raise InvalidParameterError("moments of inertia must be non-negative")


@dataclass(frozen=True)
class BoxParams:
    mass: float
    length: float
    width: float
    depth: float

    def __post_init__(self):
        if min(self.mass, self.length, self.width, self.depth) <= 0:
            raise InvalidParameterError("box mass and edges must be positive")


@dataclass(frozen=True)
class CylinderParams:
    mass: float
    radius: float
    height: float

    def __post_init__(self):
        if self.mass <= 0 or self.radius <= 0:
            raise InvalidParameterError("cylinder mass and radius must be positive")
        if self.height < 0:
            raise InvalidParameterError("cylinder height must be non-negative")


@dataclass(frozen=True)
class LinkSpec:
    name: str
    geometry: BoxParams | CylinderParams
    inertia: InertiaTensor
    # Offset (m) and roll-pitch-yaw orientation (rad) relative to the parent frame.
    origin_xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)
    origin_rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class JointSpec:
    name: str
    kind: str  # revolute | continuous | fixed
    parent: str
    child: str
    axis: tuple[float, float, float]
    limit: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("revolute", "continuous", "fixed"):
            raise InvalidParameterError(f"unsupported joint kind {self.kind!r}")


@dataclass(frozen=True)
class RobotModel:
    name: str
    dimensions: Dimensions
    links: tuple[LinkSpec, ...]
    joints: tuple[JointSpec, ...]
    sensor_links: tuple[LinkSpec, ...] = ()
    sensor_joints: tuple[JointSpec, ...] = ()


def box_inertia(p: BoxParams) -> InertiaTensor:
    """Principal inertia of a uniform solid box.

    Axis convention: ixx along the length direction, iyy along width,
    izz along depth.
    """
    m, l, w, d = p.mass, p.length, p.width, p.depth
    return InertiaTensor(
        ixx=m / 12.0 * (w * w + d * d),
        iyy=m / 12.0 * (l * l + d * d),
        izz=m / 12.0 * (l * l + w * w),
    )


def cylinder_inertia(p: CylinderParams) -> InertiaTensor:
    """Principal inertia of a uniform solid cylinder (izz along its axis)."""
    m, r, h = p.mass, p.radius, p.height
    transverse = m / 12.0 * (3.0 * r * r + h * h)
    return InertiaTensor(ixx=transverse, iyy=transverse, izz=m * r * r / 2.0)


def _wheel_z(dims: Dimensions) -> float:
    # Wheel centers sit below the shell center by the shell/total height gap.
    return -(dims.total_height - dims.shell_height)


def build_canonical_model(dims: Dimensions, masses: dict | None = None,
                          name: str = "adr") -> RobotModel:
    """Assemble the seven-link, six-joint Ackermann model."""
    if masses is None:
        masses = DEFAULT_MASSES
    missing = [n for n in KINEMATIC_LINK_NAMES if n not in masses]
    if missing:
        raise InvalidParameterError(f"missing mass for links: {missing}")

    shell = BoxParams(masses["base_link"], dims.shell_length, dims.shell_width,
                      dims.shell_height)
    half_track = dims.track_width / 2.0
    wheel_z = _wheel_z(dims)

    def wheel(link_name: str, x: float, y: float, z: float) -> LinkSpec:
        geom = CylinderParams(masses[link_name], dims.wheel_radius, WHEEL_THICKNESS)
        # Cylinder axis rotated onto the lateral (y) direction.
        return LinkSpec(link_name, geom, cylinder_inertia(geom),
                        origin_xyz=(x, y, z),
                        origin_rpy=(math.pi / 2.0, 0.0, 0.0))

    def knuckle(link_name: str, x: float, y: float) -> LinkSpec:
        s = STEERING_KNUCKLE_SIZE
        geom = BoxParams(masses[link_name], s, s, s)
        return LinkSpec(link_name, geom, box_inertia(geom),
                        origin_xyz=(x, y, wheel_z))

    links = (
        LinkSpec("base_link", shell, box_inertia(shell)),
        knuckle("lstr_link", dims.wheelbase, half_track),
        knuckle("rstr_link", dims.wheelbase, -half_track),
        wheel("fl_wheel", 0.0, 0.0, 0.0),
        wheel("fr_wheel", 0.0, 0.0, 0.0),
        wheel("rl_wheel", 0.0, half_track, wheel_z),
        wheel("rr_wheel", 0.0, -half_track, wheel_z),
    )

    limit = (-STEERING_LIMIT, STEERING_LIMIT)
    joints = (
        JointSpec("base2lstr", "revolute", "base_link", "lstr_link", (0.0, 0.0, 1.0), limit),
        JointSpec("base2rstr", "revolute", "base_link", "rstr_link", (0.0, 0.0, 1.0), limit),
        JointSpec("fl_axle", "continuous", "lstr_link", "fl_wheel", (0.0, 1.0, 0.0)),
        JointSpec("fr_axle", "continuous", "rstr_link", "fr_wheel", (0.0, 1.0, 0.0)),
        JointSpec("rl_axle", "continuous", "base_link", "rl_wheel", (0.0, 1.0, 0.0)),
        JointSpec("rr_axle", "continuous", "base_link", "rr_wheel", (0.0, 1.0, 0.0)),
    )

    sensor_box = BoxParams(0.1, 0.05, 0.05, 0.05)
    sensor_inertia = box_inertia(sensor_box)
    sensor_links = tuple(
        LinkSpec(n, sensor_box, sensor_inertia,
                 origin_xyz=(0.0, 0.0, dims.shell_height / 2.0 + 0.05))
        for n in ("lidar_link", "camera_link", "imu_link")
    )
    sensor_joints = tuple(
        JointSpec(f"base2{n.split('_')[0]}", "fixed", "base_link", n, (0.0, 0.0, 1.0))
        for n in ("lidar_link", "camera_link", "imu_link")
    )

    return RobotModel(name=name, dimensions=dims, links=links, joints=joints,
                      sensor_links=sensor_links, sensor_joints=sensor_joints)


def _expected_inertia(link: LinkSpec) -> InertiaTensor:
    if isinstance(link.geometry, BoxParams):
        return box_inertia(link.geometry)
    return cylinder_inertia(link.geometry)


def validate_model(m: RobotModel) -> list[str]:
    """Check structural invariants; returns human-readable violations."""
    violations = []
    all_links = m.links + m.sensor_links
    names = [l.name for l in all_links]
    if len(set(names)) != len(names):
        violations.append("duplicate link names")
    link_set = set(names)

    for link in all_links:
        exp = _expected_inertia(link)
        # abs_tol absorbs the 6-decimal quantization of serialized models
        if not all(math.isclose(a, b, rel_tol=1e-5, abs_tol=1e-5) for a, b in
                   ((link.inertia.ixx, exp.ixx), (link.inertia.iyy, exp.iyy),
                    (link.inertia.izz, exp.izz))):
            violations.append(f"link {link.name}: inertia inconsistent with geometry")
        triples = (link.inertia.ixx, link.inertia.iyy, link.inertia.izz)
        for i in range(3):
            if triples[i] > triples[(i + 1) % 3] + triples[(i + 2) % 3] + 1e-12:
                violations.append(f"link {link.name}: principal moments violate "
                                  "triangle inequality")
                break

    children = set()
    for joint in m.joints + m.sensor_joints:
        if joint.parent not in link_set:
            violations.append(f"joint {joint.name}: dangling parent link {joint.parent!r}")
        if joint.child not in link_set:
            violations.append(f"joint {joint.name}: dangling child link {joint.child!r}")
        if joint.kind == "revolute" and joint.limit is None:
            violations.append(f"joint {joint.name}: revolute joint missing limits")
        if joint.kind in ("continuous", "fixed") and joint.limit is not None:
            violations.append(f"joint {joint.name}: {joint.kind} joint must not carry limits")
        if joint.child == "base_link":
            violations.append(f"joint {joint.name}: base_link cannot be a child")
        if joint.child in children:
            violations.append(f"joint {joint.name}: link {joint.child} has two parents")
        children.add(joint.child)

    for link in all_links:
        if link.name != "base_link" and link.name not in children:
            violations.append(f"link {link.name}: not connected to the joint tree")
    return violations


def load_robot_spec(path) -> tuple[Dimensions, dict]:
    """Read a robot spec file with [dimensions] and [masses] sections."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    dims_tab = data.get("dimensions", {})
    unknown = set(dims_tab) - set(Dimensions.__dataclass_fields__)
    if unknown:
        raise InvalidParameterError(f"unknown dimension keys: {sorted(unknown)}")
    dims = replace(Dimensions(), **dims_tab)
    masses = dict(DEFAULT_MASSES)
    masses.update(data.get("masses", {}))
    return dims, masses


def default_robot_spec_text() -> str:
    """Spec file matching the built-in defaults, for `urdf gen` bootstrapping."""
    dims = Dimensions()
    lines = ["[dimensions]"]
    lines += [f"{k} = {getattr(dims, k)}" for k in dims.__dataclass_fields__]
    lines.append("")
    lines.append("[masses]")
    lines += [f"{k} = {v}" for k, v in DEFAULT_MASSES.items()]
    lines.append("")
    return "\n".join(lines)
