"""Robot description XML: emit a RobotModel as URDF and parse it back.

Emission is deterministic: kinematic links first, then sensor links, joints in
model order, every float printed with exactly 6 decimal places. The parser
accepts any document the emitter produces and rejects joint types outside
{revolute, continuous, fixed}.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .errors import UrdfParseError, UrdfSemanticError
from .robot_model import (
    BoxParams,
    CylinderParams,
    Dimensions,
    JointSpec,
    LinkSpec,
    RobotModel,
    validate_model,
)

SUPPORTED_JOINT_TYPES = ("revolute", "continuous", "fixed")


def _f(value: float) -> str:
    s = f"{value:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _vec(values) -> str:
    return " ".join(_f(v) for v in values)


def _link_xml(link: LinkSpec) -> list[str]:
    geom = link.geometry
    if isinstance(geom, BoxParams):
        shape = f'<box size="{_vec((geom.length, geom.width, geom.depth))}"/>'
    else:
        shape = (f'<cylinder radius="{_f(geom.radius)}" '
                 f'length="{_f(geom.height)}"/>')
    origin = (f'<origin xyz="{_vec(link.origin_xyz)}" '
              f'rpy="{_vec(link.origin_rpy)}"/>')
    inertia = (f'<inertia ixx="{_f(link.inertia.ixx)}" ixy="0.000000" '
               f'ixz="0.000000" iyy="{_f(link.inertia.iyy)}" '
               f'iyz="0.000000" izz="{_f(link.inertia.izz)}"/>')
    return [
        f'  <link name="{link.name}">',
        "    <inertial>",
        f"      {origin}",
        f'      <mass value="{_f(geom.mass)}"/>',
        f"      {inertia}",
        "    </inertial>",
        "    <visual>",
        f"      {origin}",
        f"      <geometry>{shape}</geometry>",
        "    </visual>",
        "    <collision>",
        f"      {origin}",
        f"      <geometry>{shape}</geometry>",
        "    </collision>",
        "  </link>",
    ]


def _joint_xml(joint: JointSpec) -> list[str]:
    lines = [
        f'  <joint name="{joint.name}" type="{joint.kind}">',
        f'    <parent link="{joint.parent}"/>',
        f'    <child link="{joint.child}"/>',
        f'    <axis xyz="{_vec(joint.axis)}"/>',
    ]
    if joint.limit is not None:
        lines.append(f'    <limit lower="{_f(joint.limit[0])}" '
                     f'upper="{_f(joint.limit[1])}" '
                     f'effort="100.000000" velocity="10.000000"/>')
    lines.append("  </joint>")
    return lines


def emit_urdf(model: RobotModel) -> str:
    """Serialize a valid RobotModel as a URDF XML string."""
    violations = validate_model(model)
    if violations:
        raise UrdfSemanticError("cannot emit invalid model: " + "; ".join(violations))
    lines = ['<?xml version="1.0"?>', f'<robot name="{model.name}">']
    for link in model.links + model.sensor_links:
        lines += _link_xml(link)
    for joint in model.joints + model.sensor_joints:
        lines += _joint_xml(joint)
    lines.append("</robot>")
    return "\n".join(lines) + "\n"


def _parse_floats(text: str, n: int, context: str) -> tuple[float, ...]:
    parts = text.split()
    if len(parts) != n:
        raise UrdfSemanticError(f"{context}: expected {n} numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_link(elem: ET.Element, warnings: list[str]) -> LinkSpec:
    name = elem.get("name")
    if not name:
        raise UrdfSemanticError("link without a name")
    inertial = elem.find("inertial")
    visual = elem.find("visual")
    if inertial is None or visual is None:
        raise UrdfSemanticError(f"link {name}: missing inertial or visual element")

    mass_el = inertial.find("mass")
    inertia_el = inertial.find("inertia")
    if mass_el is None or inertia_el is None:
        raise UrdfSemanticError(f"link {name}: incomplete inertial element")
    mass = float(mass_el.get("value", "nan"))

    geom_el = visual.find("geometry")
    if geom_el is None or len(geom_el) == 0:
        raise UrdfSemanticError(f"link {name}: missing geometry")
    shape = geom_el[0]
    if shape.tag == "box":
        l, w, d = _parse_floats(shape.get("size", ""), 3, f"link {name} box size")
        geometry = BoxParams(mass, l, w, d)
    elif shape.tag == "cylinder":
        geometry = CylinderParams(mass, float(shape.get("radius", "nan")),
                                  float(shape.get("length", "nan")))
    else:
        raise UrdfSemanticError(f"link {name}: unsupported geometry {shape.tag!r}")

    from .robot_model import InertiaTensor

    inertia = InertiaTensor(
        ixx=float(inertia_el.get("ixx", "nan")),
        iyy=float(inertia_el.get("iyy", "nan")),
        izz=float(inertia_el.get("izz", "nan")),
    )
    origin_el = visual.find("origin")
    xyz = (0.0, 0.0, 0.0)
    rpy = (0.0, 0.0, 0.0)
    if origin_el is not None:
        xyz = _parse_floats(origin_el.get("xyz", "0 0 0"), 3, f"link {name} origin")
        rpy = _parse_floats(origin_el.get("rpy", "0 0 0"), 3, f"link {name} origin")
    for child in elem:
        if child.tag not in ("inertial", "visual", "collision"):
            warnings.append(f"link {name}: ignoring unknown element <{child.tag}>")
    return LinkSpec(name, geometry, inertia, xyz, rpy)


def _parse_joint(elem: ET.Element) -> JointSpec:
    name = elem.get("name", "<unnamed>")
    kind = elem.get("type")
    if kind not in SUPPORTED_JOINT_TYPES:
        raise UrdfSemanticError(f"joint {name}: unsupported joint type {kind!r}")
    parent_el = elem.find("parent")
    child_el = elem.find("child")
    if parent_el is None or child_el is None:
        raise UrdfSemanticError(f"joint {name}: missing parent or child")
    axis_el = elem.find("axis")
    axis = (1.0, 0.0, 0.0)
    if axis_el is not None:
        axis = _parse_floats(axis_el.get("xyz", "1 0 0"), 3, f"joint {name} axis")
    limit = None
    limit_el = elem.find("limit")
    if limit_el is not None:
        limit = (float(limit_el.get("lower", "nan")), float(limit_el.get("upper", "nan")))
    if kind == "revolute" and limit is None:
        raise UrdfSemanticError(f"joint {name}: revolute joint requires a limit element")
    if kind != "revolute":
        limit = None
    return JointSpec(name, kind, parent_el.get("link", ""), child_el.get("link", ""),
                     axis, limit)


def _infer_dimensions(links: dict[str, LinkSpec]) -> Dimensions:
    """Recover overall dimensions from canonical link geometry, where present."""
    defaults = Dimensions()
    kwargs = {}
    base = links.get("base_link")
    if base is not None and isinstance(base.geometry, BoxParams):
        kwargs["shell_length"] = base.geometry.length
        kwargs["shell_width"] = base.geometry.width
        kwargs["shell_height"] = base.geometry.depth
    wheel = links.get("rl_wheel")
    if wheel is not None and isinstance(wheel.geometry, CylinderParams):
        kwargs["wheel_radius"] = wheel.geometry.radius
        shell_h = kwargs.get("shell_height", defaults.shell_height)
        kwargs["total_height"] = shell_h + abs(wheel.origin_xyz[2])
        kwargs["track_width"] = 2.0 * abs(wheel.origin_xyz[1])
    knuckle = links.get("lstr_link")
    if knuckle is not None:
        kwargs["wheelbase"] = knuckle.origin_xyz[0]
    merged = {f: kwargs.get(f, getattr(defaults, f))
              for f in Dimensions.__dataclass_fields__}
    return Dimensions(**merged)


def parse_urdf(text: str, warnings: list[str] | None = None) -> RobotModel:
    """Parse URDF XML into a RobotModel.

    Unknown elements are skipped; pass a list via `warnings` to collect notes
    about them. Raises UrdfParseError for malformed XML and UrdfSemanticError
    for structural violations.
    """
    if warnings is None:
        warnings = []
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise UrdfParseError(str(exc.msg if hasattr(exc, "msg") else exc),
                             line, column) from exc
    if root.tag != "robot":
        raise UrdfSemanticError(f"root element must be <robot>, got <{root.tag}>")
    name = root.get("name", "robot")

    links: list[LinkSpec] = []
    joints: list[JointSpec] = []
    for elem in root:
        if elem.tag == "link":
            links.append(_parse_link(elem, warnings))
        elif elem.tag == "joint":
            joints.append(_parse_joint(elem))
        else:
            warnings.append(f"ignoring unknown element <{elem.tag}>")

    by_name = {l.name: l for l in links}
    for joint in joints:
        for ref in (joint.parent, joint.child):
            if ref not in by_name:
                raise UrdfSemanticError(f"joint {joint.name}: undefined link {ref!r}")

    sensor_children = {j.child for j in joints if j.kind == "fixed"}
    kinematic_links = tuple(l for l in links if l.name not in sensor_children)
    sensor_links = tuple(l for l in links if l.name in sensor_children)
    kinematic_joints = tuple(j for j in joints if j.kind != "fixed")
    sensor_joints = tuple(j for j in joints if j.kind == "fixed")

    return RobotModel(
        name=name,
        dimensions=_infer_dimensions(by_name),
        links=kinematic_links,
        joints=kinematic_joints,
        sensor_links=sensor_links,
        sensor_joints=sensor_joints,
    )


def models_close(a: RobotModel, b: RobotModel, tol: float = 1e-6) -> bool:
    """Field-by-field structural equality with float tolerance."""
    if a.name != b.name:
        return False
    for fa, fb in zip(_flatten(a), _flatten(b)):
        if isinstance(fa, float):
            if not math.isclose(fa, fb, abs_tol=tol, rel_tol=tol):
                return False
        elif fa != fb:
            return False
    return True


def _flatten(model: RobotModel):
    for f in Dimensions.__dataclass_fields__:
        yield getattr(model.dimensions, f)
    for group in (model.links, model.sensor_links):
        yield len(group)
        for link in group:
            yield link.name
            yield type(link.geometry).__name__
            geom = link.geometry
            if isinstance(geom, BoxParams):
                yield from (geom.mass, geom.length, geom.width, geom.depth)
            else:
                yield from (geom.mass, geom.radius, geom.height)
            yield from (link.inertia.ixx, link.inertia.iyy, link.inertia.izz)
            yield from link.origin_xyz
            yield from link.origin_rpy
    for group in (model.joints, model.sensor_joints):
        yield len(group)
        for joint in group:
            yield joint.name
            yield joint.kind
            yield joint.parent
            yield joint.child
            yield from joint.axis
            yield joint.limit is None
            if joint.limit is not None:
                yield from joint.limit
