"""2D simulation engine for Ackermann-steering autonomous delivery robots."""

from .kinematics import ControlInput, JointState, KinematicState
from .robot_model import (
    BoxParams,
    CylinderParams,
    Dimensions,
    InertiaTensor,
    RobotModel,
    box_inertia,
    build_canonical_model,
    cylinder_inertia,
    validate_model,
)
from .world import Footprint, LidarScan, OccupancyGrid, ScanConfig

__version__ = "0.1.0"

__all__ = [
    "BoxParams",
    "ControlInput",
    "CylinderParams",
    "Dimensions",
    "Footprint",
    "InertiaTensor",
    "JointState",
    "KinematicState",
    "LidarScan",
    "OccupancyGrid",
    "RobotModel",
    "ScanConfig",
    "box_inertia",
    "build_canonical_model",
    "cylinder_inertia",
    "validate_model",
]
