"""Screw-geometric transfer of a single pouring demonstration to new container geometries."""

from .se3 import Pose, Rotation, ScrewParams, UnitDualQuaternion, compose, log_to_screw, pose_distance, sclerp, screw_to_pose
from .geometry import ContainerGeom, RimPoint
from .arm import ArmModel, JointPath, PlanResult, default_arm
from .segmentation import Demonstration, GuidingPoses
from .frames import MotionTransferFrame, TaskInstance
from .evaluation import PlanEvaluation

__version__ = "0.1.0"

__all__ = [
    "ArmModel",
    "ContainerGeom",
    "Demonstration",
    "GuidingPoses",
    "JointPath",
    "MotionTransferFrame",
    "PlanEvaluation",
    "PlanResult",
    "Pose",
    "RimPoint",
    "Rotation",
    "ScrewParams",
    "TaskInstance",
    "UnitDualQuaternion",
    "compose",
    "default_arm",
    "log_to_screw",
    "pose_distance",
    "sclerp",
    "screw_to_pose",
]
