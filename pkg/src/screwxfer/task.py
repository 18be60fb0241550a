"""Task instances and recorded demonstrations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ContainerGeom
from .se3 import Pose

UPRIGHT_TOL = 1e-6  # rad, container +z vs world +z at instance definition


def _check_upright(pose: Pose, name: str) -> None:
    zz = pose.r.matrix()[2, 2]
    if zz < np.cos(UPRIGHT_TOL):
        raise ValueError(f"{name} base frame must be upright at instance definition")


@dataclass(frozen=True, eq=False)
class TaskInstance:
    """Base poses and geometry of the grasped and receiving containers.

    ``grasp`` is the pose of the primary container's base frame expressed in
    the end-effector frame; it encodes how the object sits in the gripper and
    is constant while the object is held.
    """

    primary_base: Pose
    primary: ContainerGeom
    passive_base: Pose
    passive: ContainerGeom
    grasp: Pose

    def __post_init__(self):
        _check_upright(self.primary_base, "primary")
        _check_upright(self.passive_base, "passive")

    def to_json_dict(self) -> dict:
        return {
            "primary_base": self.primary_base.to_json_dict(),
            "primary_geom": self.primary.to_cm_dict(),
            "passive_base": self.passive_base.to_json_dict(),
            "passive_geom": self.passive.to_cm_dict(),
            "grasp": self.grasp.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaskInstance":
        return cls(
            Pose.from_json_dict(d["primary_base"]),
            ContainerGeom.from_cm_dict(d["primary_geom"]),
            Pose.from_json_dict(d["passive_base"]),
            ContainerGeom.from_cm_dict(d["passive_geom"]),
            Pose.from_json_dict(d["grasp"]),
        )


@dataclass(frozen=True, eq=False)
class Demonstration:
    """A task instance plus the recorded joint-space path (p x l, radians)."""

    task_instance: TaskInstance
    joints: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.joints, dtype=float).copy()
        if j.ndim != 2 or j.shape[0] < 2:
            raise ValueError("joint sequence must have shape (p, l) with p >= 2")
        j.setflags(write=False)
        object.__setattr__(self, "joints", j)

    def validate_for(self, arm) -> None:
        if self.joints.shape[1] != arm.l:
            raise ValueError(f"demonstration has {self.joints.shape[1]} joints, arm has {arm.l}")
        lo, hi = arm.limits[:, 0], arm.limits[:, 1]
        if np.any(self.joints < lo) or np.any(self.joints > hi):
            raise ValueError("demonstration exceeds arm joint limits")

    def to_json_dict(self) -> dict:
        return {
            "task_instance": self.task_instance.to_json_dict(),
            "joints": [[float(x) for x in row] for row in self.joints],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Demonstration":
        return cls(TaskInstance.from_json_dict(d["task_instance"]), np.asarray(d["joints"], float))
