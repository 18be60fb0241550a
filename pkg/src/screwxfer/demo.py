"""Scripted reference pouring demonstration for desk-scale runs.

A cup (3.25, 3.25, 2, 10 cm) pours into a bowl (8, 8, 2, 5.5 cm): lift
vertically, carry horizontally until the pouring lip sits directly above the
bowl opening center, tilt 120 degrees about the lip tangent line (the lip
stays fixed over the center), then tilt back.  Each stage is one constant
screw.  The carry height keeps every body point of any container up to 20 cm
tall above the bowl rim plane after transfer, and the pour direction runs
along the line joining the base projections, so the geometric frame rules
recover the same critical points the demonstration exhibits.
"""

from __future__ import annotations

import math

import numpy as np

from .arm import DEFAULT_SEED_CONFIG, ArmModel, plan_between, plan_through_guiding_poses
from .geometry import ContainerGeom
from .se3 import Pose, rot_about_line
from .task import Demonstration, TaskInstance

CUP = ContainerGeom(0.0325, 0.0325, 2.0, 0.10)
BOWL = ContainerGeom(0.08, 0.08, 2.0, 0.055)

BOWL_BASE_XY = (0.60, 0.0)
APPROACH_OFFSET = 0.22       # m between cup and bowl base origins at start
CARRY_LIP_CLEARANCE = 0.21   # m of lip height above the bowl rim while carrying
POUR_TILT = 2.0 * math.pi / 3.0
DEMO_STEP = 0.02


def canonical_grasp(geom: ContainerGeom) -> Pose:
    """Container base expressed in the gripper frame: held at half height, upright."""
    return Pose.from_translation([0.0, 0.0, -0.5 * geom.height])


def demo_task_instance() -> TaskInstance:
    bx, by = BOWL_BASE_XY
    return TaskInstance(
        primary_base=Pose.from_translation([bx - APPROACH_OFFSET, by, 0.0]),
        primary=CUP,
        passive_base=Pose.from_translation([bx, by, 0.0]),
        passive=BOWL,
        grasp=canonical_grasp(CUP),
    )


def demo_body_waypoints(t_d: TaskInstance) -> list[Pose]:
    """Primary-base poses at the stage boundaries of the scripted pour."""
    start = t_d.primary_base
    lip_z_carry = t_d.passive.height + CARRY_LIP_CLEARANCE
    z_lift = lip_z_carry - t_d.primary.height
    lifted = Pose(start.r, start.t + np.array([0.0, 0.0, z_lift]))
    bowl_top = t_d.passive_base.t + np.array([0.0, 0.0, lip_z_carry])
    # Carry until the lip (rim point facing the bowl) sits above the bowl center.
    carried = Pose(lifted.r, bowl_top - lifted.r.apply([t_d.primary.a, 0.0, t_d.primary.height]))
    pour = rot_about_line(bowl_top, [0.0, 1.0, 0.0], POUR_TILT).compose(carried)
    return [start, lifted, carried, pour, carried]


def demo_ee_waypoints(t_d: TaskInstance) -> list[Pose]:
    g_pb_e = t_d.grasp.inverse()
    return [b.compose(g_pb_e) for b in demo_body_waypoints(t_d)]


def make_reference_demonstration(arm: ArmModel, step: float = DEMO_STEP) -> Demonstration:
    """Record the scripted pour as a joint path on the given arm."""
    t_d = demo_task_instance()
    ee = demo_ee_waypoints(t_d)
    staging = plan_between(arm, DEFAULT_SEED_CONFIG, ee[0], step)
    res = plan_through_guiding_poses(arm, staging.path.configs[-1], ee, step)
    return Demonstration(t_d, res.path.configs)
