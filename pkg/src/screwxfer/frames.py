"""Motion-transfer frame assignment for demonstration and new-task objects.

Each task-relevant container gets a frame anchored at its task-critical rim
location: for the grasped (primary) object the point where content leaves the
rim, for the receiving (passive) object the point where content lands.  All
frames keep +z world-vertical at assignment time (bases are upright then) and
set +x by the rule for the object's role.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel
from .geometry import ContainerGeom, corner_points, lowest_rim_point, rim_point, superellipse_value
from .se3 import TIE_EPS, Pose, Rotation
from .segmentation import (
    DEFAULT_SEG_TOL,
    GuidingPoses,
    fk_path,
    reconstruct_path,
    relativize_to_passive,
    segment_constant_screws,
)
from .task import Demonstration, TaskInstance

RECON_SAMPLES = 200  # reconstruction poses scanned for the critical point


class NoVerticalIntersection(ValueError):
    """The critical point never projects into the passive opening while pouring."""


class DegenerateLine(ValueError):
    """Base-frame projections coincide, so the joining line is undefined."""


@dataclass(frozen=True, eq=False)
class MotionTransferFrame:
    owner: str          # "primary" | "passive"
    local: Pose         # relative to the owner's base frame
    world: Pose

    def to_json_dict(self) -> dict:
        return {
            "owner": self.owner,
            "local_pose": self.local.to_json_dict(),
            "world_pose": self.world.to_json_dict(),
        }


def _rot_z(angle: float) -> Rotation:
    return Rotation.from_axis_angle(np.array([0.0, 0.0, 1.0]), angle)


def _frame_from_world_x(origin_world: np.ndarray, x_dir: np.ndarray, base: Pose, owner: str) -> MotionTransferFrame:
    """Frame with world-vertical +z and the given horizontal +x direction."""
    x = np.array([x_dir[0], x_dir[1], 0.0])
    x /= np.linalg.norm(x)
    r_world = Rotation.from_matrix(np.column_stack([x, np.cross([0.0, 0.0, 1.0], x), [0.0, 0.0, 1.0]]))
    world = Pose(r_world, origin_world)
    return MotionTransferFrame(owner, base.inverse().compose(world), world)


def _rim_frame_on_primary(geom: ContainerGeom, t: float, base: Pose) -> MotionTransferFrame:
    """Primary frame at rim parameter t: +x along the outward rim normal."""
    rp = rim_point(geom, t)
    local = Pose(_rot_z(math.atan2(rp.outward_normal[1], rp.outward_normal[0])), rp.position)
    return MotionTransferFrame("primary", local, base.compose(local))


def _tilt_rad(pose: Pose) -> float:
    return math.acos(max(-1.0, min(1.0, pose.r.matrix()[2, 2])))


def reconstruct_demo(demo: Demonstration, arm: ArmModel, seg_tol: float = DEFAULT_SEG_TOL):
    """Segment the demonstration and sample the reconstructed motion.

    Returns (guides_world, recon_poses) where recon_poses are end-effector
    poses along the screw interpolant through the guiding poses.
    """
    demo.validate_for(arm)
    guides = segment_constant_screws(fk_path(arm, demo.joints), seg_tol)
    return guides, reconstruct_path(guides, RECON_SAMPLES)


def assign_demo_primary_frame(
    demo: Demonstration, arm: ArmModel, seg_tol: float = DEFAULT_SEG_TOL
) -> MotionTransferFrame:
    """Frame at the rim point reaching the lowest world z over the reconstructed motion.

    The reconstruction is sampled at RECON_SAMPLES poses; world-z ties within
    TIE_EPS are broken by the earliest sample, then the smallest rim parameter.
    """
    _, recon = reconstruct_demo(demo, arm, seg_tol)
    return _primary_frame_from_track(demo.task_instance, recon)


def _primary_frame_from_track(t_d: TaskInstance, recon_ee: list[Pose]) -> MotionTransferFrame:
    geom = t_d.primary
    mats = np.stack([ee.matrix() for ee in recon_ee]) @ t_d.grasp.matrix()
    # Coarse world-z of all rim samples over all reconstruction poses at once;
    # the winning pose is then refined by the seeded golden-section search.
    ts = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    e = 2.0 / geom.n
    c, s = np.cos(ts), np.sin(ts)
    x = geom.a * np.sign(c) * np.abs(c) ** e
    y = geom.b * np.sign(s) * np.abs(s) ** e
    Z = (
        mats[:, 2, 0:1] * x[None, :]
        + mats[:, 2, 1:2] * y[None, :]
        + mats[:, 2, 2:3] * geom.height
        + mats[:, 2, 3:4]
    )
    per_sample = Z.min(axis=1)
    idx = int(np.argmax(per_sample < per_sample.min() + TIE_EPS))  # earliest tie wins
    rp = lowest_rim_point(geom, Pose.from_matrix(mats[idx]))
    return _rim_frame_on_primary(geom, rp.t, t_d.primary_base)


def critical_point_track(t_d: TaskInstance, primary_frame: MotionTransferFrame, recon_ee) -> list[Pose]:
    """World poses of the primary motion-transfer frame along a reconstruction."""
    tail = t_d.grasp.compose(primary_frame.local)
    return [ee.compose(tail) for ee in recon_ee]


def assign_demo_passive_frame(demo_instance: TaskInstance, c_r_track: list[Pose]) -> MotionTransferFrame:
    """Frame where the primary's critical point lands on the passive opening.

    The landing is taken at pouring time: the track sample of maximum tilt
    (earliest on ties).  The critical point is projected vertically onto the
    passive rim plane; if the projection falls outside the opening the
    demonstration is malformed and NoVerticalIntersection is raised.  +x
    points towards the initial critical-point pose, projected into the rim
    plane (falling back to the passive base x-axis if directly underneath).
    """
    if not c_r_track:
        raise ValueError("empty critical-point track")
    tilts = [_tilt_rad(p) for p in c_r_track]
    apex = int(np.argmax(tilts))
    t_s = demo_instance.passive
    base = demo_instance.passive_base
    p_local = base.inverse().apply(c_r_track[apex].t)
    if superellipse_value(t_s, p_local[:2]) >= 1.0:
        raise NoVerticalIntersection(
            "critical point projects outside the passive opening at pouring time"
        )
    origin_world = base.apply(np.array([p_local[0], p_local[1], t_s.height]))
    x_dir = c_r_track[0].t - origin_world
    if np.linalg.norm(x_dir[:2]) < 1e-9:
        x_dir = base.r.matrix()[:, 0]
    return _frame_from_world_x(origin_world, x_dir, base, "passive")


def assign_new_primary_frame(t_n: TaskInstance) -> MotionTransferFrame:
    """Primary frame for a new task instance, from geometry alone.

    Shapes with corners (n != 2 or a != b) anchor at the corner nearest the
    passive base; circles anchor where the line joining the base projections
    crosses the lip, on the side facing the passive object.
    """
    geom = t_n.primary
    base = t_n.primary_base
    ps = t_n.passive_base.t[:2]
    if geom.n != 2.0 or geom.a != geom.b:
        corners = corner_points(geom)
        world_xy = [base.apply(c.position)[:2] for c in corners]
        d2 = [float((w - ps) @ (w - ps)) for w in world_xy]
        return _rim_frame_on_primary(geom, corners[int(np.argmin(d2))].t, base)
    d_world = ps - base.t[:2]
    if np.linalg.norm(d_world) < 1e-12:
        raise DegenerateLine("base-frame projections coincide")
    d_local = base.r.inverse().apply(np.array([d_world[0], d_world[1], 0.0]))
    return _rim_frame_on_primary(geom, math.atan2(d_local[1], d_local[0]), base)


def assign_new_passive_frame(t_n: TaskInstance, g_primary_frame: Pose) -> MotionTransferFrame:
    """Passive frame at the center of the opening, +x towards the primary frame.

    Falls back to the passive base x-axis when the primary frame sits
    directly above the opening center.
    """
    base = t_n.passive_base
    origin_world = base.apply(np.array([0.0, 0.0, t_n.passive.height]))
    x_dir = g_primary_frame.t - origin_world
    if np.linalg.norm(x_dir[:2]) < 1e-9:
        x_dir = base.r.matrix()[:, 0]
    return _frame_from_world_x(origin_world, x_dir, base, "passive")


def new_instance_frames(t_n: TaskInstance) -> tuple[MotionTransferFrame, MotionTransferFrame]:
    """Assign both frames for a new task instance."""
    pf = assign_new_primary_frame(t_n)
    return pf, assign_new_passive_frame(t_n, pf.world)


@dataclass(frozen=True, eq=False)
class DemoAssignment:
    """Everything derived once from a demonstration for reuse across transfers."""

    guides_world: GuidingPoses
    guides_passive: GuidingPoses
    primary_frame: MotionTransferFrame
    passive_frame: MotionTransferFrame


def assign_demo_frames(
    demo: Demonstration, arm: ArmModel, seg_tol: float = DEFAULT_SEG_TOL
) -> DemoAssignment:
    """Segment a demonstration and assign both motion-transfer frames."""
    guides, recon = reconstruct_demo(demo, arm, seg_tol)
    t_d = demo.task_instance
    pf = _primary_frame_from_track(t_d, recon)
    sf = assign_demo_passive_frame(t_d, critical_point_track(t_d, pf, recon))
    return DemoAssignment(guides, relativize_to_passive(guides, t_d.passive_base), pf, sf)
