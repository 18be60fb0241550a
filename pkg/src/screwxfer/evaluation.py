"""Judge a planned execution: container collision, pour-in criterion, tilt metrics.

Containers are treated as solid extrusions for the overlap test: a collision
is any sampled surface point of one container strictly inside the filled
extrusion of the other.  This flags wall crossings and cavity penetration at
the sampling resolution, in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, JointPath, PlanResult, fk_batch
from .frames import assign_new_primary_frame
from .geometry import ContainerGeom, wall_sample_points
from .se3 import Pose
from .task import TaskInstance

DEFAULT_FILL_TILT_DEG = 60.0
ANGULAR_SAMPLES = 128
Z_STEP = 0.01  # m between wall sample rings


@dataclass(frozen=True, eq=False)
class PlanEvaluation:
    collision_free: bool
    first_collision_index: int | None
    pour_success: bool
    i0: int
    max_tilt_outside_deg: float
    per_waypoint_tilt: list[float]

    def to_json_dict(self) -> dict:
        return {
            "collision_free": self.collision_free,
            "first_collision_index": self.first_collision_index,
            "pour_success": self.pour_success,
            "i0": self.i0,
            "max_tilt_outside_deg": self.max_tilt_outside_deg,
            "per_waypoint_tilt_deg": [float(t) for t in self.per_waypoint_tilt],
        }

    def tilt_csv(self) -> str:
        lines = ["waypoint,tilt_deg"]
        lines += [f"{i},{t:.10g}" for i, t in enumerate(self.per_waypoint_tilt)]
        return "\n".join(lines) + "\n"


def _plan_matrices(plan, arm: ArmModel) -> np.ndarray:
    """(N, 4, 4) end-effector matrices for a PlanResult, JointPath or array."""
    if isinstance(plan, PlanResult):
        return np.stack([p.matrix() for p in plan.poses])
    if isinstance(plan, JointPath):
        return fk_batch(arm, plan.configs)
    return fk_batch(arm, np.asarray(plan, dtype=float))


def _rigid_inverse(T: np.ndarray) -> np.ndarray:
    out = np.broadcast_to(np.eye(4), T.shape).copy()
    Rt = np.swapaxes(T[..., :3, :3], -1, -2)
    out[..., :3, :3] = Rt
    out[..., :3, 3] = -np.einsum("...ij,...j->...i", Rt, T[..., :3, 3])
    return out


def _to_homogeneous(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([pts, np.ones((pts.shape[0], 1))], axis=1)


def tilt_angle(pose_of_primary: Pose) -> float:
    """Angle in degrees between the container's +z axis and world +z, in [0, 180]."""
    zz = pose_of_primary.r.matrix()[2, 2]
    return math.degrees(math.acos(max(-1.0, min(1.0, zz))))


def _tilt_deg_batch(T_prim: np.ndarray) -> np.ndarray:
    return np.degrees(np.arccos(np.clip(T_prim[:, 2, 2], -1.0, 1.0)))


def pour_in(p_primary_frame: Pose, t_n: TaskInstance) -> bool:
    """True when the primary frame origin projects strictly inside the passive opening."""
    p_local = t_n.passive_base.inverse().apply(p_primary_frame.t)
    g = t_n.passive
    return abs(p_local[0] / g.a) ** g.n + abs(p_local[1] / g.b) ** g.n < 1.0


def _overlap_mask(geom: ContainerGeom, M: np.ndarray, pts_h: np.ndarray) -> np.ndarray:
    """Per-matrix flag: any of the mapped points strictly inside the solid.

    Mapping all points under all matrices is a single GEMM; the superellipse
    power is only evaluated on points surviving the bounding-box test.
    """
    n = M.shape[0]
    B = M.transpose(2, 0, 1).reshape(4, n * 4)
    P = (pts_h @ B).reshape(pts_h.shape[0], n, 4)
    x, y, z = P[..., 0], P[..., 1], P[..., 2]
    cand = (z > 0.0) & (z < geom.height) & (np.abs(x) < geom.a) & (np.abs(y) < geom.b)
    hit = np.zeros(n, dtype=bool)
    if cand.any():
        ki, ni = np.nonzero(cand)
        inside = (
            np.abs(x[ki, ni] / geom.a) ** geom.n + np.abs(y[ki, ni] / geom.b) ** geom.n
        ) < 1.0
        hit[ni[inside]] = True
    return hit


def _collision_scan(
    T_prim: np.ndarray,
    primary: ContainerGeom,
    passive: ContainerGeom,
    T_passive: np.ndarray,
    angular: int = ANGULAR_SAMPLES,
    z_step: float = Z_STEP,
) -> int | None:
    """First waypoint index where the container solids overlap, else None."""
    r_p = math.sqrt(primary.a**2 + primary.b**2 + primary.height**2)
    r_s = math.sqrt(passive.a**2 + passive.b**2 + passive.height**2)
    gap = np.linalg.norm(T_prim[:, :3, 3] - T_passive[:3, 3], axis=1)
    near = np.nonzero(gap <= r_p + r_s)[0]
    if near.size == 0:
        return None
    prim_pts = _to_homogeneous(wall_sample_points(primary, angular, z_step))
    pass_pts = _to_homogeneous(wall_sample_points(passive, angular, z_step))

    M = _rigid_inverse(T_passive) @ T_prim[near]        # primary local -> passive local
    in_passive = _overlap_mask(passive, M, prim_pts)
    M2 = _rigid_inverse(T_prim[near]) @ T_passive       # passive local -> primary local
    in_primary = _overlap_mask(primary, M2, pass_pts)

    hits = near[in_passive | in_primary]
    return int(hits[0]) if hits.size else None


def collision_check(plan, arm: ArmModel, t_n: TaskInstance) -> tuple[bool, int | None]:
    """Per-waypoint solid-overlap test between the held primary and the passive.

    Returns (collision_free, first violating waypoint index or None).
    """
    T_prim = _plan_matrices(plan, arm) @ t_n.grasp.matrix()
    first = _collision_scan(T_prim, t_n.primary, t_n.passive, t_n.passive_base.matrix())
    return first is None, first


def compute_i0(plan, arm: ArmModel, t_n: TaskInstance, fill_tilt_deg: float) -> int:
    """First waypoint index where the primary's tilt exceeds fill_tilt_deg.

    Content starts leaving the container past this tilt; returns the path
    length when the threshold is never exceeded.
    """
    if not 0.0 < fill_tilt_deg < 180.0:
        raise ValueError("fill_tilt_deg must be in (0, 180)")
    T_prim = _plan_matrices(plan, arm) @ t_n.grasp.matrix()
    over = np.nonzero(_tilt_deg_batch(T_prim) > fill_tilt_deg)[0]
    return int(over[0]) if over.size else T_prim.shape[0]


def evaluate(
    plan, arm: ArmModel, t_n: TaskInstance, fill_tilt_deg: float = DEFAULT_FILL_TILT_DEG
) -> PlanEvaluation:
    """Aggregate collision, pour and tilt metrics for a planned path.

    Pour success requires the primary frame origin to project strictly inside
    the passive opening at every waypoint from the spill onset i0 on; the
    maximum tilt is reported over waypoints where that projection is outside.
    """
    if not 0.0 < fill_tilt_deg < 180.0:
        raise ValueError("fill_tilt_deg must be in (0, 180)")
    T_prim = _plan_matrices(plan, arm) @ t_n.grasp.matrix()
    n = T_prim.shape[0]
    tilt = _tilt_deg_batch(T_prim)

    first = _collision_scan(T_prim, t_n.primary, t_n.passive, t_n.passive_base.matrix())

    pf_local = assign_new_primary_frame(t_n).local
    origins = np.einsum("nab,b->na", T_prim, np.append(pf_local.t, 1.0))[:, :3]
    p_local = np.einsum("ab,nb->na", _rigid_inverse(t_n.passive_base.matrix()), _to_homogeneous(origins))
    g = t_n.passive
    inside = (np.abs(p_local[:, 0] / g.a) ** g.n + np.abs(p_local[:, 1] / g.b) ** g.n) < 1.0

    over = np.nonzero(tilt > fill_tilt_deg)[0]
    i0 = int(over[0]) if over.size else n
    outside_tilts = tilt[~inside]
    return PlanEvaluation(
        collision_free=first is None,
        first_collision_index=first,
        pour_success=bool(inside[i0:].all()) if i0 < n else True,
        i0=i0,
        max_tilt_outside_deg=float(outside_tilts.max()) if outside_tilts.size else 0.0,
        per_waypoint_tilt=[float(t) for t in tilt],
    )
