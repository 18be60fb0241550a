"""Serial-arm kinematics and the screw-interpolating joint-space planner.

Forward kinematics is a product of exponentials over revolute joint screws
given in the home configuration, base frame, as Pluecker (dir, moment) pairs.
The Jacobian is spatial: column i is the instantaneous twist of joint i
expressed in the base frame, so its linear part at theta = 0 equals the
joint's Pluecker moment.

The planner tracks the screw-linear interpolant between the current pose and
a goal with damped pseudo-inverse corrections.  It fails loudly instead of
clamping: joint-limit violations, singular stalls and non-convergence raise
typed exceptions carrying waypoint (and segment) indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se3 import Pose, Rotation, log_to_screw, pose_distance, relative, skew

TRACK_TOL = 1e-4   # combined rad + m, intermediate waypoints
FINAL_TOL = 1e-6   # combined rad + m, segment endpoint
DEFAULT_STEP = 0.01
MAX_ITERS = 50     # inner corrections per waypoint
MAX_JOINT_STEP = 0.3  # rad, between consecutive path configs
DAMPING_SCALE = 1e-4  # lambda = DAMPING_SCALE * smallest singular value


class PlanningError(Exception):
    """Base class for planner failures."""

    def __init__(self, msg: str, waypoint: int | None = None, segment: int | None = None):
        super().__init__(msg)
        self.waypoint = waypoint
        self.segment = segment


class JointLimitViolation(PlanningError):
    def __init__(self, joint: int, waypoint: int, segment: int | None = None):
        super().__init__(f"joint {joint} out of limits at waypoint {waypoint}", waypoint, segment)
        self.joint = joint


class SingularityStall(PlanningError):
    pass


class NotConverged(PlanningError):
    pass


@dataclass(frozen=True, eq=False)
class ArmModel:
    """Kinematic description: joint screws at home, home pose, joint limits."""

    axes: np.ndarray        # (l, 6): unit direction, Pluecker moment
    home_pose: Pose
    limits: np.ndarray      # (l, 2) radians, min < max

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=float).copy()
        limits = np.asarray(self.limits, dtype=float).copy()
        if axes.ndim != 2 or axes.shape[1] != 6:
            raise ValueError("axes must have shape (l, 6)")
        if limits.shape != (axes.shape[0], 2):
            raise ValueError("limits must have shape (l, 2)")
        norms = np.linalg.norm(axes[:, :3], axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("joint axis directions must be unit vectors")
        axes[:, :3] /= norms[:, None]
        if np.any(limits[:, 0] >= limits[:, 1]):
            raise ValueError("joint limits must satisfy min < max")
        axes.setflags(write=False)
        limits.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "limits", limits)
        # Precompute Rodrigues operators per joint for the FK hot path.
        K = np.stack([skew(w) for w in axes[:, :3]])
        v = axes[:, 3:]
        object.__setattr__(self, "_K", K)
        object.__setattr__(self, "_K2", K @ K)
        object.__setattr__(self, "_Kv", np.einsum("nij,nj->ni", K, v))
        object.__setattr__(self, "_K2v", np.einsum("nij,nj->ni", K @ K, v))
        object.__setattr__(self, "_eye4", np.eye(4))

    @property
    def l(self) -> int:
        return self.axes.shape[0]

    def within_limits(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.limits[:, 0]) and np.all(theta <= self.limits[:, 1]))

    def to_json_dict(self) -> dict:
        return {
            "l": self.l,
            "home_pose": self.home_pose.to_json_dict(),
            "axes": [
                {"dir": [float(x) for x in a[:3]], "moment": [float(x) for x in a[3:]]}
                for a in self.axes
            ],
            "limits": [[float(lo), float(hi)] for lo, hi in self.limits],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ArmModel":
        axes = np.array([list(a["dir"]) + list(a["moment"]) for a in d["axes"]], dtype=float)
        arm = cls(axes, Pose.from_json_dict(d["home_pose"]), np.asarray(d["limits"], dtype=float))
        if "l" in d and int(d["l"]) != arm.l:
            raise ValueError("declared joint count does not match axes")
        return arm


@dataclass(frozen=True, eq=False)
class JointPath:
    """Ordered joint configurations, shape (N, l)."""

    configs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.configs, dtype=float).copy()
        if c.ndim != 2:
            raise ValueError("configs must have shape (N, l)")
        c.setflags(write=False)
        object.__setattr__(self, "configs", c)

    def __len__(self) -> int:
        return self.configs.shape[0]


@dataclass(frozen=True, eq=False)
class PlanResult:
    """Planner output: the path, its FK poses, and guiding-pose arrival indices."""

    path: JointPath
    poses: list[Pose]
    guide_indices: list[int] = field(default_factory=list)


def _joint_exps(arm: ArmModel, theta: np.ndarray) -> np.ndarray:
    """Exponentials of all joint twists at the given angles, shape (l, 4, 4)."""
    s, c = np.sin(theta), np.cos(theta)
    E = np.broadcast_to(arm._eye4, (arm.l, 4, 4)).copy()
    E[:, :3, :3] += s[:, None, None] * arm._K + (1.0 - c)[:, None, None] * arm._K2
    E[:, :3, 3] = theta[:, None] * arm.axes[:, 3:] + (1.0 - c)[:, None] * arm._Kv
    E[:, :3, 3] += (theta - s)[:, None] * arm._K2v
    return E


def _prefix_chain(arm: ArmModel, theta: np.ndarray) -> np.ndarray:
    """Prefix products [I, E1, E1 E2, ...], shape (l + 1, 4, 4)."""
    E = _joint_exps(arm, theta)
    P = np.empty((arm.l + 1, 4, 4))
    P[0] = arm._eye4
    for i in range(arm.l):
        P[i + 1] = P[i] @ E[i]
    return P


def fk_matrix(arm: ArmModel, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arm.l,):
        raise ValueError(f"expected {arm.l} joint angles, got shape {theta.shape}")
    return _prefix_chain(arm, theta)[-1] @ arm.home_pose.matrix()


def forward_kinematics(arm: ArmModel, theta: np.ndarray) -> Pose:
    """End-effector pose in the base frame (product of exponentials)."""
    return Pose.from_matrix(fk_matrix(arm, theta))


def fk_batch(arm: ArmModel, thetas: np.ndarray) -> np.ndarray:
    """FK as matrices for a batch of configurations, shape (N, 4, 4)."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != arm.l:
        raise ValueError(f"expected shape (N, {arm.l})")
    n = thetas.shape[0]
    T = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
    E = np.empty((n, 4, 4))
    for i in range(arm.l):
        th = thetas[:, i]
        s, c = np.sin(th), np.cos(th)
        K, K2, v = arm._K[i], arm._K2[i], arm.axes[i, 3:]
        E[:] = np.eye(4)
        E[:, :3, :3] += s[:, None, None] * K + (1.0 - c)[:, None, None] * K2
        E[:, :3, 3] = th[:, None] * v + (1.0 - c)[:, None] * (K @ v) + (th - s)[:, None] * (K2 @ v)
        T = T @ E
    return T @ arm.home_pose.matrix()


def _fk_and_jacobian(arm: ArmModel, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One chain pass returning the FK matrix and the 6xl spatial Jacobian."""
    P = _prefix_chain(arm, theta)
    R, p = P[:-1, :3, :3], P[:-1, :3, 3]
    Rw = (R @ arm.axes[:, :3, None])[..., 0]
    Rv = (R @ arm.axes[:, 3:, None])[..., 0]
    J = np.empty((6, arm.l))
    J[:3] = Rw.T
    # cross(p, Rw) unrolled; np.cross has high fixed overhead at this size
    J[3] = p[:, 1] * Rw[:, 2] - p[:, 2] * Rw[:, 1] + Rv[:, 0]
    J[4] = p[:, 2] * Rw[:, 0] - p[:, 0] * Rw[:, 2] + Rv[:, 1]
    J[5] = p[:, 0] * Rw[:, 1] - p[:, 1] * Rw[:, 0] + Rv[:, 2]
    return P[-1] @ arm.home_pose.matrix(), J


def jacobian(arm: ArmModel, theta: np.ndarray) -> np.ndarray:
    """Spatial Jacobian: columns are the joint twists at ``theta`` (6 x l)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arm.l,):
        raise ValueError(f"expected {arm.l} joint angles, got shape {theta.shape}")
    return _fk_and_jacobian(arm, theta)[1]


NULL_GAIN = 0.02  # per-iteration pull towards mid-limits in the task null space
CENTERING_GATE = 5e-3  # centering only while coarse; its second-order task error
                       # would otherwise stall convergence near the tolerance


def _damped_step(
    J: np.ndarray, twist: np.ndarray, theta: np.ndarray, mid: np.ndarray, center: bool
) -> tuple[np.ndarray, float, float]:
    """Damped least-squares step, optionally with a null-space pull to mid-limits.

    The pull keeps the redundant joint away from its range ends; its residual
    task-space leakage through the damping is why it is disabled (``center``
    False) during fine convergence.
    """
    U, S, Vt = np.linalg.svd(J, full_matrices=False)
    smin, smax = float(S[-1]), float(S[0])
    lam = DAMPING_SCALE * smin
    valid = S > 1e-12 * max(smax, 1.0)
    gains = np.where(valid, S / (S * S + lam * lam), 0.0)
    dtheta = Vt.T @ (gains * (U.T @ twist))
    if center:
        centering = NULL_GAIN * (mid - theta)
        dtheta += centering - Vt.T @ (np.where(valid, gains * S, 0.0) * (Vt @ centering))
    return dtheta, smin, smax


def _pose_error(current_mat: np.ndarray, target_mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Spatial error twist log(target * current^-1) and its combined magnitude."""
    Rc, pc = current_mat[:3, :3], current_mat[:3, 3]
    Rt, pt = target_mat[:3, :3], target_mat[:3, 3]
    R = Rt @ Rc.T
    p = pt - R @ pc
    vee = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = float(np.linalg.norm(vee))
    c = 0.5 * (float(np.trace(R)) - 1.0)
    angle = math.atan2(s, c)
    err = angle + float(np.linalg.norm(pt - pc))
    if angle < 1e-9:
        return np.concatenate([np.zeros(3), p]), err
    if angle > 3.1:
        # vee loses the axis near pi; fall back to quaternion extraction.
        axis, angle = Rotation.from_matrix(R).axis_angle()
    else:
        axis = vee / s
    K = skew(axis)
    half = 0.5 * angle
    cot = math.cos(half) / math.sin(half)
    Vinv = np.eye(3) - half * K + (1.0 - half * cot) * (K @ K)
    return np.concatenate([axis * angle, Vinv @ p]), err


def _track_waypoint(
    arm: ArmModel, theta: np.ndarray, target_mat: np.ndarray, tol: float, waypoint: int
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate damped corrections until the pose error drops below tol."""
    best = math.inf
    stagnant = 0
    mid = arm.limits.mean(axis=1)
    for _ in range(MAX_ITERS):
        T, J = _fk_and_jacobian(arm, theta)
        xi, err = _pose_error(T, target_mat)
        if err < tol:
            return theta, T
        if err < best - 1e-12:
            best = err
            stagnant = 0
        else:
            stagnant += 1
        dtheta, smin, smax = _damped_step(J, xi, theta, mid, err > CENTERING_GATE)
        if stagnant >= 8:
            if smin < 1e-8 * max(smax, 1.0):
                raise SingularityStall(
                    f"tracking error stalled at {best:.3g} near a singularity", waypoint
                )
            raise NotConverged(f"tracking error stalled at {best:.3g}", waypoint)
        peak = float(np.max(np.abs(dtheta)))
        if peak > MAX_JOINT_STEP:
            dtheta *= MAX_JOINT_STEP / peak
        theta = theta + dtheta
    raise NotConverged(f"waypoint error {best:.3g} above {tol:.3g} after {MAX_ITERS} iters", waypoint)


def _screw_targets(g0_mat: np.ndarray, screw, n_way: int) -> np.ndarray:
    """Waypoint target matrices g0 * exp(tau_k * screw) for tau_k = k / n_way."""
    taus = np.arange(1, n_way + 1) / n_way
    E = np.broadcast_to(np.eye(4), (n_way, 4, 4)).copy()
    if screw.is_translation:
        E[:, :3, 3] = taus[:, None] * (screw.d * screw.axis_dir)
    else:
        K = skew(screw.axis_dir)
        K2 = K @ K
        v = screw.moment + screw.pitch * screw.axis_dir
        ang = taus * screw.angle
        s, c = np.sin(ang), np.cos(ang)
        E[:, :3, :3] += s[:, None, None] * K + (1.0 - c)[:, None, None] * K2
        E[:, :3, 3] = ang[:, None] * v + (1.0 - c)[:, None] * (K @ v) + (ang - s)[:, None] * (K2 @ v)
    return g0_mat @ E


def plan_between(
    arm: ArmModel,
    theta_start: np.ndarray,
    g_goal: Pose,
    step: float = DEFAULT_STEP,
    _index_offset: int = 0,
) -> PlanResult:
    """Joint path whose FK traces the constant screw from FK(theta_start) to g_goal.

    Waypoints sit on the screw interpolant at parameter increments of ``step``.
    Raises JointLimitViolation, SingularityStall or NotConverged; a goal equal
    to the start pose yields a single-waypoint path.
    """
    if not 0.0 < step <= 0.05:
        raise ValueError(f"step must be in (0, 0.05], got {step}")
    theta = np.asarray(theta_start, dtype=float).copy()
    if theta.shape != (arm.l,):
        raise ValueError(f"expected {arm.l} joint angles")
    g0 = forward_kinematics(arm, theta)
    configs = [theta.copy()]
    poses = [g0]
    if pose_distance(g0, g_goal) < FINAL_TOL:
        return PlanResult(JointPath(np.array(configs)), poses)
    screw = log_to_screw(relative(g0, g_goal))
    n_way = math.ceil(1.0 / step)
    targets = _screw_targets(g0.matrix(), screw, n_way)
    for k in range(1, n_way + 1):
        tol = FINAL_TOL if k == n_way else TRACK_TOL
        wp = _index_offset + k
        theta, T = _track_waypoint(arm, theta, targets[k - 1], tol, wp)
        if np.max(np.abs(theta - configs[-1])) > MAX_JOINT_STEP:
            raise NotConverged("consecutive configs exceed the max joint step", wp)
        bad = np.nonzero((theta < arm.limits[:, 0]) | (theta > arm.limits[:, 1]))[0]
        if bad.size:
            raise JointLimitViolation(int(bad[0]), wp)
        configs.append(theta.copy())
        poses.append(Pose.from_matrix(T))
    return PlanResult(JointPath(np.array(configs)), poses)


def plan_through_guiding_poses(
    arm: ArmModel, theta_start: np.ndarray, guides, step: float = DEFAULT_STEP
) -> PlanResult:
    """Concatenate plan_between over consecutive guiding poses.

    ``guides`` is a sequence of world-frame end-effector poses (a GuidingPoses
    value is accepted).  Planner errors are re-raised annotated with the
    failing segment index.
    """
    poses_in = list(getattr(guides, "poses", guides))
    if not poses_in:
        raise ValueError("guides must be non-empty")
    theta = np.asarray(theta_start, dtype=float).copy()
    configs: list[np.ndarray] = [theta.copy()]
    out_poses: list[Pose] = [forward_kinematics(arm, theta)]
    guide_indices: list[int] = []
    for seg, target in enumerate(poses_in):
        try:
            part = plan_between(arm, theta, target, step, _index_offset=len(configs) - 1)
        except PlanningError as e:
            e.segment = seg
            raise
        configs.extend(list(part.path.configs[1:]))
        out_poses.extend(part.poses[1:])
        theta = part.path.configs[-1].copy()
        guide_indices.append(len(configs) - 1)
    return PlanResult(JointPath(np.array(configs)), out_poses, guide_indices)


def default_arm() -> ArmModel:
    """Bundled redundant 7-DoF arm: shoulder at (0, 0, 0.3), 1.2 m reach."""
    sh = np.array([0.0, 0.0, 0.30])
    el = np.array([0.55, 0.0, 0.30])
    wr = np.array([1.05, 0.0, 0.30])
    ez = np.array([0.0, 0.0, 1.0])
    ey = np.array([0.0, 1.0, 0.0])
    ex = np.array([1.0, 0.0, 0.0])
    joints = [
        (np.zeros(3), ez),
        (sh, ey),
        (sh, ex),
        (el, ey),
        (el, ex),
        (wr, ey),
        (wr, ex),
    ]
    axes = np.array([np.concatenate([d, np.cross(q, d)]) for q, d in joints])
    # Full-turn ranges on every joint, as on UR-series arms.
    limits = np.array([[-6.2832, 6.2832]] * 7)
    home = Pose.from_translation([1.20, 0.0, 0.30])
    return ArmModel(axes, home, limits)


# Generic elbow-bent seed for staging plans: FK is upright near (0.71, 0, 0.40).
DEFAULT_SEED_CONFIG = np.array([0.0, -1.1, 0.0, 2.0, 0.0, -0.9, 0.0])
