"""Decompose a demonstration into guiding poses: endpoints of constant-screw segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, fk_batch
from .se3 import Pose, pose_distance, sclerp
from .task import Demonstration, TaskInstance  # noqa: F401  (re-exported)

DEFAULT_SEG_TOL = 5e-3  # combined rad + m; absorbs encoder noise

FRAME_WORLD = "world"
FRAME_PASSIVE = "passive_base"
FRAME_TRANSFER = "transfer_relative"


@dataclass(frozen=True, eq=False)
class GuidingPoses:
    """Ordered pose sequence with the frame it is expressed in.

    ``source_indices`` are 1-based sample indices into the originating pose
    sequence (first is 1, last is the sample count); None for sequences not
    derived from a segmentation.
    """

    poses: tuple
    frame: str = FRAME_WORLD
    source_indices: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if self.source_indices is not None:
            idx = tuple(int(i) for i in self.source_indices)
            if len(idx) != len(self.poses):
                raise ValueError("source_indices length must match poses")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("source_indices must be strictly increasing")
            object.__setattr__(self, "source_indices", idx)

    def __len__(self) -> int:
        return len(self.poses)

    def to_json_dict(self) -> dict:
        return {
            "frame": self.frame,
            "source_indices": list(self.source_indices) if self.source_indices else None,
            "poses": [p.to_json_dict() for p in self.poses],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GuidingPoses":
        idx = d.get("source_indices")
        return cls(
            tuple(Pose.from_json_dict(p) for p in d["poses"]),
            d.get("frame", FRAME_WORLD),
            tuple(idx) if idx else None,
        )


def fk_path(arm: ArmModel, joints: np.ndarray) -> list[Pose]:
    """Per-sample end-effector poses of a joint sequence."""
    joints = np.asarray(joints, dtype=float)
    if joints.ndim != 2 or joints.shape[0] == 0:
        raise ValueError("joint sequence must be non-empty with shape (p, l)")
    return [Pose.from_matrix(m) for m in fk_batch(arm, joints)]


def _fits_one_screw(poses, s: int, e: int, seg_tol: float) -> bool:
    for j in range(s + 1, e):
        ref = sclerp(poses[s], poses[e], (j - s) / (e - s))
        if pose_distance(poses[j], ref) >= seg_tol:
            return False
    return True


def segment_constant_screws(poses, seg_tol: float = DEFAULT_SEG_TOL) -> GuidingPoses:
    """Greedy maximal decomposition of a pose path into constant-screw segments.

    From anchor s the candidate end e is extended while every intermediate
    sample stays within ``seg_tol`` of the screw interpolant between the
    anchor and the candidate; the first and last poses are always emitted.
    Interpolating between the returned guiding poses at the original sample
    parameters therefore reproduces the path within ``seg_tol``.
    """
    if seg_tol <= 0:
        raise ValueError("seg_tol must be positive")
    poses = list(poses)
    m = len(poses)
    if m < 2:
        raise ValueError("need at least two poses to segment")
    indices = [0]
    s = 0
    while s < m - 1:
        e = s + 1
        while e + 1 < m and _fits_one_screw(poses, s, e + 1, seg_tol):
            e += 1
        indices.append(e)
        s = e
    return GuidingPoses(
        tuple(poses[i] for i in indices),
        FRAME_WORLD,
        tuple(i + 1 for i in indices),
    )


def reconstruct_path(guides: GuidingPoses, samples: int = 200) -> list[Pose]:
    """Sample the screw interpolant through consecutive guiding poses.

    Every guiding pose appears exactly in the output; ``samples`` is the
    approximate total count, distributed evenly across segments.
    """
    poses = guides.poses
    if len(poses) < 2:
        return list(poses)
    nseg = len(poses) - 1
    per = max(1, round((samples - 1) / nseg))
    out = [poses[0]]
    for i in range(nseg):
        for j in range(1, per + 1):
            out.append(sclerp(poses[i], poses[i + 1], j / per))
    return out


def relativize_to_passive(guides: GuidingPoses, g_passive_base: Pose) -> GuidingPoses:
    """Re-express world-frame guiding poses in the passive object's base frame."""
    if guides.frame != FRAME_WORLD:
        raise ValueError(f"expected world-frame guiding poses, got {guides.frame!r}")
    inv = g_passive_base.inverse()
    return GuidingPoses(
        tuple(inv.compose(p) for p in guides.poses), FRAME_PASSIVE, guides.source_indices
    )


def to_world(guides: GuidingPoses, g_passive_base: Pose) -> GuidingPoses:
    """Inverse of relativize_to_passive."""
    if guides.frame != FRAME_PASSIVE:
        raise ValueError(f"expected passive-base guiding poses, got {guides.frame!r}")
    return GuidingPoses(
        tuple(g_passive_base.compose(p) for p in guides.poses), FRAME_WORLD, guides.source_indices
    )
