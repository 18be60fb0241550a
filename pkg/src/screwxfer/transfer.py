"""Guiding-pose transfer between task instances via motion-transfer frames.

Three stages: express the demonstrated guiding poses as the primary frame's
motion relative to the passive frame, re-anchor that relative motion at the
new instance's passive frame, then peel the grasp and frame offsets back off
to recover end-effector guiding poses.  With ``a_b`` denoting the pose of
frame b expressed in frame a (``a^-1 * b`` of world poses), the stages are

    rel[i] = (sb_sf)^-1 * sb_e[i] * e_pb * pb_pf
    new_pf[i] = w_sf_new * rel[i]
    new_e[i] = new_pf[i] * (e_pb_new * pb_pf_new)^-1

where e = end effector, pb/sb = primary/passive base, pf/sf = primary/passive
motion-transfer frame.  The baseline skips the frames entirely and replays
the end-effector track relative to the new passive base.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frames import DemoAssignment, MotionTransferFrame, new_instance_frames
from .se3 import Pose
from .segmentation import FRAME_PASSIVE, FRAME_TRANSFER, FRAME_WORLD, GuidingPoses
from .task import TaskInstance


@dataclass(frozen=True, eq=False)
class RelativeGuidingPoses:
    """Primary-frame poses relative to the passive frame, one per guiding pose."""

    poses: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))

    def __len__(self) -> int:
        return len(self.poses)


def relativize(
    guides_passive: GuidingPoses, g_sb_sf: Pose, g_e_pb: Pose, g_pb_pf: Pose
) -> RelativeGuidingPoses:
    """Stage one: demo guiding poses (in the passive base frame) to frame-relative poses."""
    if guides_passive.frame != FRAME_PASSIVE:
        raise ValueError(f"expected passive-base guiding poses, got {guides_passive.frame!r}")
    head = g_sb_sf.inverse()
    tail = g_e_pb.compose(g_pb_pf)
    return RelativeGuidingPoses(
        tuple(head.compose(p).compose(tail) for p in guides_passive.poses)
    )


def instantiate(rel: RelativeGuidingPoses, g_w_sf_new: Pose) -> list[Pose]:
    """Stage two: world-frame track of the new primary frame."""
    return [g_w_sf_new.compose(p) for p in rel.poses]


def to_end_effector(track: list[Pose], g_e_pb_new: Pose, g_pb_pf_new: Pose) -> GuidingPoses:
    """Stage three: world-frame end-effector guiding poses for the new instance."""
    inv_tail = g_e_pb_new.compose(g_pb_pf_new).inverse()
    return GuidingPoses(tuple(p.compose(inv_tail) for p in track), FRAME_WORLD)


def baseline_transfer(guides_passive: GuidingPoses, g_w_sb_new: Pose) -> GuidingPoses:
    """Replay the end-effector track relative to the new passive base, ignoring geometry."""
    if guides_passive.frame != FRAME_PASSIVE:
        raise ValueError(f"expected passive-base guiding poses, got {guides_passive.frame!r}")
    return GuidingPoses(
        tuple(g_w_sb_new.compose(p) for p in guides_passive.poses),
        FRAME_WORLD,
        guides_passive.source_indices,
    )


def transfer_guiding_poses(
    demo_assignment: DemoAssignment,
    demo_grasp: Pose,
    t_n: TaskInstance,
    new_frames: tuple[MotionTransferFrame, MotionTransferFrame] | None = None,
) -> tuple[GuidingPoses, RelativeGuidingPoses, list[Pose], tuple]:
    """Run all three stages against a new task instance.

    ``new_frames`` overrides the geometric frame assignment (used when the new
    instance is the demonstration's own, where the demo-derived frames are the
    exact critical locations).  Returns (new guiding poses, stage-one relative
    poses, stage-two track, frames used).
    """
    if new_frames is None:
        new_frames = new_instance_frames(t_n)
    pf_new, sf_new = new_frames
    da = demo_assignment
    rel = relativize(da.guides_passive, da.passive_frame.local, demo_grasp, da.primary_frame.local)
    track = instantiate(rel, sf_new.world)
    guides_new = to_end_effector(track, t_n.grasp, pf_new.local)
    return guides_new, rel, track, new_frames


def transfer_report(
    demo_assignment: DemoAssignment,
    t_n: TaskInstance,
    guides_new: GuidingPoses,
    rel: RelativeGuidingPoses,
    track: list[Pose],
    new_frames: tuple,
) -> dict:
    """JSON-ready record of every stage of a transfer."""
    pf_new, sf_new = new_frames
    return {
        "instance": t_n.to_json_dict(),
        "demo_frames": {
            "primary": demo_assignment.primary_frame.to_json_dict(),
            "passive": demo_assignment.passive_frame.to_json_dict(),
        },
        "new_frames": {"primary": pf_new.to_json_dict(), "passive": sf_new.to_json_dict()},
        "demo_guiding_poses": demo_assignment.guides_passive.to_json_dict(),
        "relative_poses": {
            "frame": FRAME_TRANSFER,
            "poses": [p.to_json_dict() for p in rel.poses],
        },
        "new_frame_track": [p.to_json_dict() for p in track],
        "new_guiding_poses": guides_new.to_json_dict(),
    }
