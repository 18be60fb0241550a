"""End-to-end orchestration: transfer guiding poses, plan, and evaluate.

Plans are staged in two parts: a free-space move from a seed configuration to
the first guiding pose (setup, not part of the task) and the guided portion
through all guiding poses.  Only the guided portion is returned and judged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arm import (
    DEFAULT_SEED_CONFIG,
    ArmModel,
    PlanningError,
    PlanResult,
    plan_between,
    plan_through_guiding_poses,
)
from .evaluation import DEFAULT_FILL_TILT_DEG, PlanEvaluation, evaluate
from .frames import DemoAssignment, assign_demo_frames
from .segmentation import DEFAULT_SEG_TOL, GuidingPoses
from .task import Demonstration, TaskInstance
from .transfer import baseline_transfer, transfer_guiding_poses, transfer_report


@dataclass(frozen=True, eq=False)
class PipelineResult:
    guides_new: GuidingPoses
    plan: PlanResult
    evaluation: PlanEvaluation
    report: dict | None


def plan_guided(
    arm: ArmModel, guides: GuidingPoses, step: float, seed_config: np.ndarray | None = None
) -> PlanResult:
    """Stage to the first guiding pose, then plan through all of them.

    The default seeds swing the base joint towards the first guiding pose so
    the staging sweep starts roughly facing the task; a fixed ladder of
    alternative postures is tried before giving up, so failure means none of
    them could track the plan.
    """
    if seed_config is not None:
        seeds = [np.asarray(seed_config, float)]
    else:
        bearing = float(np.arctan2(guides.poses[0].t[1], guides.poses[0].t[0]))
        seeds = []
        for flip in (1.0, -1.0):
            for db in (0.0, 0.7, -0.7):
                s = DEFAULT_SEED_CONFIG.copy()
                s[0] = bearing + db
                s[1:] *= flip
                seeds.append(s)
    last: PlanningError | None = None
    for seed in seeds:
        try:
            staging = plan_between(arm, seed, guides.poses[0], step)
            return plan_through_guiding_poses(arm, staging.path.configs[-1], guides, step)
        except PlanningError as e:
            last = e
    raise last


def run_transfer(
    demo_assignment: DemoAssignment,
    demo_grasp,
    arm: ArmModel,
    t_n: TaskInstance,
    step: float,
    fill_tilt_deg: float = DEFAULT_FILL_TILT_DEG,
    baseline: bool = False,
    seed_config: np.ndarray | None = None,
    with_report: bool = True,
) -> PipelineResult:
    """Transfer the demonstration to ``t_n``, plan it, and evaluate the plan.

    ``baseline=True`` replays the demonstration relative to the new passive
    base instead of using motion-transfer frames.
    """
    report = None
    if baseline:
        guides_new = baseline_transfer(demo_assignment.guides_passive, t_n.passive_base)
    else:
        guides_new, rel, track, frames_used = transfer_guiding_poses(
            demo_assignment, demo_grasp, t_n
        )
        if with_report:
            report = transfer_report(demo_assignment, t_n, guides_new, rel, track, frames_used)
    plan = plan_guided(arm, guides_new, step, seed_config)
    ev = evaluate(plan, arm, t_n, fill_tilt_deg)
    return PipelineResult(guides_new, plan, ev, report)


def prepare_demo(demo: Demonstration, arm: ArmModel, seg_tol: float = DEFAULT_SEG_TOL) -> DemoAssignment:
    """Segment a demonstration and assign its motion-transfer frames once."""
    return assign_demo_frames(demo, arm, seg_tol)
