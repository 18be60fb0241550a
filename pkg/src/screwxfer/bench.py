"""Monte-Carlo comparison of frame-based transfer against the baseline.

Task instances are sampled per category cell (girth x height for both
containers), planned with both methods, evaluated, and aggregated into a
4 x 4 report of collision-free rates and tilt-outside ranges.  Instances
where either planner fails are skipped and accounted, never fatal.

Determinism: sampling is seeded, planning is pure, and results are reduced
in instance order, so reports are bit-identical across repeated runs and
across worker counts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .arm import ArmModel, PlanningError
from .demo import canonical_grasp
from .frames import DemoAssignment
from .geometry import ContainerGeom
from .pipeline import prepare_demo, run_transfer
from .se3 import Pose, Rotation
from .task import Demonstration, TaskInstance

WORKERS_ENV = "SCREWXFER_THREADS"

# One pour-shape exponent per instance, cycled in this order.
N_VALUES = (0.5, 0.7, 1.0, 1.5, 2.0, 2.5, 4.0, 5.0, 7.0, 8.0)

# Category bounds in meters: primary girth splits at 3.25 cm / height at 10 cm,
# passive girth at 8 cm / height at 5.5 cm; upper bounds 12 cm and 20 cm.
PRIMARY_AB = {"Thin": (0.015, 0.0325), "Fat": (0.0325, 0.12)}
PRIMARY_H = {"Short": (0.04, 0.10), "Tall": (0.10, 0.20)}
PASSIVE_AB = {"Thin": (0.03, 0.08), "Fat": (0.08, 0.12)}
PASSIVE_H = {"Short": (0.02, 0.055), "Tall": (0.055, 0.20)}

GIRTHS = ("Fat", "Thin")
HEIGHTS = ("Tall", "Short")


@dataclass(frozen=True)
class CategorySpec:
    role: str    # "primary" | "passive"
    girth: str   # "Fat" | "Thin"
    height: str  # "Tall" | "Short"

    def __post_init__(self):
        if self.role not in ("primary", "passive"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.girth not in GIRTHS or self.height not in HEIGHTS:
            raise ValueError(f"unknown category {self.girth} {self.height}")

    @property
    def name(self) -> str:
        return f"{self.girth} {self.height}"

    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        if self.role == "primary":
            return PRIMARY_AB[self.girth], PRIMARY_H[self.height]
        return PASSIVE_AB[self.girth], PASSIVE_H[self.height]


def all_cells() -> list[tuple[CategorySpec, CategorySpec]]:
    """The 4 x 4 grid: passive category (rows) x primary category (columns)."""
    cells = []
    for pg in GIRTHS:
        for ph in HEIGHTS:
            for rg in GIRTHS:
                for rh in HEIGHTS:
                    cells.append(
                        (CategorySpec("primary", rg, rh), CategorySpec("passive", pg, ph))
                    )
    return cells


def cell_id(primary: CategorySpec, passive: CategorySpec) -> str:
    return f"passive={passive.girth}{passive.height}|primary={primary.girth}{primary.height}"


@dataclass(frozen=True)
class BenchConfig:
    per_cell: int = 50
    seed: int = 1
    step: float = 0.02
    fill_tilt_deg: float = 60.0
    seg_tol: float = 5e-3
    table_x: tuple[float, float] = (0.30, 0.90)
    table_y: tuple[float, float] = (-0.20, 0.20)
    footprint_margin: float = 0.02
    workers: int | None = None
    trace_dir: str | None = None

    def resolve_workers(self) -> int:
        w = self.workers
        if w is None:
            w = min(4, os.cpu_count() or 1)
        cap = os.environ.get(WORKERS_ENV)
        if cap:
            w = min(w, max(1, int(cap)))
        return max(1, w)

    def echo(self) -> dict:
        return {
            "per_cell": self.per_cell,
            "seed": self.seed,
            "step": self.step,
            "fill_tilt_deg": self.fill_tilt_deg,
            "seg_tol": self.seg_tol,
            "table_x": list(self.table_x),
            "table_y": list(self.table_y),
            "footprint_margin": self.footprint_margin,
            "n_values": list(N_VALUES),
        }


def sample_instances(
    primary_spec: CategorySpec,
    passive_spec: CategorySpec,
    count: int,
    seed: int,
    config: BenchConfig = BenchConfig(),
) -> list[TaskInstance]:
    """Seeded task instances for one category cell.

    ``count`` must divide evenly over the 10 cycled shape exponents.  Semi-axes
    and heights are uniform within the category bounds; base positions are
    uniform over the table region, redrawn until the container footprints
    (circumscribed circles) are disjoint by the configured margin.
    """
    if count % len(N_VALUES) != 0:
        raise ValueError(f"count must be divisible by {len(N_VALUES)}")
    (r_ab, r_h), (s_ab, s_h) = primary_spec.bounds(), passive_spec.bounds()
    for lo, hi in (r_ab, r_h, s_ab, s_h):
        if not lo < hi:
            raise ValueError("infeasible category bounds")
    rng = np.random.default_rng(seed)
    ez = np.array([0.0, 0.0, 1.0])
    out = []
    for i in range(count):
        n = N_VALUES[i % len(N_VALUES)]
        pa, pb = rng.uniform(*r_ab), rng.uniform(*r_ab)
        ph = rng.uniform(*r_h)
        sa, sb = rng.uniform(*s_ab), rng.uniform(*s_ab)
        sh = rng.uniform(*s_h)
        primary = ContainerGeom(pa, pb, n, ph)
        passive = ContainerGeom(sa, sb, n, sh)
        yaw_r, yaw_s = rng.uniform(0.0, 2.0 * math.pi, 2)
        min_gap = primary.circumscribed_radius() + passive.circumscribed_radius()
        min_gap += config.footprint_margin
        for attempt in range(200):
            xr = rng.uniform(*config.table_x)
            yr = rng.uniform(*config.table_y)
            xs = rng.uniform(*config.table_x)
            ys = rng.uniform(*config.table_y)
            if math.hypot(xr - xs, yr - ys) >= min_gap:
                break
        else:
            raise ValueError("could not place disjoint footprints; infeasible bounds")
        out.append(
            TaskInstance(
                primary_base=Pose(Rotation.from_axis_angle(ez, yaw_r), [xr, yr, 0.0]),
                primary=primary,
                passive_base=Pose(Rotation.from_axis_angle(ez, yaw_s), [xs, ys, 0.0]),
                passive=passive,
                grasp=canonical_grasp(primary),
            )
        )
    return out


def sample_grid(config: BenchConfig) -> list[tuple[str, int, TaskInstance]]:
    """Instances for all 16 cells, labeled (cell_id, index, instance).

    Each cell draws from an independent seed sequence derived from the run
    seed and the cell position, so cells are decoupled.
    """
    labeled = []
    for ci, (pspec, sspec) in enumerate(all_cells()):
        cid = cell_id(pspec, sspec)
        seed = np.random.SeedSequence([config.seed, ci]).generate_state(1)[0]
        for k, inst in enumerate(
            sample_instances(pspec, sspec, config.per_cell, int(seed), config)
        ):
            labeled.append((cid, k, inst))
    return labeled


# Worker context installed before forking; inherited by child processes.
_CTX: dict = {}


def _eval_instance(job: tuple[str, int, TaskInstance]) -> dict:
    cid, idx, inst = job
    da: DemoAssignment = _CTX["assignment"]
    arm: ArmModel = _CTX["arm"]
    cfg: BenchConfig = _CTX["config"]
    grasp = _CTX["demo_grasp"]
    rec: dict = {"cell": cid, "index": idx}
    try:
        rc = run_transfer(da, grasp, arm, inst, cfg.step, cfg.fill_tilt_deg, with_report=False)
        rb = run_transfer(da, grasp, arm, inst, cfg.step, cfg.fill_tilt_deg, baseline=True)
    except PlanningError as e:
        rec["skipped"] = type(e).__name__
        return rec
    rec.update(
        cf_cframe=rc.evaluation.collision_free,
        cf_baseline=rb.evaluation.collision_free,
        tilt_cframe=rc.evaluation.max_tilt_outside_deg,
        tilt_baseline=rb.evaluation.max_tilt_outside_deg,
        pour_cframe=rc.evaluation.pour_success,
        pour_baseline=rb.evaluation.pour_success,
    )
    return rec


@dataclass(frozen=True, eq=False)
class BenchReport:
    cells: dict
    seed: int
    config: dict
    records: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"seed": self.seed, "config": self.config, "cells": self.cells}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        cols = (
            "cell,n_processed,cf_cframe_pct,cf_baseline_pct,"
            "tilt_min_cframe,tilt_max_cframe,tilt_min_baseline,tilt_max_baseline"
        )
        lines = [cols]
        for cid in sorted(self.cells):
            c = self.cells[cid]
            vals = [
                cid,
                str(c["n_processed"]),
                f"{c['cf_cframe_pct']:.10g}",
                f"{c['cf_baseline_pct']:.10g}",
            ]
            for key in ("tilt_cframe_range", "tilt_baseline_range"):
                r = c[key]
                vals += ["", ""] if r is None else [f"{r[0]:.10g}", f"{r[1]:.10g}"]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def _aggregate(records: list[dict], config: BenchConfig, seed: int) -> BenchReport:
    records = sorted(records, key=lambda r: (r["cell"], r["index"]))
    cells: dict = {}
    for r in records:
        c = cells.setdefault(
            r["cell"],
            {
                "n_sampled": 0,
                "n_processed": 0,
                "n_skipped": 0,
                "skip_reasons": {},
                "cf_cframe": 0,
                "cf_baseline": 0,
                "pour_cframe": 0,
                "pour_baseline": 0,
                "tilt_cframe": [],
                "tilt_baseline": [],
            },
        )
        c["n_sampled"] += 1
        if "skipped" in r:
            c["n_skipped"] += 1
            c["skip_reasons"][r["skipped"]] = c["skip_reasons"].get(r["skipped"], 0) + 1
            continue
        c["n_processed"] += 1
        for m in ("cframe", "baseline"):
            if r[f"cf_{m}"]:
                c[f"cf_{m}"] += 1
                c[f"tilt_{m}"].append(r[f"tilt_{m}"])
            if r[f"pour_{m}"]:
                c[f"pour_{m}"] += 1
    for c in cells.values():
        np_ = c["n_processed"]
        for m in ("cframe", "baseline"):
            c[f"cf_{m}_pct"] = 100.0 * c.pop(f"cf_{m}") / np_ if np_ else 0.0
            c[f"pour_{m}_pct"] = 100.0 * c.pop(f"pour_{m}") / np_ if np_ else 0.0
            tilts = c.pop(f"tilt_{m}")
            c[f"tilt_{m}_range"] = [min(tilts), max(tilts)] if tilts else None
    return BenchReport(cells, seed, config.echo(), records)


def run_comparison(
    demo: Demonstration,
    instances: list[tuple[str, int, TaskInstance]],
    arm: ArmModel,
    config: BenchConfig = BenchConfig(),
) -> BenchReport:
    """Plan and evaluate every labeled instance with both methods.

    Instances where either planner fails (joint limits, singularities,
    non-convergence) are skipped with the reason recorded per cell.
    """
    global _CTX
    assignment = prepare_demo(demo, arm, config.seg_tol)
    _CTX = {
        "assignment": assignment,
        "arm": arm,
        "config": config,
        "demo_grasp": demo.task_instance.grasp,
    }
    workers = config.resolve_workers()
    if workers > 1 and hasattr(os, "fork") and instances:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            records = pool.map(_eval_instance, instances, chunksize=4)
    else:
        records = [_eval_instance(job) for job in instances]
    if config.trace_dir:
        os.makedirs(config.trace_dir, exist_ok=True)
        for r in records:
            name = f"{r['cell'].replace('|', '_').replace('=', '-')}_{r['index']:03d}.json"
            with open(os.path.join(config.trace_dir, name), "w") as f:
                json.dump(r, f, indent=2, sort_keys=True, default=float)
    return _aggregate(records, config, config.seed)


def run_grid(demo: Demonstration, arm: ArmModel, config: BenchConfig) -> BenchReport:
    """Sample the full 4 x 4 grid and run the comparison."""
    return run_comparison(demo, sample_grid(config), arm, config)


def rerun_with_seed(demo: Demonstration, arm: ArmModel, config: BenchConfig, seed: int) -> BenchReport:
    return run_grid(demo, arm, replace(config, seed=seed))
