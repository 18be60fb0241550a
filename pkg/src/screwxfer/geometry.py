"""Superellipse container model: rim points, normals, corners and inside tests.

A container is a rigid extrusion of its superellipse cross-section
``|x/a|^n + |y/b|^n = 1`` from z=0 (base) to z=height (rim plane), with the
base reference frame at the bottom center.  All lengths are meters
internally; JSON files carry centimeters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .se3 import TIE_EPS, Pose


class CornerUndefined(ValueError):
    """Raised when corner points are requested for a circle (n == 2, a == b)."""


@dataclass(frozen=True, eq=False)
class ContainerGeom:
    """Superellipse container: semi-axes a, b (m), exponent n, height (m)."""

    a: float
    b: float
    n: float
    height: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.height <= 0:
            raise ValueError("container dimensions must be positive")
        if self.n <= 0:
            raise ValueError("superellipse exponent must be positive")

    @classmethod
    def from_cm_dict(cls, d: dict) -> "ContainerGeom":
        """Load from the file schema {a, b, n, h} with lengths in centimeters."""
        return cls(d["a"] / 100.0, d["b"] / 100.0, float(d["n"]), d["h"] / 100.0)

    def to_cm_dict(self) -> dict:
        return {"a": self.a * 100.0, "b": self.b * 100.0, "n": self.n, "h": self.height * 100.0}

    def circumscribed_radius(self) -> float:
        """Radius of a circle containing the rim curve (in the rim plane)."""
        return math.hypot(self.a, self.b)


@dataclass(frozen=True, eq=False)
class RimPoint:
    """Point on the rim curve with its outward normal and parameter t."""

    position: np.ndarray
    outward_normal: np.ndarray
    t: float


def _signed_pow(c: float, e: float) -> float:
    if abs(c) < 1e-300:
        return 0.0
    return math.copysign(abs(c) ** e, c)


def rim_point(geom: ContainerGeom, t: float) -> RimPoint:
    """Parametric rim point at angle t (wraps mod 2*pi), in the base frame.

    x = a sgn(cos t)|cos t|^(2/n), y = b sgn(sin t)|sin t|^(2/n), z = height.
    The normal is the normalized gradient of the implicit function, extended
    to 3D with zero z component.  At parameter values where the gradient is
    singular (sharp corners for n < 2) the vanishing component is set to 0,
    which yields the symmetric outward direction.
    """
    c, s = math.cos(t), math.sin(t)
    e = 2.0 / geom.n
    x = geom.a * _signed_pow(c, e)
    y = geom.b * _signed_pow(s, e)

    # Gradient components (n/a)|x/a|^(n-1) sgn(x) evaluated parametrically.
    ge = 2.0 * (geom.n - 1.0) / geom.n
    gx = 0.0 if abs(c) < 1e-12 else math.copysign(abs(c) ** ge, c) / geom.a
    gy = 0.0 if abs(s) < 1e-12 else math.copysign(abs(s) ** ge, s) / geom.b
    g = math.hypot(gx, gy)
    normal = np.array([gx / g, gy / g, 0.0])
    return RimPoint(np.array([x, y, geom.height]), normal, t % (2.0 * math.pi))


def superellipse_value(geom: ContainerGeom, p) -> float:
    """|px/a|^n + |py/b|^n; < 1 inside, = 1 on the rim curve, > 1 outside."""
    p = np.asarray(p, dtype=float)
    return float(abs(p[0] / geom.a) ** geom.n + abs(p[1] / geom.b) ** geom.n)


def _rim_world_z(geom: ContainerGeom, pose: Pose, ts: np.ndarray) -> np.ndarray:
    """World z of rim points at parameters ts under the given pose."""
    e = 2.0 / geom.n
    c, s = np.cos(ts), np.sin(ts)
    x = geom.a * np.sign(c) * np.abs(c) ** e
    y = geom.b * np.sign(s) * np.abs(s) ** e
    row = pose.r.matrix()[2]
    return row[0] * x + row[1] * y + row[2] * geom.height + pose.t[2]


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def lowest_rim_point(geom: ContainerGeom, pose: Pose, seeds: int = 256) -> RimPoint:
    """Rim point minimizing world z under ``pose``, returned in the world frame.

    Seeded by ``seeds`` uniform parameter samples and refined by golden-section
    search around the best seed.  Ties within TIE_EPS of the minimum are broken
    by the smallest parameter t (an upright pose returns t = 0).
    """
    ts = np.linspace(0.0, 2.0 * math.pi, seeds, endpoint=False)
    zs = _rim_world_z(geom, pose, ts)
    zmin = float(zs.min())
    if float(zs.max()) - zmin < TIE_EPS:
        t_best = 0.0
    else:
        i = int(np.argmin(zs))
        lo = ts[i] - 2.0 * math.pi / seeds
        hi = ts[i] + 2.0 * math.pi / seeds
        f = lambda t: float(_rim_world_z(geom, pose, np.array([t]))[0])
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = f(x1), f(x2)
        while hi - lo > 1e-12:
            if f1 < f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = f(x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = f(x2)
        t_best = 0.5 * (lo + hi) % (2.0 * math.pi)
    local = rim_point(geom, t_best)
    return RimPoint(pose.apply(local.position), pose.r.apply(local.outward_normal), t_best)


def corner_points(geom: ContainerGeom) -> list[RimPoint]:
    """Rim corners by the parametric grid matching the shape family.

    n > 2 (rectangle-like): the four diagonal points t in {pi/4, 3pi/4, ...};
    n < 2 (diamond-like): the four axis vertices t in {0, pi/2, pi, 3pi/2};
    n == 2 with a != b: the two vertices on the major axis.
    """
    if geom.n > 2.0:
        ts = [math.pi / 4.0, 3.0 * math.pi / 4.0, 5.0 * math.pi / 4.0, 7.0 * math.pi / 4.0]
    elif geom.n < 2.0:
        ts = [0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0]
    elif geom.a != geom.b:
        ts = [0.0, math.pi] if geom.a > geom.b else [math.pi / 2.0, 3.0 * math.pi / 2.0]
    else:
        raise CornerUndefined("a circular rim has no corners")
    return [rim_point(geom, t) for t in ts]


def wall_sample_points(geom: ContainerGeom, angular: int = 128, z_step: float = 0.01) -> np.ndarray:
    """Sample grid on the extruded side wall, base-frame coordinates (K, 3).

    ``max(8, ceil(height / z_step))`` rings of ``angular`` points each, ring
    heights spanning [0, height] inclusive so the base and rim circles are
    always present.  Doubling ``angular`` and the ring count yields a strict
    superset of the coarser grid.
    """
    rows = max(8, math.ceil(geom.height / z_step))
    ts = np.linspace(0.0, 2.0 * math.pi, angular, endpoint=False)
    e = 2.0 / geom.n
    c, s = np.cos(ts), np.sin(ts)
    x = geom.a * np.sign(c) * np.abs(c) ** e
    y = geom.b * np.sign(s) * np.abs(s) ** e
    zs = np.linspace(0.0, geom.height, rows + 1)
    pts = np.empty((angular * (rows + 1), 3))
    pts[:, 0] = np.tile(x, rows + 1)
    pts[:, 1] = np.tile(y, rows + 1)
    pts[:, 2] = np.repeat(zs, angular)
    return pts


def contains(geom: ContainerGeom, pts: np.ndarray) -> np.ndarray:
    """Strict-interior test of the filled extrusion for base-frame points (..., 3)."""
    pts = np.asarray(pts, dtype=float)
    z = pts[..., 2]
    val = np.abs(pts[..., 0] / geom.a) ** geom.n + np.abs(pts[..., 1] / geom.b) ** geom.n
    return (z > 0.0) & (z < geom.height) & (val < 1.0)
