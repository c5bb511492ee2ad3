"""Visibility metrics over an adversary domain, plus symmetric-difference utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely

from .errors import DomainError
from .geometry import FreeSpace, Polygon, as_point, cross, ring_contains
from .visibility import (
    TWO_PI,
    SectorFan,
    VisibilityRegion,
    _clip_to_disk,
    _wedge_mask,
    sector_fan,
    visibility_region,
)


@dataclass(frozen=True, eq=False)
class MetricConfig:
    d2: Polygon
    range: float | None = None
    fov: float | None = None  # aperture in radians

    def __post_init__(self):
        object.__setattr__(self, "d2", self.d2.oriented("ccw"))
        if self.range is not None and not self.range > 0:
            raise ValueError("range must be positive")
        if self.fov is not None and not 0 < self.fov <= TWO_PI:
            raise ValueError("aperture must lie in (0, 2*pi]")

    def validate(self, fs: FreeSpace) -> None:
        if not fs.contains_polygon(self.d2):
            raise ValueError("adversary domain is not contained in the free space")


@dataclass(frozen=True)
class Pose:
    position: tuple
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", float(np.mod(self.heading, TWO_PI)))


# ---------------------------------------------------------------- clipping

def clip_convex(subject: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of ``subject`` by the counter-clockwise convex ``window``."""
    out = [tuple(p) for p in subject]
    n = len(window)
    for k in range(n):
        if not out:
            break
        a = window[k]
        e = window[(k + 1) % n] - a
        inp, out = out, []
        prev = inp[-1]
        sp = e[0] * (prev[1] - a[1]) - e[1] * (prev[0] - a[0])
        for cur in inp:
            sc = e[0] * (cur[1] - a[1]) - e[1] * (cur[0] - a[0])
            if sc >= 0:
                if sp < 0:
                    t = sp / (sp - sc)
                    out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
                out.append(cur)
            elif sp >= 0:
                t = sp / (sp - sc)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            prev, sp = cur, sc
    return np.array(out, float).reshape(-1, 2)


def wedge_disk_area(a, b, R: float) -> float:
    """Signed area of triangle (0, a, b) intersected with the disk of radius R at 0."""
    if math.isinf(R):
        return 0.5 * float(cross(a, b))
    total = 0.0
    for inside, p, q in _clip_to_disk(np.asarray(a, float), np.asarray(b, float), R):
        if inside:
            total += 0.5 * float(cross(p, q))
        else:
            total += 0.5 * R * R * math.atan2(float(cross(p, q)), float(p @ q))
    return total


def polygon_disk_area(poly: np.ndarray, center, R: float) -> float:
    if len(poly) < 3:
        return 0.0
    rel = poly - np.asarray(center, float)
    nxt = np.roll(rel, -1, axis=0)
    if math.isinf(R):
        return 0.5 * float(np.sum(cross(rel, nxt)))
    return sum(wedge_disk_area(a, b, R) for a, b in zip(rel, nxt))


def _triangle_status(d2: np.ndarray, x, P, Q) -> np.ndarray:
    """+1 if the ccw triangle (x,P,Q) lies in d2, -1 if their interiors are disjoint, 0 otherwise.

    No edge of d2 entering the open triangle means the triangle is all in or all out,
    which its centroid then decides; boundary contact does not count as entering.
    """
    if len(P) == 0:
        return np.zeros(0, int)
    X = np.broadcast_to(x, P.shape)
    A = np.stack([X, P, Q], axis=1)[:, :, None, :]  # (n,3,1,2)
    B = np.roll(A, -1, axis=1)
    C = d2[None, None]
    D = np.roll(d2, -1, axis=0)[None, None]
    scale = float(np.ptp(d2, axis=0).max())
    tol = 1e-9 * scale * scale
    E = B - A
    fc = E[..., 0] * (C[..., 1] - A[..., 1]) - E[..., 1] * (C[..., 0] - A[..., 0]) - tol
    fd = E[..., 0] * (D[..., 1] - A[..., 1]) - E[..., 1] * (D[..., 0] - A[..., 0]) - tol
    # parameter interval of each d2 edge where it is strictly inside each triangle edge's half-plane
    slope = fd - fc
    with np.errstate(divide="ignore", invalid="ignore"):
        root = -fc / slope
    flat_out = (slope == 0) & (fc <= 0)
    lo = np.where(slope > 0, root, np.where(flat_out, np.inf, -np.inf))
    hi = np.where(slope < 0, root, np.where(flat_out, -np.inf, np.inf))
    t0 = np.maximum(lo.max(axis=1), 0.0)
    t1 = np.minimum(hi.min(axis=1), 1.0)
    enters = (t1 - t0 > 1e-12).any(axis=1)
    inside = ring_contains(A[:, :, 0, :].mean(axis=1), d2)
    return np.where(enters, 0, np.where(inside, 1, -1))


def _fan_area_in(fan: SectorFan, d2: np.ndarray, R: float, mask=None) -> float:
    x = fan.x
    keep = fan.edge >= 0
    if mask is not None:
        keep &= mask
    keep &= cross(fan.P - x, fan.Q - x) > 0
    idx = np.flatnonzero(keep)
    status = _triangle_status(d2, x, fan.P[idx], fan.Q[idx])
    total = 0.0
    for i, st in zip(idx, status):
        if st < 0:
            continue
        tri = np.array([x, fan.P[i], fan.Q[i]])
        piece = tri if st > 0 else clip_convex(d2, tri)
        total += polygon_disk_area(piece, x, R)
    return max(total, 0.0)


# ---------------------------------------------------------------- metrics

def metric_V_area(fs: FreeSpace, x) -> float:
    fan = sector_fan(fs, x)
    d = fan.P - fan.x
    e = fan.Q - fan.x
    return float(0.5 * np.sum(cross(d, e)))


def metric_V(fs: FreeSpace, cfg: MetricConfig, x) -> float:
    return _fan_area_in(sector_fan(fs, x), cfg.d2.vertices, math.inf)


def metric_V_range(fs: FreeSpace, cfg: MetricConfig, x) -> float:
    R = math.inf if cfg.range is None else cfg.range
    return _fan_area_in(sector_fan(fs, x), cfg.d2.vertices, R)


def metric_V_fov(fs: FreeSpace, cfg: MetricConfig, z: Pose) -> float:
    R = math.inf if cfg.range is None else cfg.range
    phi = TWO_PI if cfg.fov is None else cfg.fov
    if phi >= TWO_PI:
        return _fan_area_in(sector_fan(fs, z.position), cfg.d2.vertices, R)
    fan = sector_fan(fs, z.position, [z.heading - phi / 2, z.heading + phi / 2])
    return _fan_area_in(fan, cfg.d2.vertices, R, _wedge_mask(fan, z.heading, phi))


def evaluate(fs: FreeSpace, cfg: MetricConfig, x, heading: float = 0.0) -> float:
    """The metric selected by ``cfg``: full, range-limited or field-of-view limited."""
    if cfg.fov is not None and cfg.fov < TWO_PI:
        return metric_V_fov(fs, cfg, Pose(tuple(as_point(x)), heading))
    if cfg.range is not None:
        return metric_V_range(fs, cfg, x)
    return metric_V(fs, cfg, x)


# ---------------------------------------------------------------- symmetric difference

def _as_shape(region, n_arc: int = 512):
    if isinstance(region, VisibilityRegion):
        ring = region.polygon(n_arc)
    elif isinstance(region, Polygon):
        ring = region.vertices
    elif isinstance(region, shapely.Geometry):
        return region
    else:
        ring = np.asarray(region, float)
    shape = shapely.Polygon(ring)
    if not shape.is_valid:
        shape = shapely.make_valid(shape)
    return shape


def sym_diff_area(a, b, n_arc: int = 512) -> float:
    return float(_as_shape(a, n_arc).symmetric_difference(_as_shape(b, n_arc)).area)


def regular_polygon(center, R: float, n: int = 512) -> np.ndarray:
    t = np.arange(n) * TWO_PI / n
    return np.column_stack([center[0] + R * np.cos(t), center[1] + R * np.sin(t)])


def disk_symdiff_formula(R: float, d: float) -> float:
    if not R > 0:
        raise DomainError("R must be positive")
    if not 0 <= d <= 2 * R:
        raise DomainError(f"d={d} outside [0, 2R]")
    return 4 * R * R * math.asin(d / (2 * R)) + d * math.sqrt(max(4 * R * R - d * d, 0.0))


@dataclass(frozen=True)
class LipschitzEstimate:
    estimate: float
    bound: float
    ratios: tuple


def lipschitz_estimate(fs: FreeSpace, cfg: MetricConfig | None, roi: Polygon, n_pairs: int,
                       delta: float, pair_distance: float | None = None, seed: int = 0) -> LipschitzEstimate:
    """Largest sampled sym-diff ratio between nearby visibility regions, with the analytic bound."""
    rng = np.random.default_rng(seed)
    h = 1e-3 * fs.bounding_diameter if pair_distance is None else pair_distance
    R = None if cfg is None else cfg.range
    lo, hi = roi.vertices.min(axis=0), roi.vertices.max(axis=0)
    ratios = []
    while len(ratios) < n_pairs:
        y1 = rng.uniform(lo, hi)
        th = rng.uniform(0, TWO_PI)
        y2 = y1 + h * np.array([math.cos(th), math.sin(th)])
        if roi.classify(np.array([y1, y2]), fs.eps).min() < 1 or fs.classify(np.array([y1, y2])).min() < 0:
            continue
        s1 = visibility_region(fs, y1, R=R)
        s2 = visibility_region(fs, y2, R=R)
        ratios.append(sym_diff_area(s1, s2) / h)
    bound = len(fs.reflex) * fs.bounding_diameter ** 2 / (4 * delta)
    return LipschitzEstimate(max(ratios), bound, tuple(ratios))


__all__ = [
    "MetricConfig",
    "Pose",
    "clip_convex",
    "disk_symdiff_formula",
    "evaluate",
    "lipschitz_estimate",
    "metric_V",
    "metric_V_area",
    "metric_V_fov",
    "metric_V_range",
    "polygon_disk_area",
    "regular_polygon",
    "sym_diff_area",
    "wedge_disk_area",
]
