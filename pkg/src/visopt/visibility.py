"""Visibility regions, visible vertices and anchors."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ObserverOutsideFreeSpace
from .geometry import (
    FreeSpace,
    ProjectedRay,
    ReflexVertexInfo,
    _exit_length,
    as_point,
    cross,
    project_ray,
    rotate_cw,
    segment_in_free_space,
    unit,
)

TWO_PI = 2.0 * math.pi
ANGLE_MERGE = 1e-12


class Orientation(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class LinearEdge:
    a: tuple
    b: tuple

    def to_json(self):
        return {"type": "line", "a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class ArcEdge:
    """Counter-clockwise arc from ``theta_start`` to ``theta_end``."""

    center: tuple
    radius: float
    theta_start: float
    theta_end: float

    def point(self, t: float):
        return (self.center[0] + self.radius * math.cos(t), self.center[1] + self.radius * math.sin(t))

    @property
    def a(self):
        return self.point(self.theta_start)

    @property
    def b(self):
        return self.point(self.theta_end)

    def to_json(self):
        return {
            "type": "arc",
            "center": list(self.center),
            "radius": self.radius,
            "theta_start": self.theta_start,
            "theta_end": self.theta_end,
        }


def edge_from_json(d: dict):
    if d["type"] == "line":
        return LinearEdge(tuple(d["a"]), tuple(d["b"]))
    if d["type"] == "arc":
        return ArcEdge(tuple(d["center"]), float(d["radius"]), float(d["theta_start"]), float(d["theta_end"]))
    raise ValueError(f"unknown edge type {d['type']!r}")


def boundary_area(edges) -> float:
    """Green's theorem over a closed chain of line and arc edges."""
    total = 0.0
    for e in edges:
        if isinstance(e, LinearEdge):
            total += e.a[0] * e.b[1] - e.b[0] * e.a[1]
        else:
            cx, cy = e.center
            R, s, t = e.radius, e.theta_start, e.theta_end
            total += R * R * (t - s) + cx * R * (math.sin(t) - math.sin(s)) - cy * R * (math.cos(t) - math.cos(s))
    return 0.5 * total


@dataclass(frozen=True, eq=False)
class VisibilityRegion:
    observer: tuple
    boundary: tuple
    area: float

    @property
    def is_polygon(self) -> bool:
        return all(isinstance(e, LinearEdge) for e in self.boundary)

    @property
    def vertices(self) -> np.ndarray:
        return np.array([e.a for e in self.boundary], float).reshape(-1, 2)

    def polygon(self, n_arc: int = 512) -> np.ndarray:
        """Vertex ring with arcs discretized at ``n_arc`` points per full turn."""
        pts = []
        for e in self.boundary:
            if isinstance(e, LinearEdge):
                pts.append(e.a)
            else:
                span = e.theta_end - e.theta_start
                k = max(1, int(math.ceil(abs(span) / TWO_PI * n_arc)))
                pts.extend(e.point(e.theta_start + span * i / k) for i in range(k))
        return np.array(pts, float).reshape(-1, 2)

    def to_json(self) -> dict:
        return {
            "observer": list(self.observer),
            "area": self.area,
            "edges": [e.to_json() for e in self.boundary],
        }

    @classmethod
    def from_json(cls, d: dict) -> "VisibilityRegion":
        return cls(tuple(d["observer"]), tuple(edge_from_json(e) for e in d["edges"]), float(d["area"]))


@dataclass(frozen=True, eq=False)
class Anchor:
    id: int
    label: str
    orientation: Orientation
    ray: ProjectedRay


@dataclass(frozen=True, eq=False)
class AnchorSet:
    observer: tuple
    anchors: tuple

    def __iter__(self):
        return iter(self.anchors)

    def __len__(self):
        return len(self.anchors)

    @property
    def labels(self) -> frozenset:
        return frozenset(a.label for a in self.anchors)

    @property
    def ids(self) -> frozenset:
        return frozenset(a.id for a in self.anchors)

    def orientations(self) -> dict:
        return {a.label: a.orientation for a in self.anchors}


# ---------------------------------------------------------------- sector fan

@dataclass(frozen=True, eq=False)
class SectorFan:
    """Angular sectors around an observer; in each one the visible boundary is a single edge.

    ``P[i]`` and ``Q[i]`` are the boundary points on the rays at ``lo[i]`` and
    ``hi[i]``; the region seen inside sector ``i`` is the triangle (x, P, Q).
    """

    x: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    edge: np.ndarray


def _require_inside(fs: FreeSpace, x: np.ndarray) -> None:
    if fs.classify(x)[0] < 0:
        raise ObserverOutsideFreeSpace(f"observer {tuple(x)} is outside the free space")


def sector_fan(fs: FreeSpace, x, extra_angles=()) -> SectorFan:
    x = as_point(x)
    _require_inside(fs, x)
    rel = fs.vertices - x
    far = np.hypot(rel[:, 0], rel[:, 1]) > fs.eps
    ang = np.arctan2(rel[far, 1], rel[far, 0])
    extra = np.mod(np.asarray(extra_angles, float) + math.pi, TWO_PI) - math.pi
    ang = np.sort(np.concatenate([ang, extra]))
    ang = ang[np.concatenate([[True], np.diff(ang) > ANGLE_MERGE])]
    if len(ang) > 1 and ang[0] + TWO_PI - ang[-1] <= ANGLE_MERGE:
        ang = ang[:-1]
    lo = ang
    hi = np.roll(ang, -1)
    hi[-1] += TWO_PI
    mid = 0.5 * (lo + hi)
    U = np.stack([np.cos(mid), np.sin(mid)], axis=1)

    W = fs.edge_a - x
    S = fs.edge_s
    denom = cross(U[:, None, :], S[None, :, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(W, S)[None, :] / denom
        u = cross(W[None, :, :], U[:, None, :]) / denom
    valid = (np.abs(denom) > 1e-14 * fs.edge_len) & (u >= 0) & (u <= 1) & (t > fs.eps)
    t = np.where(valid, t, np.inf)
    j = np.argmin(t, axis=1)
    t1 = t[np.arange(len(j)), j]
    blocked = ~np.isfinite(t1)
    if fs.classify(x)[0] == 0:
        probe = x + 0.5 * np.where(blocked, 0.0, t1)[:, None] * U
        blocked |= fs.classify(probe) < 0

    def on_edge_line(theta):
        d = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        Wj, Sj = W[j], S[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = cross(Wj, Sj) / cross(d, Sj)
        bad = ~np.isfinite(tt) | (tt < 0)
        pts = x + np.where(bad, 0.0, tt)[:, None] * d
        if np.any(bad & ~blocked):
            # the edge line is parallel to the sector ray; use the closer endpoint
            A, B = fs.edge_a[j], fs.edge_b[j]
            da = np.abs(np.angle(np.exp(1j * (np.arctan2(*(A - x).T[::-1]) - theta))))
            db = np.abs(np.angle(np.exp(1j * (np.arctan2(*(B - x).T[::-1]) - theta))))
            pts = np.where(bad[:, None], np.where((da <= db)[:, None], A, B), pts)
        return pts

    P = on_edge_line(lo)
    Q = on_edge_line(hi)
    P[blocked] = x
    Q[blocked] = x
    return SectorFan(x, lo, hi, P, Q, np.where(blocked, -1, j))


def _prune_ring(fs: FreeSpace, pts: list) -> list:
    out = []
    for p in pts:
        if not out or math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > fs.eps:
            out.append(p)
    while len(out) > 1 and math.hypot(out[0][0] - out[-1][0], out[0][1] - out[-1][1]) <= fs.eps:
        out.pop()
    # mid-edge event points that are not vertices of F
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            a, p, b = np.array(out[i - 1]), np.array(out[i]), np.array(out[(i + 1) % len(out)])
            if np.min(np.hypot(*(fs.vertices - p).T)) <= fs.eps:
                continue
            ab = b - a
            L = math.hypot(*ab)
            if L > 0 and abs(cross(ab, p - a)) / L <= fs.eps and 0 < np.dot(p - a, ab) < L * L:
                out.pop(i)
                changed = True
                break
    return out


def _clip_to_disk(p, q, R):
    """Pieces of segment p->q (relative to the centre) as (inside, a, b)."""
    d = q - p
    A = d @ d
    B = 2 * (p @ d)
    C = p @ p - R * R
    ts = [0.0]
    disc = B * B - 4 * A * C
    if A > 0 and disc > 0:
        r = math.sqrt(disc)
        for t in sorted(((-B - r) / (2 * A), (-B + r) / (2 * A))):
            if 0 < t < 1:
                ts.append(t)
    ts.append(1.0)
    out = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 <= 0:
            continue
        m = p + 0.5 * (t0 + t1) * d
        out.append((m @ m <= R * R, p + t0 * d, p + t1 * d))
    return out


def _wedge_mask(fan: SectorFan, heading: float, aperture: float) -> np.ndarray:
    if aperture >= TWO_PI:
        return np.ones(len(fan.lo), bool)
    mid = 0.5 * (fan.lo + fan.hi)
    off = np.abs(np.mod(mid - heading + math.pi, TWO_PI) - math.pi)
    return off <= 0.5 * aperture


def visibility_region(fs: FreeSpace, x, R: float | None = None, heading: float | None = None,
                      aperture: float | None = None) -> VisibilityRegion:
    """Visible set, optionally cut to the disk of radius ``R`` and a heading wedge."""
    x = as_point(x)
    fov = aperture is not None and aperture < TWO_PI
    extra = [heading - aperture / 2, heading + aperture / 2] if fov else []
    fan = sector_fan(fs, x, extra)
    keep = _wedge_mask(fan, heading, aperture) if fov else np.ones(len(fan.lo), bool)
    if fov:
        # rotate so the kept sectors are contiguous, starting at the wedge's right side
        start = int(np.argmax(keep & ~np.roll(keep, 1))) if not keep.all() else 0
        order = np.roll(np.arange(len(keep)), -start)
        order = order[keep[order]]
    else:
        order = np.arange(len(fan.lo))

    if R is None and not fov:
        pts = []
        for i in order:
            pts.append(tuple(fan.P[i]))
            pts.append(tuple(fan.Q[i]))
        ring = _prune_ring(fs, pts)
        edges = tuple(LinearEdge(ring[k], ring[(k + 1) % len(ring)]) for k in range(len(ring)))
        return VisibilityRegion(tuple(x), edges, boundary_area(edges))

    Rr = math.inf if R is None else float(R)
    xt = tuple(x)
    chain = []  # edges in order; radial joins added between sectors

    def add_line(a, b):
        if math.hypot(b[0] - a[0], b[1] - a[1]) > fs.eps:
            chain.append(LinearEdge(tuple(a), tuple(b)))

    cursor = None
    for i in order:
        p = fan.P[i] - x
        q = fan.Q[i] - x
        if math.isinf(Rr):
            pieces = [(True, p, q)]
        else:
            pieces = _clip_to_disk(p, q, Rr)
        for inside, a, b in pieces:
            if inside:
                start, end = x + a, x + b
                if cursor is not None:
                    add_line(cursor, start)
                add_line(start, end)
            else:
                ta = math.atan2(a[1], a[0])
                tb = ta + (math.atan2(cross(a, b), a @ b) if np.any(a != b) else 0.0)
                start = x + Rr * np.array([math.cos(ta), math.sin(ta)])
                end = x + Rr * np.array([math.cos(tb), math.sin(tb)])
                if cursor is not None:
                    add_line(cursor, start)
                if tb > ta:
                    chain.append(ArcEdge(xt, Rr, ta, tb))
            cursor = end
    if fov:
        if chain:
            first = chain[0].a
            chain = [e for e in chain]
            chain.insert(0, LinearEdge(xt, tuple(first)))
            add_line(cursor, xt)
    elif chain:
        add_line(cursor, chain[0].a)
    edges = tuple(chain)
    return VisibilityRegion(xt, edges, boundary_area(edges))


def visibility_polygon(fs: FreeSpace, x) -> VisibilityRegion:
    return visibility_region(fs, x)


def visible_vertices(fs: FreeSpace, x) -> list:
    x = as_point(x)
    _require_inside(fs, x)
    return [i for i, v in enumerate(fs.vertices) if segment_in_free_space(fs, x, v)]


# ---------------------------------------------------------------- anchors

def quadrant(info: ReflexVertexInfo, w, tol: float) -> int:
    """Quadrant 1..4 of offset ``w`` from the reflex vertex; M2 and M4 closed."""
    M = np.column_stack([info.e1_hat, info.e2_hat])
    alpha, beta = np.linalg.solve(M, np.asarray(w, float))
    if alpha >= -tol and beta <= tol:
        return 2
    if alpha <= tol and beta >= -tol:
        return 4
    return 1 if alpha > 0 else 3


def anchors(fs: FreeSpace, x) -> AnchorSet:
    x = as_point(x)
    _require_inside(fs, x)
    found = []
    for info in fs.reflex:
        w = x - info.vertex
        if math.hypot(*w) <= fs.eps:
            continue
        q = quadrant(info, w, fs.eps)
        if q not in (2, 4) or not segment_in_free_space(fs, x, info.vertex):
            continue
        orient = Orientation.POSITIVE if q == 4 else Orientation.NEGATIVE
        found.append(Anchor(info.id, info.label, orient, project_ray(fs, info.vertex, x)))
    return AnchorSet(tuple(x), tuple(found))


def is_anchor_by_definition(fs: FreeSpace, x, vid: int) -> bool:
    """Visible and the away-pointing ray starts inside the free space."""
    x = as_point(x)
    v = fs.vertices[vid]
    if math.hypot(*(v - x)) <= fs.eps or not segment_in_free_space(fs, x, v):
        return False
    return _exit_length(fs, v, unit(v - x)) > fs.eps


def orientation_by_definition(fs: FreeSpace, x, vid: int) -> Orientation:
    """Positive when rays swung counter-clockwise off the anchor ray stay visible."""
    x = as_point(x)
    v = fs.vertices[vid]
    d = unit(v - x)
    s = 1e-3 * fs.bounding_diameter
    y = v + s * rotate_cw(d, -1e-3)
    return Orientation.POSITIVE if segment_in_free_space(fs, x, y) else Orientation.NEGATIVE
