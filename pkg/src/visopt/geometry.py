"""Polygon primitives, free-space construction, reflex vertices and projected rays.

Storage convention: the outer ring is kept clockwise and every hole
counter-clockwise, so the free space always lies to the right of each
directed boundary edge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import (
    DegenerateRay,
    HoleOutsideOuter,
    InvalidPolygon,
    OverlappingHoles,
)

EPS_UNIT = 1e-12
EPS_ANGLE = 1e-10
GEOM_REL = 1e-9


class Where(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


# ---------------------------------------------------------------- vector helpers

def cross(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    n = math.hypot(v[0], v[1])
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


def as_point(p) -> np.ndarray:
    p = np.asarray(p, float).reshape(2)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p!r}")
    return p


def rotate_cw(v, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1]])


def signed_area(verts) -> float:
    v = np.asarray(verts, float)
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def point_segment_distance(P, A, B) -> np.ndarray:
    """Distances between points ``P`` (k,2) and segments ``A``-``B`` (m,2); shape (k,m)."""
    P = np.atleast_2d(np.asarray(P, float))[:, None, :]
    A = np.asarray(A, float)[None, :, :]
    S = np.asarray(B, float)[None, :, :] - A
    ss = np.sum(S * S, axis=-1)
    t = np.where(ss > 0, np.sum((P - A) * S, axis=-1) / np.where(ss > 0, ss, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    D = P - (A + t[..., None] * S)
    return np.hypot(D[..., 0], D[..., 1])


def segment_distance(a1, b1, a2, b2) -> np.ndarray:
    """Pairwise distance between segment sets (n,2)x(n,2) and (m,2)x(m,2); shape (n,m)."""
    a1, b1, a2, b2 = (np.atleast_2d(np.asarray(z, float)) for z in (a1, b1, a2, b2))
    d = np.minimum(
        np.minimum(point_segment_distance(a1, a2, b2), point_segment_distance(b1, a2, b2)),
        np.minimum(point_segment_distance(a2, a1, b1).T, point_segment_distance(b2, a1, b1).T),
    )
    r = (b1 - a1)[:, None, :]
    s = (b2 - a2)[None, :, :]
    w = a2[None, :, :] - a1[:, None, :]
    o1 = cross(r, w)
    o2 = cross(r, w + s)
    o3 = cross(s, -w)
    o4 = cross(s, -w + r)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    return np.where(proper, 0.0, d)


def ring_contains(P, ring) -> np.ndarray:
    """Even-odd crossing test; boundary points get an arbitrary answer."""
    P = np.atleast_2d(np.asarray(P, float))
    V = np.asarray(ring, float)
    W = np.roll(V, -1, axis=0)
    px = P[:, 0:1]
    py = P[:, 1:2]
    y0, y1 = V[None, :, 1], W[None, :, 1]
    x0, x1 = V[None, :, 0], W[None, :, 0]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hit = straddle & (px < xc)
    return (np.count_nonzero(hit, axis=1) % 2) == 1


# ---------------------------------------------------------------- polygons

@dataclass(frozen=True, eq=False)
class Polygon:
    vertices: np.ndarray
    orientation: str

    @classmethod
    def from_points(cls, pts: Sequence[Sequence[float]]) -> "Polygon":
        v = np.asarray(pts, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidPolygon("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidPolygon("non-finite vertex coordinate")
        if np.allclose(v[0], v[-1]) and len(v) > 3:
            v = v[:-1]
        a = signed_area(v)
        scale = float(np.max(np.ptp(v, axis=0)))
        if scale == 0.0 or abs(a) <= GEOM_REL * scale * scale:
            raise InvalidPolygon("polygon has zero area")
        _check_simple(v, GEOM_REL * scale)
        v.setflags(write=False)
        return cls(v, "ccw" if a > 0 else "cw")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    def edges(self):
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def oriented(self, orientation: str) -> "Polygon":
        """Same polygon in the requested orientation, keeping the first vertex."""
        if orientation == self.orientation:
            return self
        v = np.concatenate([self.vertices[:1], self.vertices[:0:-1]])
        v.setflags(write=False)
        return Polygon(v, orientation)

    def is_convex(self, tol: float = 0.0) -> bool:
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        c = cross(e, np.roll(e, -1, axis=0))
        return bool(np.all(c >= -tol)) or bool(np.all(c <= tol))

    def classify(self, P, eps: float) -> np.ndarray:
        """+1 interior, 0 boundary band, -1 exterior for each point."""
        P = np.atleast_2d(np.asarray(P, float))
        A, B = self.edges()
        near = point_segment_distance(P, A, B).min(axis=1) <= eps
        inside = ring_contains(P, self.vertices)
        return np.where(near, 0, np.where(inside, 1, -1))

    def tolist(self):
        return self.vertices.tolist()


def _check_simple(v: np.ndarray, eps: float) -> None:
    n = len(v)
    A = v
    B = np.roll(v, -1, axis=0)
    if np.any(np.hypot(*(B - A).T) <= eps):
        raise InvalidPolygon("repeated consecutive vertex")
    D = segment_distance(A, B, A, B)
    idx = np.arange(n)
    adjacent = (idx[:, None] == idx[None, :]) | ((idx[:, None] + 1) % n == idx[None, :]) | (
        (idx[None, :] + 1) % n == idx[:, None]
    )
    bad = (D <= eps) & ~adjacent
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise InvalidPolygon(f"edges {i} and {j} intersect")
    # adjacent edges folding back onto each other
    e = B - A
    e_next = np.roll(e, -1, axis=0)
    folded = (np.abs(cross(e, e_next)) <= eps * np.hypot(*e.T)) & (np.sum(e * e_next, axis=1) < 0)
    if np.any(folded):
        raise InvalidPolygon(f"spike at vertex {int(np.argmax(folded)) + 1}")


@dataclass(frozen=True, eq=False)
class Environment:
    outer: Polygon
    holes: tuple = ()

    @classmethod
    def from_lists(cls, outer, holes=()) -> "Environment":
        return cls(Polygon.from_points(outer), tuple(Polygon.from_points(h) for h in holes))

    def to_json(self) -> dict:
        return {"outer": self.outer.tolist(), "holes": [h.tolist() for h in self.holes]}


# ---------------------------------------------------------------- free space

@dataclass(frozen=True)
class ReflexVertexInfo:
    id: int
    label: str
    vertex: np.ndarray
    e1_hat: np.ndarray
    e2_hat: np.ndarray
    prev_id: int
    next_id: int


@dataclass(frozen=True, eq=False)
class ProjectedRay:
    origin: np.ndarray
    direction: np.ndarray
    length: float
    grazing: bool = False

    @property
    def endpoint(self) -> np.ndarray:
        if not math.isfinite(self.length):
            raise ValueError("infinite ray has no endpoint")
        return self.origin + self.length * self.direction


class FreeSpace:
    """Environment minus open hole interiors, with cached edge arrays."""

    def __init__(self, env: Environment):
        outer = env.outer.oriented("cw")
        holes = [h.oriented("ccw") for h in env.holes]
        self.env = Environment(outer, tuple(holes))
        self.rings = [outer.vertices] + [h.vertices for h in holes]

        labels, ring_of, pos = [], [], []
        for i in range(len(outer)):
            labels.append(f"q{i + 1}")
        for j, h in enumerate(holes):
            for i in range(len(h)):
                labels.append(f"o{i + 1}" if len(holes) == 1 else f"o{j + 1}_{i + 1}")
        for r, ring in enumerate(self.rings):
            ring_of += [r] * len(ring)
            pos += list(range(len(ring)))
        self.labels = tuple(labels)
        self.ring_of = np.array(ring_of)
        self.ring_pos = np.array(pos)
        self.vertices = np.concatenate(self.rings)
        self.vertices.setflags(write=False)

        offs = np.cumsum([0] + [len(r) for r in self.rings])
        self._offsets = offs
        prev_id = np.empty(len(self.vertices), int)
        next_id = np.empty(len(self.vertices), int)
        for r, ring in enumerate(self.rings):
            n = len(ring)
            ids = offs[r] + np.arange(n)
            prev_id[ids] = offs[r] + (np.arange(n) - 1) % n
            next_id[ids] = offs[r] + (np.arange(n) + 1) % n
        self.prev_id, self.next_id = prev_id, next_id
        self.edge_a = self.vertices
        self.edge_b = self.vertices[next_id]
        self.edge_s = self.edge_b - self.edge_a
        self.edge_len = np.hypot(self.edge_s[:, 0], self.edge_s[:, 1])

        self.bounding_diameter = float(pdist(outer.vertices).max())
        self.eps = GEOM_REL * self.bounding_diameter
        self.area = outer.area - sum(h.area for h in holes)
        self._check_holes(holes)

        V = self.vertices
        turn = cross(V - V[prev_id], V[next_id] - V)
        scale = np.hypot(*(V - V[prev_id]).T) * np.hypot(*(V[next_id] - V).T)
        self.reflex = tuple(
            ReflexVertexInfo(
                id=int(i),
                label=self.labels[i],
                vertex=V[i],
                e1_hat=unit(V[prev_id[i]] - V[i]),
                e2_hat=unit(V[next_id[i]] - V[i]),
                prev_id=int(prev_id[i]),
                next_id=int(next_id[i]),
            )
            for i in np.flatnonzero(turn > EPS_UNIT * scale)
        )
        self._reflex_by_id = {r.id: r for r in self.reflex}

    def _check_holes(self, holes) -> None:
        eps = self.eps
        oa, ob = self.env.outer.edges()
        for j, h in enumerate(holes):
            ha, hb = h.edges()
            if segment_distance(ha, hb, oa, ob).min() <= eps:
                raise HoleOutsideOuter(f"hole {j} touches or crosses the outer boundary")
            if not np.all(ring_contains(h.vertices, self.env.outer.vertices)):
                raise HoleOutsideOuter(f"hole {j} lies outside the outer polygon")
        for j in range(len(holes)):
            for k in range(j + 1, len(holes)):
                a, b = holes[j], holes[k]
                if segment_distance(*a.edges(), *b.edges()).min() <= eps:
                    raise OverlappingHoles(f"holes {j} and {k} intersect")
                if ring_contains(a.vertices[:1], b.vertices)[0] or ring_contains(b.vertices[:1], a.vertices)[0]:
                    raise OverlappingHoles(f"holes {j} and {k} are nested")

    # -- lookup helpers
    def vertex_id(self, label: str) -> int:
        return self.labels.index(label)

    def reflex_info(self, vid: int) -> ReflexVertexInfo:
        return self._reflex_by_id[vid]

    @property
    def reflex_ids(self) -> tuple:
        return tuple(r.id for r in self.reflex)

    @property
    def reflex_labels(self) -> frozenset:
        return frozenset(r.label for r in self.reflex)

    def classify(self, P) -> np.ndarray:
        """Vectorized membership: +1 interior, 0 boundary, -1 exterior."""
        P = np.atleast_2d(np.asarray(P, float))
        near = point_segment_distance(P, self.edge_a, self.edge_b).min(axis=1) <= self.eps
        inside = ring_contains(P, self.rings[0])
        for ring in self.rings[1:]:
            inside &= ~ring_contains(P, ring)
        return np.where(near, 0, np.where(inside, 1, -1))

    def contains_polygon(self, poly: Polygon) -> bool:
        v = poly.vertices
        w = np.roll(v, -1, axis=0)
        if not all(segment_in_free_space(self, a, b) for a, b in zip(v, w)):
            return False
        for ring in self.rings[1:]:
            if np.any(poly.classify(ring, self.eps) > 0):
                return False
        return True


def build_free_space(env: Environment) -> FreeSpace:
    return FreeSpace(env)


def point_in_free_space(fs: FreeSpace, p) -> Where:
    c = int(fs.classify(as_point(p))[0])
    return (Where.EXTERIOR, Where.BOUNDARY, Where.INTERIOR)[c + 1]


# ---------------------------------------------------------------- rays

def _breakpoints(fs: FreeSpace, p: np.ndarray, d: np.ndarray, tmax: float) -> np.ndarray:
    """Sorted ray parameters in (0, tmax] where the ray p + t d meets the boundary."""
    tol = fs.eps
    w = fs.edge_a - p
    S = fs.edge_s
    denom = cross(d, S)
    ok = np.abs(denom) > 1e-12 * fs.edge_len
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(w, S) / denom
        u = cross(w, d) / denom
    slack = tol / fs.edge_len
    hit = ok & (u >= -slack) & (u <= 1 + slack) & (t > tol)
    ts = [t[hit]]
    # vertices lying on the ray: collinear edges and grazing contacts
    rel = fs.vertices - p
    along = rel @ d
    perp = np.abs(cross(d, rel))
    ts.append(along[(perp <= tol) & (along > tol)])
    ts = np.concatenate(ts)
    if math.isfinite(tmax):
        ts = ts[ts < tmax - tol]
        ts = np.append(ts, tmax)
    ts = np.sort(ts)
    if len(ts) > 1:
        keep = np.concatenate([[True], np.diff(ts) > tol])
        ts = ts[keep]
    return ts


def _exit_length(fs: FreeSpace, p: np.ndarray, d: np.ndarray) -> float:
    """sup{t : [p, p + t d] in F}; 0 when the ray leaves at once."""
    ts = _breakpoints(fs, p, d, math.inf)
    if len(ts) == 0:
        return 0.0
    lo = np.concatenate([[0.0], ts[:-1]])
    mids = p + 0.5 * (lo + ts)[:, None] * d
    bad = np.flatnonzero(fs.classify(mids) < 0)
    if len(bad) == 0:
        return float(ts[-1])
    return float(lo[bad[0]])


def first_contact(fs: FreeSpace, p, d) -> float | None:
    """Distance to the first boundary contact when the ray starts into the interior."""
    p = as_point(p)
    d = unit(d)
    ts = _breakpoints(fs, p, d, math.inf)
    if len(ts) == 0:
        return None
    if fs.classify(p + 0.5 * ts[0] * d)[0] != 1:
        return None
    return float(ts[0])


def segment_in_free_space(fs: FreeSpace, a, b) -> bool:
    a = as_point(a)
    b = as_point(b)
    L = math.hypot(*(b - a))
    if L <= fs.eps:
        return bool(fs.classify(a)[0] >= 0)
    d = (b - a) / L
    ts = _breakpoints(fs, a, d, L)
    lo = np.concatenate([[0.0], ts[:-1]])
    pts = np.concatenate([[a, b], a + 0.5 * (lo + ts)[:, None] * d])
    return bool(np.all(fs.classify(pts) >= 0))


def _ray_from(fs: FreeSpace, v: np.ndarray, d: np.ndarray) -> ProjectedRay:
    L = _exit_length(fs, v, d)
    length = math.inf if L <= fs.eps else L
    grazing = False
    if math.isfinite(length):
        # a vertex touched tangentially before the exit point: an arbitrarily
        # small rotation would stop the ray there on one side only
        rel = fs.vertices - v
        along = rel @ d
        perp = np.abs(cross(d, rel))
        on = np.flatnonzero((perp <= fs.eps) & (along > fs.eps) & (along < L - fs.eps))
        for i in on:
            sp = cross(d, fs.vertices[fs.prev_id[i]] - v)
            sn = cross(d, fs.vertices[fs.next_id[i]] - v)
            if min(abs(sp), abs(sn)) > fs.eps and sp * sn > 0:
                grazing = True
                break
    return ProjectedRay(v, d, length, grazing)


def project_ray(fs: FreeSpace, v, x) -> ProjectedRay:
    return project_rotated_ray(fs, v, x, 0.0)


def project_rotated_ray(fs: FreeSpace, v, x, theta: float) -> ProjectedRay:
    """Ray from ``v`` pointing away from ``x``, rotated clockwise by ``theta``."""
    v = as_point(v)
    x = as_point(x)
    w = v - x
    n = math.hypot(*w)
    if n <= fs.eps:
        raise DegenerateRay("ray origin coincides with the observer")
    d = w / n
    if theta:
        d = unit(rotate_cw(d, theta))
    return _ray_from(fs, v, d)


def ray_bundle(fs: FreeSpace, v, x, theta1: float, theta2: float, n: int) -> list:
    if theta2 < theta1 or n < 2:
        raise ValueError("need theta1 <= theta2 and n >= 2")
    return [project_rotated_ray(fs, v, x, th) for th in np.linspace(theta1, theta2, n)]


def direction_feasible(fs: FreeSpace, x, nu, h: float) -> bool:
    x = as_point(x)
    return segment_in_free_space(fs, x, x + h * unit(nu))
