"""Inflection segments, the convex free-space partition and point location."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from .errors import ArrangementDegeneracy, OutsideFreeSpace
from .geometry import (
    FreeSpace,
    Polygon,
    as_point,
    cross,
    first_contact,
    point_segment_distance,
    segment_in_free_space,
    signed_area,
    unit,
)
from .visibility import anchors


class SegmentKind(str, enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"


@dataclass(frozen=True, eq=False)
class InflectionSegment:
    id: int
    kind: SegmentKind
    generators: tuple  # vertex ids; one for Type I, ordered pair for Type II
    origin: int  # vertex id the clipped ray starts from
    a: np.ndarray
    b: np.ndarray
    anchor_delta: int

    def to_json(self, fs: FreeSpace) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "generators": [fs.labels[g] for g in self.generators],
            "origin": fs.labels[self.origin],
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "anchor_delta": fs.labels[self.anchor_delta],
        }


def inflection_segments(fs: FreeSpace) -> list:
    V = fs.vertices
    found = []

    def emit(kind, gens, origin, d, delta):
        t = first_contact(fs, V[origin], d)
        if t is None or t <= fs.eps:
            return
        a = V[origin]
        found.append(InflectionSegment(len(found), kind, gens, origin, a, a + t * d, delta))

    for r in fs.reflex:
        emit(SegmentKind.TYPE_I, (r.id,), r.id, -r.e1_hat, r.id)
        emit(SegmentKind.TYPE_I, (r.id,), r.id, -r.e2_hat, r.id)
        emit(SegmentKind.TYPE_I, (r.id,), r.prev_id, r.e1_hat, r.id)
        emit(SegmentKind.TYPE_I, (r.id,), r.next_id, r.e2_hat, r.id)
    for r, s in combinations(fs.reflex, 2):
        if not segment_in_free_space(fs, r.vertex, s.vertex):
            continue
        emit(SegmentKind.TYPE_II, (r.id, s.id), r.id, unit(r.vertex - s.vertex), s.id)
        emit(SegmentKind.TYPE_II, (s.id, r.id), s.id, unit(s.vertex - r.vertex), r.id)
    return found


def segment_bound(n_reflex: int) -> int:
    return 4 * n_reflex + n_reflex * (n_reflex - 1)


@dataclass(frozen=True, eq=False)
class PartitionFace:
    id: int
    polygon: Polygon
    anchor_set: frozenset  # vertex labels
    anchor_ids: frozenset
    center: np.ndarray
    radius: float  # Chebyshev radius

    def contains(self, p, tol: float) -> bool:
        v = self.polygon.vertices
        e = np.roll(v, -1, axis=0) - v
        L = np.hypot(e[:, 0], e[:, 1])
        return bool(np.all(cross(e, np.asarray(p, float) - v) / L >= -tol))


@dataclass(frozen=True)
class ArrangementEdge:
    u: int
    v: int
    sources: frozenset  # ("boundary", i) / ("segment", i)
    faces: tuple  # face ids left/right (None for dropped/outer)

    @property
    def segment_ids(self) -> tuple:
        return tuple(sorted(i for k, i in self.sources if k == "segment"))


@dataclass(frozen=True)
class Location:
    face: int | None
    segments: tuple = ()

    @property
    def on_segment(self) -> bool:
        return bool(self.segments)


@dataclass(frozen=True, eq=False)
class CriticalStructure:
    fs: FreeSpace
    segments: tuple
    faces: tuple
    adjacency: tuple
    nodes: np.ndarray
    edges: tuple

    def to_json(self) -> dict:
        fs = self.fs
        return {
            "segments": [s.to_json(fs) for s in self.segments],
            "faces": [
                {
                    "id": f.id,
                    "polygon": f.polygon.tolist(),
                    "anchor_set": sorted(f.anchor_set),
                    "area": f.polygon.area,
                }
                for f in self.faces
            ],
            "adjacency": [list(p) for p in self.adjacency],
            "segment_bound": segment_bound(len(fs.reflex)),
        }

    def face_at(self, x) -> PartitionFace | None:
        loc = locate(self, x)
        return None if loc.face is None else self.faces[loc.face]


# ---------------------------------------------------------------- arrangement

def _split_params(A, B, eps, ids):
    """Intersection parameters along each piece, checking for near-parallel overlaps."""
    S = B - A
    L = np.hypot(S[:, 0], S[:, 1])
    M = len(A)
    params = [[0.0, 1.0] for _ in range(M)]
    Si, Sj = S[:, None, :], S[None, :, :]
    W = A[None, :, :] - A[:, None, :]
    denom = cross(Si, Sj)
    LL = L[:, None] * L[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ti = cross(W, Sj) / denom
        tj = cross(W, Si) / denom
    tol = (eps / L)[:, None]
    tolj = (eps / L)[None, :]
    transversal = np.abs(denom) > 1e-6 * LL
    hit = transversal & (ti >= -tol) & (ti <= 1 + tol) & (tj >= -tolj) & (tj <= 1 + tolj)
    np.fill_diagonal(hit, False)
    for i, j in zip(*np.nonzero(hit)):
        params[i].append(float(np.clip(ti[i, j], 0.0, 1.0)))
    # parallel pairs: collinear overlaps contribute endpoint projections
    par = ~transversal
    np.fill_diagonal(par, False)
    for i, j in zip(*np.nonzero(par)):
        off = abs(cross(S[i], A[j] - A[i])) / L[i]
        off2 = abs(cross(S[i], B[j] - A[i])) / L[i]
        if max(off, off2) <= eps:
            for p in (A[j], B[j]):
                s = float(np.dot(p - A[i], S[i]) / L[i] ** 2)
                if -tol[i, 0] <= s <= 1 + tol[i, 0]:
                    params[i].append(min(max(s, 0.0), 1.0))
        elif min(off, off2) <= eps and abs(denom[i, j]) > 0:
            d = point_segment_distance(np.array([A[j], B[j]]), A[i:i + 1], B[i:i + 1]).min()
            ends = np.array([A[i], B[i]])
            shared = min(np.hypot(*(p - q)) for p in (A[j], B[j]) for q in ends) <= eps
            if d <= eps and not shared:
                raise ArrangementDegeneracy(
                    f"near-parallel overlapping pieces {ids[i]} and {ids[j]}", (ids[i], ids[j])
                )
    return params


def _snap(points: np.ndarray, r: float) -> np.ndarray:
    parent = np.arange(len(points))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(cKDTree(points).query_pairs(r)):
        a, b = find(i), find(j)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return np.array([find(i) for i in range(len(points))])


def _chebyshev_center(poly: np.ndarray):
    v = poly
    e = np.roll(v, -1, axis=0) - v
    L = np.hypot(e[:, 0], e[:, 1])
    n_in = np.column_stack([-e[:, 1], e[:, 0]]) / L[:, None]
    A_ub = np.column_stack([-n_in, np.ones(len(v))])
    b_ub = -np.sum(n_in * v, axis=1)
    res = linprog([0, 0, -1], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * 2 + [(0, None)], method="highs")
    if res.status == 0:
        return res.x[:2], float(res.x[2])
    return v.mean(axis=0), 0.0


def _drop_collinear(poly: np.ndarray, eps: float) -> np.ndarray:
    keep = []
    n = len(poly)
    for i in range(n):
        a, p, b = poly[i - 1], poly[i], poly[(i + 1) % n]
        ab = b - a
        L = math.hypot(*ab)
        if L > 0 and abs(cross(ab, p - a)) / L <= eps and np.dot(p - a, b - p) > 0:
            continue
        keep.append(p)
    return np.array(keep)


def build_partition(fs: FreeSpace, segs=None) -> CriticalStructure:
    if segs is None:
        segs = inflection_segments(fs)
    eps = fs.eps
    ids = [("boundary", i) for i in range(len(fs.edge_a))] + [("segment", s.id) for s in segs]
    A = np.concatenate([fs.edge_a, np.array([s.a for s in segs]).reshape(-1, 2)])
    B = np.concatenate([fs.edge_b, np.array([s.b for s in segs]).reshape(-1, 2)])
    params = _split_params(A, B, eps, ids)

    pts, owner = [], []
    for i, ts in enumerate(params):
        ts = np.unique(np.asarray(ts))
        for t in ts:
            pts.append(A[i] + t * (B[i] - A[i]))
            owner.append((i, t))
    pts = np.array(pts)
    rep = _snap(pts, 10 * eps)
    uniq, node_of = np.unique(rep, return_inverse=True)
    nodes = pts[uniq]

    edge_src = {}
    k = 0
    for i, ts in enumerate(params):
        n_t = len(np.unique(np.asarray(ts)))
        chain = node_of[k:k + n_t]
        k += n_t
        for u, v in zip(chain[:-1], chain[1:]):
            if u != v:
                edge_src.setdefault((min(u, v), max(u, v)), set()).add(ids[i])
    edge_keys = sorted(edge_src)

    # half-edges: 2e is u->v, 2e+1 is v->u
    K = len(nodes)
    out = [[] for _ in range(K)]
    for e, (u, v) in enumerate(edge_keys):
        out[u].append(2 * e)
        out[v].append(2 * e + 1)

    def tail(h):
        u, v = edge_keys[h // 2]
        return u if h % 2 == 0 else v

    def head(h):
        u, v = edge_keys[h // 2]
        return v if h % 2 == 0 else u

    pos = {}
    for n in range(K):
        ang = [math.atan2(*(nodes[head(h)] - nodes[n])[::-1]) for h in out[n]]
        out[n] = [h for _, h in sorted(zip(ang, out[n]))]
        for idx, h in enumerate(out[n]):
            pos[h] = idx

    face_of_half = {}
    cycles = []
    for h0 in range(2 * len(edge_keys)):
        if h0 in face_of_half:
            continue
        cyc = []
        h = h0
        while h not in face_of_half:
            face_of_half[h] = len(cycles)
            cyc.append(h)
            v = head(h)
            twin = h ^ 1
            h = out[v][(pos[twin] - 1) % len(out[v])]
        cycles.append(cyc)

    faces = []
    cycle_face = {}
    for c, cyc in enumerate(cycles):
        poly = nodes[[tail(h) for h in cyc]]
        if signed_area(poly) <= eps * fs.bounding_diameter:
            continue
        center, radius = _chebyshev_center(poly)
        if fs.classify(center)[0] != 1:
            continue
        simple = _drop_collinear(poly, eps)
        polygon = Polygon.from_points(simple)
        if not polygon.is_convex(tol=eps * fs.bounding_diameter):
            raise ArrangementDegeneracy(f"non-convex face traced from cycle {c}", ())
        an = anchors(fs, center)
        cycle_face[c] = len(faces)
        faces.append(PartitionFace(len(faces), polygon, an.labels, an.ids, center, radius))

    edges = []
    adjacency = set()
    for e, (u, v) in enumerate(edge_keys):
        fl = cycle_face.get(face_of_half[2 * e])
        fr = cycle_face.get(face_of_half[2 * e + 1])
        src = frozenset(edge_src[(u, v)])
        edges.append(ArrangementEdge(int(u), int(v), src, (fl, fr)))
        if fl is not None and fr is not None and fl != fr and any(k == "segment" for k, _ in src):
            adjacency.add((min(fl, fr), max(fl, fr)))
    return CriticalStructure(fs, tuple(segs), tuple(faces), tuple(sorted(adjacency)), nodes, tuple(edges))


def critical_structure(fs: FreeSpace) -> CriticalStructure:
    return build_partition(fs, inflection_segments(fs))


def locate(cs: CriticalStructure, x) -> Location:
    fs = cs.fs
    x = as_point(x)
    if fs.classify(x)[0] < 0:
        raise OutsideFreeSpace(f"{tuple(x)} is outside the free space")
    if cs.segments:
        a = np.array([s.a for s in cs.segments])
        b = np.array([s.b for s in cs.segments])
        d = point_segment_distance(x, a, b)[0]
        hits = tuple(int(i) for i in np.flatnonzero(d <= fs.eps))
        if hits:
            return Location(None, hits)
    best, best_gap = None, -math.inf
    for f in cs.faces:
        v = f.polygon.vertices
        e = np.roll(v, -1, axis=0) - v
        gap = float(np.min(cross(e, x - v) / np.hypot(e[:, 0], e[:, 1])))
        if gap >= -fs.eps:
            return Location(f.id)
        if gap > best_gap:
            best, best_gap = f.id, gap
    return Location(best)
