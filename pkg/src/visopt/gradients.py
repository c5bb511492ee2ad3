"""Directional derivatives and generalized gradients of the visibility area and metric."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .critical import CriticalStructure, locate
from .errors import InfeasibleDirection, InfiniteRay, ObserverOutsideFreeSpace, TooCloseToReflexVertex
from .geometry import (
    FreeSpace,
    ProjectedRay,
    as_point,
    cross,
    direction_feasible,
    project_ray,
    point_segment_distance,
    ring_contains,
    unit,
)
from .metrics import MetricConfig, evaluate
from .visibility import anchors, quadrant

RV_REL = 1e-4
PROBE_REL = 1e-7


@dataclass(frozen=True)
class DirectionalDerivative:
    value: float
    per_anchor: tuple  # (label, contribution)
    anchors_used: frozenset
    diagnostics: tuple = ()


@dataclass(frozen=True, eq=False)
class AnchorTerm:
    id: int
    label: str
    sign: float  # +1 positive orientation
    ray: ProjectedRay
    gradient: np.ndarray  # contribution to the area derivative is gradient . nu


def _check_clearance(fs: FreeSpace, x: np.ndarray) -> None:
    eps_rv = RV_REL * fs.bounding_diameter
    for r in fs.reflex:
        if math.hypot(*(x - r.vertex)) < eps_rv:
            raise TooCloseToReflexVertex(f"{tuple(x)} is within {eps_rv:g} of {r.label}", r.id)


def anchor_term(fs: FreeSpace, vid: int, x: np.ndarray, probe: np.ndarray) -> AnchorTerm:
    info = fs.reflex_info(vid)
    ray = project_ray(fs, info.vertex, probe)
    if not math.isfinite(ray.length):
        raise InfiniteRay(f"projected ray of {info.label} leaves the free space immediately")
    w = x - info.vertex
    dist = math.hypot(*w)
    a = w / dist
    q = quadrant(info, probe - info.vertex, fs.eps)
    sign = 1.0 if q == 4 else -1.0
    coef = -sign * ray.length ** 2 / dist * 0.5
    return AnchorTerm(vid, info.label, sign, ray, coef * np.array([-a[1], a[0]]))


def effective_anchors(fs: FreeSpace, cs: CriticalStructure, x, nu):
    """Anchor ids active when leaving ``x`` along ``nu``, the probe point and notes."""
    x = as_point(x)
    nu = unit(nu)
    h = PROBE_REL * fs.bounding_diameter
    probe = x + h * nu
    loc = locate(cs, probe)
    if loc.face is not None:
        # rays are continuous inside a face, so a face-interior x can use its own rays
        here = locate(cs, x)
        return cs.faces[loc.face].anchor_ids, (x if here.face == loc.face else probe), ()
    ids = anchors(fs, probe).ids & anchors(fs, x + 2 * h * nu).ids
    return ids, probe, ("direction runs along an inflection segment; intersection rule used",)


def _terms(fs, cs, x, nu):
    x = as_point(x)
    nu = unit(nu)
    if fs.classify(x)[0] < 0:
        raise ObserverOutsideFreeSpace(f"{tuple(x)} is outside the free space")
    _check_clearance(fs, x)
    if not direction_feasible(fs, x, nu, 10 * PROBE_REL * fs.bounding_diameter):
        raise InfeasibleDirection(f"direction {tuple(nu)} leaves the free space at {tuple(x)}")
    ids, probe, notes = effective_anchors(fs, cs, x, nu)
    return [anchor_term(fs, v, x, probe) for v in sorted(ids)], nu, notes


def dd_area(fs: FreeSpace, cs: CriticalStructure, x, nu) -> DirectionalDerivative:
    terms, nu, notes = _terms(fs, cs, x, nu)
    per = tuple((t.label, float(t.gradient @ nu)) for t in terms)
    return DirectionalDerivative(sum(c for _, c in per), per, frozenset(t.label for t in terms), notes)


def c_fraction(fs: FreeSpace, cfg: MetricConfig, anchor: ProjectedRay, x=None, nu=None) -> float:
    """Apex-weighted share of the anchor ray lying in the adversary domain."""
    r = anchor.length
    v, u = anchor.origin, anchor.direction
    D = cfg.d2.vertices
    E = np.roll(D, -1, axis=0) - D
    W = D - v
    denom = cross(u, E)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = cross(W, E) / denom
        t = cross(W, u) / denom
    ok = (np.abs(denom) > 0) & (t >= 0) & (t <= 1) & (s > 0) & (s < r)
    cuts = np.unique(np.concatenate([[0.0, r], s[ok]]))
    lo, hi = cuts[:-1], cuts[1:]
    mids = v + 0.5 * (lo + hi)[:, None] * u
    inside = ring_contains(mids, D)
    return float(np.sum((hi[inside] ** 2 - lo[inside] ** 2) / 2) / (r * r / 2))


def dd_metric(fs: FreeSpace, cs: CriticalStructure, cfg: MetricConfig, x, nu) -> DirectionalDerivative:
    terms, nu, notes = _terms(fs, cs, x, nu)
    per = tuple((t.label, float(t.gradient @ nu) * c_fraction(fs, cfg, t.ray)) for t in terms)
    return DirectionalDerivative(sum(c for _, c in per), per, frozenset(t.label for t in terms), notes)


def mu_dd(fs: FreeSpace, cs: CriticalStructure, x, nu) -> float:
    terms, nu, _ = _terms(fs, cs, x, nu)
    return float(sum(abs(t.gradient @ nu) for t in terms))


def fd_oracle(f, x, nu, h: float, central: bool = False) -> float:
    x = np.asarray(x, float)
    nu = np.asarray(nu, float)
    if central:
        return (f(x + h * nu) - f(x - h * nu)) / (2 * h)
    return (f(x + h * nu) - f(x)) / h


# ---------------------------------------------------------------- generalized gradient

@dataclass(frozen=True, eq=False)
class GeneralizedGradient:
    generators: tuple
    hull: np.ndarray
    faces: tuple = ()

    def contains_origin(self, tol: float = 0.0) -> bool:
        return cone_direction(self.generators, tol) is None

    def min_norm(self) -> float:
        """Distance from the origin to the hull."""
        H = self.hull
        if len(H) == 1:
            return float(np.hypot(*H[0]))
        if self.contains_origin():
            return 0.0
        best = math.inf
        for a, b in zip(H, np.roll(H, -1, axis=0)):
            d = b - a
            t = 0.0 if not d.any() else float(np.clip(-(a @ d) / (d @ d), 0, 1))
            best = min(best, float(np.hypot(*(a + t * d))))
        return best


def cone_direction(generators, tol: float = 0.0):
    """Unit u and aperture < pi with all generators inside the cone, or None when 0 is in the hull."""
    G = np.array(generators, float).reshape(-1, 2)
    norms = np.hypot(G[:, 0], G[:, 1])
    if len(G) == 0 or np.any(norms <= tol):
        return None
    ang = np.sort(np.arctan2(G[:, 1], G[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    k = int(np.argmax(gaps))
    if gaps[k] <= math.pi:
        return None
    aperture = 2 * math.pi - gaps[k]
    start = ang[(k + 1) % len(ang)]
    mid = start + aperture / 2
    return np.array([math.cos(mid), math.sin(mid)]), aperture


def _hull(G: np.ndarray) -> np.ndarray:
    U = np.unique(np.round(G, 14), axis=0)
    if len(U) <= 2:
        return U
    try:
        return U[ConvexHull(U).vertices]
    except QhullError:
        # collinear: keep the two extremes
        d = U - U.mean(axis=0)
        axis = np.linalg.svd(d)[2][0]
        s = d @ axis
        return U[[int(np.argmin(s)), int(np.argmax(s))]]


def face_gradient(fs: FreeSpace, face, x, probe, cfg: MetricConfig | None = None) -> np.ndarray:
    g = np.zeros(2)
    for vid in sorted(face.anchor_ids):
        t = anchor_term(fs, vid, as_point(x), as_point(probe))
        g += t.gradient * (1.0 if cfg is None else c_fraction(fs, cfg, t.ray))
    return g


def generalized_gradient(fs: FreeSpace, cs: CriticalStructure, cfg: MetricConfig | None, x,
                         objective: str = "metric", n_probe: int = 64) -> GeneralizedGradient:
    """Hull of the face-restricted gradients of all faces meeting ``x``."""
    x = as_point(x)
    _check_clearance(fs, x)
    use = cfg if objective == "metric" else None
    loc = locate(cs, x)
    if loc.face is not None:
        g = face_gradient(fs, cs.faces[loc.face], x, x, use)
        return GeneralizedGradient((g,), g[None, :], (loc.face,))
    rho = 10 * PROBE_REL * fs.bounding_diameter
    seen = {}
    for th in np.arange(n_probe) * 2 * math.pi / n_probe + 1e-3:
        p = x + rho * np.array([math.cos(th), math.sin(th)])
        if fs.classify(p)[0] < 0:
            continue
        lp = locate(cs, p)
        if lp.face is not None and lp.face not in seen:
            seen[lp.face] = face_gradient(fs, cs.faces[lp.face], x, p, use)
    faces = tuple(sorted(seen))
    G = np.array([seen[f] for f in faces])
    return GeneralizedGradient(tuple(G), _hull(G), faces)


# ---------------------------------------------------------------- gradient field

GRID_COLUMNS = ("x", "y", "g1", "g2", "norm", "face", "status", "fd_g1", "fd_g2", "fd_checked")


def _ray_hits_corner(fs, face, x, cfg, h) -> bool:
    D = cfg.d2.vertices
    for vid in face.anchor_ids:
        t = anchor_term(fs, vid, x, x)
        sweep = h * t.ray.length / math.hypot(*(x - t.ray.origin)) + h
        if np.any(point_segment_distance(D, t.ray.origin[None], t.ray.endpoint[None]).ravel() <= sweep):
            return True
    return False


def gradient_grid(fs: FreeSpace, cs: CriticalStructure, cfg: MetricConfig, region, n: int):
    """Analytic gradient of the metric on an n x n grid over ``region`` with FD cross-checks.

    Returns (rows, max relative error over smooth points). Points within the
    reflex-vertex exclusion radius or on an inflection segment are marked and skipped.
    """
    if n < 2:
        raise ValueError("grid resolution must be at least 2")
    verts = region.vertices
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    h = 1e-5 * fs.bounding_diameter
    eps_rv = RV_REL * fs.bounding_diameter
    analytic = cfg.range is None and cfg.fov is None

    def f(p):
        return evaluate(fs, cfg, p)

    segs_a = np.array([s.a for s in cs.segments]).reshape(-1, 2)
    segs_b = np.array([s.b for s in cs.segments]).reshape(-1, 2)
    rows, worst = [], 0.0
    for y in np.linspace(lo[1], hi[1], n):
        for x in np.linspace(lo[0], hi[0], n):
            p = np.array([x, y])
            if region.classify(p, fs.eps)[0] < 0 or fs.classify(p)[0] < 0:
                continue
            if min((math.hypot(*(p - r.vertex)) for r in fs.reflex), default=math.inf) < eps_rv:
                rows.append((x, y, None, None, None, None, "near_reflex", None, None, 0))
                continue
            dseg = point_segment_distance(p, segs_a, segs_b).min() if len(segs_a) else math.inf
            if dseg <= fs.eps:
                rows.append((x, y, None, None, None, None, "on_segment", None, None, 0))
                continue
            loc = locate(cs, p)
            face = loc.face
            smooth = dseg > 4 * h and fs.classify(p)[0] == 1 and all(
                fs.classify(p + s * h * e)[0] == 1 for s in (-1, 1) for e in np.eye(2)
            )
            fd = None
            if smooth:
                fd = np.array([fd_oracle(f, p, e, h, central=True) for e in np.eye(2)])
            if analytic:
                g = face_gradient(fs, cs.faces[face], p, p, cfg)
                # a ray sweeping across a D2 corner is a kink of the metric even inside a face
                if smooth and _ray_hits_corner(fs, cs.faces[face], p, cfg, 4 * h):
                    smooth, fd = False, None
            elif fd is not None:
                g = fd
            else:
                g = np.array([fd_oracle(f, p, e, h) for e in np.eye(2)])
            checked = int(analytic and fd is not None)
            if checked:
                worst = max(worst, float(np.hypot(*(g - fd)) / max(np.hypot(*fd), 1e-3 * fs.bounding_diameter)))
            rows.append((x, y, g[0], g[1], float(np.hypot(*g)), face, "ok",
                         None if fd is None else fd[0], None if fd is None else fd[1], checked))
    return rows, (worst if analytic else None)
