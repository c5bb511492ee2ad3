"""Norcent: normalized generalized-gradient descent with randomized escape steps."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .critical import CriticalStructure
from .errors import InfeasibleDirection, InfiniteRay, TooCloseToReflexVertex, VisoptError
from .geometry import GEOM_REL, FreeSpace, Polygon, as_point, point_segment_distance, unit
from .gradients import RV_REL, dd_metric
from .metrics import MetricConfig, metric_V, metric_V_range

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class NorcentConfig:
    a0: float
    b0: float
    dth0: float
    delta_tol: float
    fd_h: float
    p_a: float = 0.75
    p_b: float = 0.5
    p_th: float = 0.25
    max_iter: int = 5000
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.p_a <= 1:
            raise ValueError("p_a must lie in (1/2, 1]")
        if not 0 < self.p_b <= 0.5:
            raise ValueError("p_b must lie in (0, 1/2]")
        if not self.p_th > 0:
            raise ValueError("p_th must be positive")
        for name in ("a0", "b0", "dth0", "delta_tol", "fd_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.patience < 1:
            raise ValueError("max_iter and patience must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def defaults(cls, fs: FreeSpace, **overrides) -> "NorcentConfig":
        D = fs.bounding_diameter
        base = dict(a0=0.05 * D, b0=0.02 * D, dth0=1e-3 * D, delta_tol=1e-10 * fs.area, fd_h=1e-6 * D)
        base.update(overrides)
        return cls(**base)

    def a(self, k: int) -> float:
        return self.a0 / (1 + k) ** self.p_a

    def b(self, k: int) -> float:
        return self.b0 / (1 + k) ** self.p_b

    def dth(self, k: int) -> float:
        return self.dth0 / (1 + k) ** self.p_th


def project_to_domain(d1: Polygon, x, eps: float | None = None):
    """Nearest point of ``d1`` to ``x`` and the number of tied nearest points."""
    x = as_point(x)
    if eps is None:
        eps = GEOM_REL * float(np.max(np.ptp(d1.vertices, axis=0)))
    if d1.classify(x, eps)[0] >= 0:
        return x, 1
    A, B = d1.edges()
    S = B - A
    t = np.clip(np.sum((x - A) * S, axis=1) / np.sum(S * S, axis=1), 0, 1)
    F = A + t[:, None] * S
    d = np.hypot(*(F - x).T)
    close = F[d <= d.min() + eps]
    distinct = []
    for p in close[np.lexsort((close[:, 1], close[:, 0]))]:
        if not distinct or np.hypot(*(p - distinct[-1])) > eps:
            distinct.append(p)
    return distinct[0], len(distinct)


class AugmentedObjective:
    """Metric of the projection onto D1 plus (minimize) or minus (maximize) the distance to D1."""

    def __init__(self, fs: FreeSpace, cs: CriticalStructure, cfg: MetricConfig, d1: Polygon,
                 mode: str = "min"):
        if mode not in ("min", "max"):
            raise ValueError("mode must be 'min' or 'max'")
        self.fs, self.cs, self.cfg, self.mode = fs, cs, cfg, mode
        self.d1 = d1.oriented("ccw")
        self.base = "V_range" if cfg.range is not None else "V"
        self.sign = 1.0 if mode == "min" else -1.0

    def project(self, x):
        return project_to_domain(self.d1, x, self.fs.eps)

    def in_d1(self, x) -> bool:
        return bool(self.d1.classify(as_point(x), self.fs.eps)[0] >= 0)

    def dist_d1(self, x) -> float:
        p, _ = self.project(x)
        return float(np.hypot(*(as_point(x) - p)))

    def base_value(self, p) -> float:
        if self.base == "V":
            return metric_V(self.fs, self.cfg, p)
        return metric_V_range(self.fs, self.cfg, p)

    def value(self, x) -> float:
        x = as_point(x)
        p, _ = self.project(x)
        return self.base_value(p) + self.sign * float(np.hypot(*(x - p)))

    def descent_value(self, x) -> float:
        """The function Norcent decreases: the value itself, or its negation when maximizing."""
        return self.sign * self.value(x)

    def _interior_margin(self, x) -> float:
        A, B = self.d1.edges()
        return float(point_segment_distance(x, A, B).min())

    def directional(self, x, nu, h: float, rng=None):
        """One-sided derivative of the descent objective; returns (value, method)."""
        x = as_point(x)
        nu = unit(nu)
        eps_rv = RV_REL * self.fs.bounding_diameter
        if (self.base == "V" and self.d1.classify(x, self.fs.eps)[0] > 0
                and self._interior_margin(x) > 2 * max(h, eps_rv)):
            try:
                return self.sign * dd_metric(self.fs, self.cs, self.cfg, x, nu).value, "analytic"
            except TooCloseToReflexVertex as err:
                if rng is not None:
                    th = rng.uniform(0, TWO_PI)
                    y = x + eps_rv * np.array([math.cos(th), math.sin(th)])
                    try:
                        val = dd_metric(self.fs, self.cs, self.cfg, y, nu).value
                        return self.sign * val, f"perturbed near {err.vertex}"
                    except VisoptError:
                        pass
            except (InfeasibleDirection, InfiniteRay):
                pass
        f0 = self.descent_value(x)
        return (self.descent_value(x + h * nu) - f0) / h, "fd"

    def gradient(self, x, h: float, rng=None):
        g1, m1 = self.directional(x, (1.0, 0.0), h, rng)
        g2, m2 = self.directional(x, (0.0, 1.0), h, rng)
        return np.array([g1, g2]), (m1, m2)


# ---------------------------------------------------------------- runs

@dataclass(frozen=True)
class Iterate:
    k: int
    x: float
    y: float
    value: float
    grad_norm: float
    step_kind: str
    gx: float = math.nan  # Line-5 gradient of the descent objective
    gy: float = math.nan


@dataclass
class NorcentRun:
    iterates: list
    final: tuple
    converged: bool
    seed_used: int
    start: tuple
    diagnostics: list = field(default_factory=list)
    error: str | None = None

    def positions(self) -> np.ndarray:
        return np.array([(it.x, it.y) for it in self.iterates])

    @property
    def final_value(self) -> float:
        return self.iterates[-1].value

    def to_json(self, config: NorcentConfig | None = None) -> dict:
        out = {
            "seed": self.seed_used,
            "start": list(self.start),
            "final": list(self.final),
            "final_value": self.final_value if self.iterates else None,
            "converged": self.converged,
            "error": self.error,
            "diagnostics": list(self.diagnostics),
            "iterates": [asdict(it) for it in self.iterates],
        }
        if config is not None:
            out["config"] = asdict(config)
        return out


CSV_HEADER = ("run", "k", "x", "y", "value", "grad_norm", "step_kind")


def runs_to_csv(runs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r, run in enumerate(runs):
        for it in run.iterates:
            w.writerow([r, it.k, repr(it.x), repr(it.y), repr(it.value), repr(it.grad_norm), it.step_kind])
    return buf.getvalue()


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def norcent_step(obj: AugmentedObjective, cfg: NorcentConfig, x, k: int, rng: np.random.Generator):
    """One iteration; returns (x_next, step_kind, gradient, notes)."""
    x = as_point(x)
    g, methods = obj.gradient(x, cfg.fd_h, rng)
    g0 = g
    norm = float(np.hypot(*g))
    notes = [m for m in methods if m not in ("analytic", "fd")]
    if norm <= cfg.dth(k) and obj.in_d1(x):
        th = rng.uniform(0, TWO_PI)
        return x - cfg.b(k) * np.array([math.cos(th), math.sin(th)]), "random", g, notes
    if norm == 0.0:
        # outside D1 with a vanishing difference quotient: head for the projection
        p, _ = obj.project(x)
        g = x - p
        notes.append("zero gradient outside D1")
    return x - cfg.a(k) * g / np.hypot(*g), "gradient", g0, notes


def run_norcent(obj: AugmentedObjective, cfg: NorcentConfig, x0) -> NorcentRun:
    x = as_point(x0)
    if obj.dist_d1(x) > cfg.a0 + obj.fs.eps:
        raise ValueError(f"start {tuple(x)} is farther than a0 from D1")
    rng = make_rng(cfg.seed)
    rows, diags = [], []
    val = obj.value(x)
    quiet = 0
    converged = False
    for k in range(cfg.max_iter):
        x_new, kind, g, notes = norcent_step(obj, cfg, x, k, rng)
        diags += [f"k={k}: {n}" for n in notes]
        rows.append(Iterate(k, float(x[0]), float(x[1]), val, float(np.hypot(*g)), kind, float(g[0]), float(g[1])))
        new_val = obj.value(x_new)
        quiet = quiet + 1 if abs(new_val - val) < cfg.delta_tol else 0
        x, val = x_new, new_val
        if quiet >= cfg.patience:
            converged = True
            break
    rows.append(Iterate(len(rows), float(x[0]), float(x[1]), val, float("nan"), "stop"))
    if obj.mode == "min" and converged and not obj.in_d1(x):
        diags.append("final point outside D1")
    return NorcentRun(rows, (float(x[0]), float(x[1])), converged, cfg.seed, tuple(map(float, x0)), diags)


def _one(obj, cfg, i, start):
    c = replace(cfg, seed=cfg.seed ^ i)
    try:
        return run_norcent(obj, c, start)
    except (VisoptError, ValueError) as err:
        s = tuple(map(float, start))
        return NorcentRun([], s, False, c.seed, s, [], f"{type(err).__name__}: {err}")


def run_multistart(obj: AugmentedObjective, cfg: NorcentConfig, starts, parallel: bool = False,
                   workers: int | None = None) -> list:
    """Independent runs with seeds ``seed ^ i``; result order follows ``starts``."""
    jobs = list(enumerate(starts))
    if not parallel:
        return [_one(obj, cfg, i, s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _one(obj, cfg, *job), jobs))


# ---------------------------------------------------------------- optimality check

def compass_test(obj: AugmentedObjective, x, tol: float, n: int = 16, h: float | None = None):
    """One-sided derivatives of the descent objective in ``n`` compass directions feasible in D1.

    Returns (passed, list of (angle, derivative)); passes when none is below ``-tol``.
    """
    x = as_point(x)
    h = 1e-6 * obj.fs.bounding_diameter if h is None else h
    out = []
    for th in np.arange(n) * TWO_PI / n:
        nu = np.array([math.cos(th), math.sin(th)])
        if not obj.in_d1(x + h * nu):
            continue
        d, _ = obj.directional(x, nu, h)
        out.append((float(th), float(d)))
    return all(d >= -tol for _, d in out), out
