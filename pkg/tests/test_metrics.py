import math

import numpy as np
import pytest
import shapely

from conftest import FIG1_HOLE, FIG1_OUTER, FIG2_D1, FIG2_D2, free_points
from oracles import mc_visible_area, ring_edges
from visopt import Polygon
from visopt.errors import DomainError, ObserverOutsideFreeSpace
from visopt.metrics import (
    MetricConfig,
    Pose,
    disk_symdiff_formula,
    evaluate,
    lipschitz_estimate,
    metric_V,
    metric_V_area,
    metric_V_fov,
    metric_V_range,
    polygon_disk_area,
    regular_polygon,
    sym_diff_area,
)
from visopt.visibility import visibility_polygon, visibility_region

EDGES = ring_edges(FIG1_OUTER, [FIG1_HOLE])
# a nonconvex adversary domain straddling the obstacle
D2_L = [(-1, -1), (11, -1), (11, 1), (8, 1), (8, 4.5), (2, 4.5), (2, 0.5), (-1, 0.5)]


def test_fig2_origin_is_hidden(fig1, fig2_cfg):
    assert metric_V(fig1, fig2_cfg, (0, 0)) == 0.0


def test_fig1_value_at_2_2(fig1, fig2_cfg):
    assert math.isclose(metric_V(fig1, fig2_cfg, (2, 2)), 6.0, rel_tol=1e-12)
    assert math.isclose(metric_V_area(fig1, (2, 2)), 18.0, rel_tol=1e-12)


def test_d2_equal_free_space(fig1):
    # the obstacle is never visible, so D2 = outer ring measures the same set
    cfg = MetricConfig(Polygon.from_points(FIG1_OUTER))
    for x in free_points(fig1, 10, seed=2):
        assert metric_V(fig1, cfg, x) >= metric_V_area(fig1, x) - 1e-9
        assert math.isclose(metric_V(fig1, cfg, x), metric_V_area(fig1, x), rel_tol=1e-9)


def test_convex_area_constant(square):
    for x in [(1, 1), (5, 5), (9.5, 0.5)]:
        assert math.isclose(metric_V_area(square, x), 100.0)


@pytest.mark.parametrize("d2", [FIG2_D2, D2_L])
def test_metric_matches_monte_carlo(fig1, d2):
    cfg = MetricConfig(Polygon.from_points(d2))
    shape = shapely.Polygon(d2)
    rng = np.random.default_rng(11)
    for x in free_points(fig1, 10, seed=40):
        est, se = mc_visible_area(shape, EDGES, x, 100_000, rng)
        assert abs(metric_V(fig1, cfg, x) - est) <= 3 * se + 1e-12


def test_range_matches_monte_carlo(fig1):
    cfg = MetricConfig(Polygon.from_points(D2_L), range=3.0)
    rng = np.random.default_rng(12)
    for x in free_points(fig1, 5, seed=41):
        est, se = mc_visible_area(shapely.Polygon(D2_L), EDGES, x, 100_000, rng, R=3.0)
        assert abs(metric_V_range(fig1, cfg, x) - est) <= 3 * se + 1e-12


def test_fov_matches_monte_carlo(fig1):
    cfg = MetricConfig(Polygon.from_points(D2_L), range=4.0, fov=1.5)
    rng = np.random.default_rng(13)
    heads = np.random.default_rng(3).uniform(0, 2 * math.pi, 5)
    for x, th in zip(free_points(fig1, 5, seed=42), heads):
        est, se = mc_visible_area(shapely.Polygon(D2_L), EDGES, x, 100_000, rng, R=4.0,
                                  heading=th, aperture=1.5)
        assert abs(metric_V_fov(fig1, cfg, Pose(tuple(x), th)) - est) <= 3 * se + 1e-12


def test_nesting(fig1):
    full = MetricConfig(Polygon.from_points(D2_L))
    ranged = MetricConfig(full.d2, range=2.5)
    fov = MetricConfig(full.d2, range=2.5, fov=2.0)
    for k, x in enumerate(free_points(fig1, 40, seed=9)):
        a = metric_V_fov(fig1, fov, Pose(tuple(x), 0.7 * k))
        b = metric_V_range(fig1, ranged, x)
        c = metric_V(fig1, full, x)
        d = metric_V_area(fig1, x)
        assert a <= b + 1e-9 and b <= c + 1e-9 and c <= d + 1e-9
        assert c <= full.d2.area + 1e-9


def test_large_range_equals_metric(fig1, fig2_cfg):
    cfg = MetricConfig(fig2_cfg.d2, range=2 * fig1.bounding_diameter)
    for x in free_points(fig1, 10, seed=6):
        assert math.isclose(metric_V_range(fig1, cfg, x), metric_V(fig1, fig2_cfg, x), abs_tol=1e-9)


def test_full_aperture_equals_range(fig1):
    r = MetricConfig(Polygon.from_points(D2_L), range=3.0)
    f = MetricConfig(r.d2, range=3.0, fov=2 * math.pi)
    for x in free_points(fig1, 10, seed=7):
        assert metric_V_fov(fig1, f, Pose(tuple(x), 1.234)) == metric_V_range(fig1, r, x)


def test_fov_periodic(fig1):
    cfg = MetricConfig(Polygon.from_points(D2_L), range=3.0, fov=1.0)
    for x in free_points(fig1, 10, seed=8):
        for th in (0.0, 1.0, 4.0):
            assert metric_V_fov(fig1, cfg, Pose(tuple(x), th)) == \
                metric_V_fov(fig1, cfg, Pose(tuple(x), th + 2 * math.pi))
    assert Pose((0, 0), -0.5).heading == pytest.approx(2 * math.pi - 0.5)


def test_small_range_limit(fig1):
    cfg_d2 = Polygon.from_points([(0, -0.5), (10, -0.5), (10, 0.5), (0, 0.5)])
    R = 1e-3 * fig1.bounding_diameter
    cfg = MetricConfig(cfg_d2, range=R)
    assert metric_V_range(fig1, cfg, (5, 0)) / (math.pi * R * R) == pytest.approx(1.0, abs=1e-9)


def test_evaluate_dispatch(fig1):
    d2 = Polygon.from_points(D2_L)
    x = (2, 0)
    assert evaluate(fig1, MetricConfig(d2), x) == metric_V(fig1, MetricConfig(d2), x)
    r = MetricConfig(d2, range=2.0)
    assert evaluate(fig1, r, x) == metric_V_range(fig1, r, x)
    f = MetricConfig(d2, range=2.0, fov=1.0)
    assert evaluate(fig1, f, x, 0.3) == metric_V_fov(fig1, f, Pose(x, 0.3))


def test_outside_observer(fig1, fig2_cfg):
    with pytest.raises(ObserverOutsideFreeSpace):
        metric_V(fig1, fig2_cfg, (5, 2))
    with pytest.raises(ObserverOutsideFreeSpace):
        metric_V_area(fig1, (20, 20))


def test_config_validation(fig1):
    with pytest.raises(ValueError):
        MetricConfig(Polygon.from_points(FIG2_D2), range=0.0)
    with pytest.raises(ValueError):
        MetricConfig(Polygon.from_points(FIG2_D2), fov=7.0)
    with pytest.raises(ValueError):
        MetricConfig(Polygon.from_points([(4, 0), (6, 0), (6, 2), (4, 2)])).validate(fig1)


def test_metric_matches_shapely_intersection(fig1):
    d2s = [FIG2_D2, D2_L, FIG2_D1]
    for d2 in d2s:
        cfg = MetricConfig(Polygon.from_points(d2))
        for x in free_points(fig1, 40, seed=14):
            vis = shapely.Polygon(visibility_polygon(fig1, x).vertices)
            ref = vis.intersection(shapely.Polygon(d2)).area
            assert metric_V(fig1, cfg, x) == pytest.approx(ref, abs=1e-9)


# ---------------------------------------------------------------- measure utilities

def test_polygon_disk_area_cases():
    sq = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], float)
    assert polygon_disk_area(sq, (0.5, 0.5), math.inf) == pytest.approx(1.0)
    assert polygon_disk_area(sq, (0.5, 0.5), 0.1) == pytest.approx(math.pi * 0.01)
    assert polygon_disk_area(sq, (0, 0), 0.5) == pytest.approx(math.pi * 0.25 / 4)
    assert polygon_disk_area(sq, (0.5, 0.5), 10) == pytest.approx(1.0)


def test_sym_diff_basics():
    a = [(0, 0), (1, 0), (1, 1), (0, 1)]
    b = [(2, 0), (3, 0), (3, 2), (2, 2)]
    c = [(0.5, 0), (1.5, 0), (1.5, 1), (0.5, 1)]
    assert sym_diff_area(a, a) == 0
    assert sym_diff_area(a, b) == pytest.approx(3.0)
    assert sym_diff_area(a, c) == pytest.approx(1.0)
    assert sym_diff_area(a, b) <= sym_diff_area(a, c) + sym_diff_area(c, b) + 1e-12


def test_disk_formula_values():
    assert disk_symdiff_formula(1.0, 0.0) == 0.0
    assert disk_symdiff_formula(1.5, 3.0) == pytest.approx(2 * math.pi * 1.5 ** 2)
    assert disk_symdiff_formula(1.0, 1.0) == pytest.approx(2 * math.pi / 3 + math.sqrt(3))
    disk = regular_polygon((0, 0), 1.0)
    moved = regular_polygon((1, 0), 1.0)
    assert sym_diff_area(disk, moved) == pytest.approx(2 * math.pi / 3 + math.sqrt(3), rel=1e-3)


def test_disk_formula_by_integration():
    # direct quadrature of the lens overlap
    R, d = 1.3, 0.7
    y = np.linspace(-R, R, 200_001)
    half = np.sqrt(np.maximum(R * R - y * y, 0))
    overlap = np.clip(2 * half - d, 0, None)
    lens = float(np.sum((overlap[1:] + overlap[:-1]) / 2 * np.diff(y)))
    assert disk_symdiff_formula(R, d) == pytest.approx(2 * (math.pi * R * R - lens), rel=1e-6)


@pytest.mark.parametrize("R,d", [(0.0, 0.0), (-1.0, 0.5), (1.0, 2.5), (1.0, -0.1)])
def test_disk_formula_domain(R, d):
    with pytest.raises(DomainError):
        disk_symdiff_formula(R, d)


def test_region_sym_diff_with_arcs(fig1):
    a = visibility_region(fig1, (2, 0), R=1.0)
    b = visibility_region(fig1, (2.5, 0), R=1.0)
    # both disks fit in the free space, so the region identity applies
    assert sym_diff_area(a, b) == pytest.approx(disk_symdiff_formula(1.0, 0.5), rel=1e-3)


def test_lipschitz_fig1(fig1, square):
    roi = Polygon.from_points([(4.5, 3.5), (8, 3.5), (8, 4.5), (4.5, 4.5)])
    est = lipschitz_estimate(fig1, None, roi, 30, delta=0.5, seed=1)
    assert est.bound == pytest.approx(6 * fig1.bounding_diameter ** 2 / 2)
    assert est.estimate <= est.bound
    near = lipschitz_estimate(fig1, None, roi, 30, delta=0.5, pair_distance=1e-4, seed=1)
    assert near.estimate <= 2 * est.estimate + 1.0
    conv = lipschitz_estimate(square, None, Polygon.from_points([(2, 2), (8, 2), (8, 8), (2, 8)]),
                              10, delta=1.0, seed=0)
    assert conv.estimate == pytest.approx(0.0, abs=1e-6)
    assert conv.bound >= conv.estimate - 1e-9  # boolean-op round-off


def test_metric_locally_lipschitz(fig1, fig2_cfg):
    nu = np.array([0.6, -0.8])
    for x in free_points(fig1, 15, seed=19):
        if min(np.hypot(*(x - r.vertex)) for r in fig1.reflex) < 0.2:
            continue
        base = metric_V(fig1, fig2_cfg, x)
        ratios = []
        for h in (1e-3, 1e-5, 1e-7):
            y = x + h * nu
            if fig1.classify(y)[0] < 1:
                break
            ratios.append(abs(metric_V(fig1, fig2_cfg, y) - base) / h)
        assert all(r <= fig1.bounding_diameter ** 2 for r in ratios)
