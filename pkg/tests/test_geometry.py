import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIG1_HOLE, FIG1_OUTER, free_points
from oracles import ring_edges, line_of_sight
from visopt import Environment, Polygon, build_free_space
from visopt.errors import DegenerateRay, HoleOutsideOuter, InvalidPolygon, OverlappingHoles
from visopt.geometry import (
    Where,
    direction_feasible,
    point_in_free_space,
    project_ray,
    project_rotated_ray,
    ray_bundle,
    segment_in_free_space,
)


def labels_of(fs):
    return {fs.labels[r.id] for r in fs.reflex}


# ---------------------------------------------------------------- construction

def test_fig1_reflex_set(fig1):
    assert labels_of(fig1) == {"q3", "q6", "o1", "o2", "o3", "o4"}
    assert np.allclose(fig1.vertices[fig1.vertex_id("q3")], (1, 1))
    assert np.allclose(fig1.vertices[fig1.vertex_id("q6")], (9, 1))
    assert np.allclose(fig1.vertices[fig1.vertex_id("o1")], (3, 1))
    assert np.allclose(fig1.vertices[fig1.vertex_id("o4")], (3, 3))


def test_square_has_no_reflex(square):
    assert square.reflex == ()


def test_hole_vertices_all_reflex():
    fs = build_free_space(Environment.from_lists(
        [(0, 0), (1, 0), (1, 1), (0, 1)], [[(0.3, 0.3), (0.7, 0.3), (0.7, 0.7), (0.3, 0.7)]]))
    assert len(fs.reflex) == 4
    assert {fs.labels[r.id] for r in fs.reflex} == {"o1", "o2", "o3", "o4"}


def test_input_orientation_is_normalized():
    cw_outer = FIG1_OUTER[:1] + FIG1_OUTER[1:][::-1]
    a = build_free_space(Environment.from_lists(FIG1_OUTER, [FIG1_HOLE]))
    b = build_free_space(Environment.from_lists(cw_outer, [FIG1_HOLE[::-1]]))
    assert np.allclose(a.vertices[: len(FIG1_OUTER)], b.vertices[: len(FIG1_OUTER)])
    assert labels_of(a) == labels_of(b)


def test_rebuild_is_identical(fig1):
    again = build_free_space(fig1.env)
    assert np.array_equal(again.vertices, fig1.vertices)
    assert [r.id for r in again.reflex] == [r.id for r in fig1.reflex]


def test_reflex_edge_directions(fig1):
    info = fig1.reflex_info(fig1.vertex_id("q3"))
    assert math.isclose(np.hypot(*info.e1_hat), 1.0, abs_tol=1e-12)
    prev = fig1.vertices[info.prev_id]
    assert np.allclose(info.e1_hat, (prev - info.vertex) / np.hypot(*(prev - info.vertex)))


def test_bounding_diameter(fig1):
    outer = np.array(FIG1_OUTER, float)
    far = max(np.hypot(*(p - q)) for p in outer for q in outer)
    assert fig1.bounding_diameter >= far - 1e-12


@pytest.mark.parametrize("pts", [
    [(0, 0), (1, 0)],
    [(0, 0), (1, 1), (1, 0), (0, 1)],  # bow tie
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (float("nan"), 0), (1, 1)],
])
def test_invalid_polygons(pts):
    with pytest.raises(InvalidPolygon):
        Polygon.from_points(pts)


def test_hole_outside_and_overlap():
    sq = [(0, 0), (4, 0), (4, 4), (0, 4)]
    with pytest.raises(HoleOutsideOuter):
        build_free_space(Environment.from_lists(sq, [[(3, 3), (5, 3), (5, 5), (3, 5)]]))
    with pytest.raises(HoleOutsideOuter):
        build_free_space(Environment.from_lists(sq, [[(0, 1), (1, 1), (1, 2), (0, 2)]]))
    with pytest.raises(OverlappingHoles):
        build_free_space(Environment.from_lists(
            sq, [[(1, 1), (2, 1), (2, 2), (1, 2)], [(1.5, 1.5), (3, 1.5), (3, 3), (1.5, 3)]]))


# ---------------------------------------------------------------- membership

@pytest.mark.parametrize("p,where", [((5, 2), Where.EXTERIOR), ((2, 2), Where.INTERIOR),
                                     ((1, 1), Where.BOUNDARY), ((20, 0), Where.EXTERIOR),
                                     ((5, 1), Where.BOUNDARY)])
def test_point_in_free_space(fig1, p, where):
    assert point_in_free_space(fig1, p) is where


def test_segment_examples(fig1):
    assert segment_in_free_space(fig1, (2, 2), (1, 1))
    assert not segment_in_free_space(fig1, (2, 2), (8, 2))
    assert segment_in_free_space(fig1, (2, 2), (2, 2))
    # grazing along the hole's bottom edge is allowed
    assert segment_in_free_space(fig1, (2, 1), (8, 1))


def test_segment_matches_crossing_oracle(fig1):
    P = free_points(fig1, 400, seed=11)
    edges = ring_edges(FIG1_OUTER, [FIG1_HOLE])
    for a, b in zip(P[::2], P[1::2]):
        assert segment_in_free_space(fig1, a, b) == bool(line_of_sight(edges, a, b[None])[0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_segment_symmetry(seed):
    fs = _FIG1
    a, b = free_points(fs, 2, seed)
    assert segment_in_free_space(fs, a, b) == segment_in_free_space(fs, b, a)


_FIG1 = build_free_space(Environment.from_lists(FIG1_OUTER, [FIG1_HOLE]))


# ---------------------------------------------------------------- rays

def test_project_ray_o4(fig1):
    ray = project_ray(fig1, (3, 3), (2, 2))
    assert np.allclose(ray.direction, (1 / math.sqrt(2), 1 / math.sqrt(2)))
    assert np.allclose(ray.endpoint, (5, 5))
    assert math.isclose(ray.length, 2 * math.sqrt(2))


def test_project_ray_q4_is_infinite(fig1):
    assert project_ray(fig1, (1, 5), (2, 2)).length == math.inf


def test_project_ray_square(square):
    ray = project_ray(square, (5, 5), (5, 2))
    assert np.allclose(ray.endpoint, (5, 10))


def test_degenerate_ray(fig1):
    with pytest.raises(DegenerateRay):
        project_ray(fig1, (2, 2), (2, 2))


def test_rotated_ray_zero_is_plain(fig1):
    a = project_ray(fig1, (3, 1), (2, 2))
    b = project_rotated_ray(fig1, (3, 1), (2, 2), 0.0)
    assert np.allclose(a.endpoint, b.endpoint)


def test_rotated_ray_slides_along_bottom_wall(fig1):
    base = project_ray(fig1, (3, 1), (2, 2)).endpoint
    assert np.allclose(base, (5, -1))
    xs = [project_rotated_ray(fig1, (3, 1), (2, 2), th).endpoint for th in (0.02, 0.05, 0.1)]
    assert all(math.isclose(p[1], -1, abs_tol=1e-9) for p in xs)
    assert all(4.5 <= p[0] < 5 for p in xs)
    assert xs[0][0] > xs[1][0] > xs[2][0]
    assert np.allclose(project_rotated_ray(fig1, (3, 1), (2, 2), math.atan(1 / 3)).endpoint, (4, -1))


def test_rotated_ray_pi_points_back(fig1):
    ray = project_rotated_ray(fig1, (3, 1), (2, 2), math.pi)
    assert ray.length >= math.hypot(1, 1) - 1e-9
    assert segment_in_free_space(fig1, ray.origin, ray.endpoint)


def test_ray_bundle(fig1):
    b = ray_bundle(fig1, (1, 1), (2, 2), 0.0, 0.1, 2)
    assert np.allclose(b[0].endpoint, project_rotated_ray(fig1, (1, 1), (2, 2), 0.0).endpoint)
    assert np.allclose(b[1].endpoint, project_rotated_ray(fig1, (1, 1), (2, 2), 0.1).endpoint)
    same = ray_bundle(fig1, (1, 1), (2, 2), 0.05, 0.05, 3)
    assert len({tuple(np.round(r.endpoint, 12)) for r in same}) == 1
    fan = ray_bundle(fig1, (1, 1), (2, 2), 0.0, 0.05, 5)
    assert all(np.hypot(*(r.endpoint - (-1, -1))) < 0.2 for r in fan)
    with pytest.raises(ValueError):
        ray_bundle(fig1, (1, 1), (2, 2), 0.1, 0.0, 3)


def test_ray_interior_in_free_space(fig1):
    for x in free_points(fig1, 40, seed=3):
        for r in fig1.reflex:
            ray = project_ray(fig1, r.vertex, x)
            if math.isfinite(ray.length):
                mid = ray.origin + 0.5 * ray.length * ray.direction
                assert fig1.classify(mid)[0] >= 0
                assert fig1.classify(ray.endpoint)[0] == 0


def test_grazing_flag():
    # the ray along y=2 touches the lower tip (2,2) of a triangle hole and runs on
    fs = build_free_space(Environment.from_lists(
        [(-2, 0), (6, 0), (6, 4), (-2, 4)], [[(2, 2), (3, 3), (1, 3)]]))
    ray = project_ray(fs, (0, 2), (-1, 2))
    assert ray.grazing
    assert math.isclose(ray.length, 6)
    assert not project_ray(fs, (0, 2), (-1, 1.5)).grazing


def test_direction_feasible(fig1):
    assert direction_feasible(fig1, (2, 2), (1, 0), 0.1)
    assert not direction_feasible(fig1, (5, -1), (0, -1), 0.1)
    assert direction_feasible(fig1, (1, 1), (1, 0), 0.5)
