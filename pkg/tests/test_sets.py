import math

import numpy as np
import pytest

from cycproj.poly import Polynomial
from cycproj.sets import (
    Ball,
    ConvexSetDescriptor,
    FeasibilityProblem,
    Halfspace,
    PowerEpigraph,
    ProjectionError,
    ProjectionTolerances,
    Singleton,
    AffineSegment,
    distance,
    project,
    residual,
    vdist,
)
from helpers import brute_force_distances

LEFT_DISK_POLY = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (1, 0): 2.0})


def left_disk():
    return ConvexSetDescriptor("left-disk", [LEFT_DISK_POLY], Ball((-1.0, 0.0), 1.0))


def halfplane_x():
    return ConvexSetDescriptor(
        "x<=0", [Polynomial(2, {(1, 0): 1.0})], Halfspace((1.0, 0.0), 0.0)
    )


def parabola_region():
    return ConvexSetDescriptor("y^2<=x", [Polynomial(2, {(0, 2): 1.0, (1, 0): -1.0})])


# -- residual ---------------------------------------------------------------


def test_residual_interior_point_is_zero():
    assert residual(halfplane_x(), (-1.0, 5.0)) == 0.0


def test_residual_boundary_point_of_disk():
    assert residual(left_disk(), (0.0, 0.0)) == 0.0


def test_residual_of_parabola_region():
    assert residual(parabola_region(), (0.0, 1.0)) == 1.0


def test_residual_dimension_mismatch():
    with pytest.raises(ValueError):
        residual(left_disk(), (1.0,))


# -- descriptor validation ---------------------------------------------------


def test_empty_constraint_list_rejected():
    with pytest.raises(ValueError):
        ConvexSetDescriptor("empty", [])


def test_mixed_dimensions_rejected():
    with pytest.raises(ValueError):
        ConvexSetDescriptor(
            "mixed", [Polynomial(2, {(1, 0): 1.0}), Polynomial(1, {(1,): 1.0})]
        )


def test_hint_must_match_constraints():
    with pytest.raises(ValueError):
        ConvexSetDescriptor("bad", [LEFT_DISK_POLY], Ball((-1.0, 0.0), 2.0))
    with pytest.raises(ValueError):
        ConvexSetDescriptor("bad", [Polynomial(2, {(1, 0): 1.0})], Halfspace((1.0, 1.0), 0.0))
    # power epigraph hint validates against y^d - x
    ConvexSetDescriptor(
        "ok",
        [Polynomial(2, {(0, 4): 1.0, (1, 0): -1.0})],
        PowerEpigraph(4),
    )
    with pytest.raises(ValueError):
        ConvexSetDescriptor(
            "bad",
            [Polynomial(2, {(0, 2): 1.0, (1, 0): -1.0})],
            PowerEpigraph(4),
        )


def test_problem_max_degree_and_validation():
    prob = FeasibilityProblem(2, [left_disk(), halfplane_x()])
    assert prob.max_degree == 2
    with pytest.raises(ValueError):
        FeasibilityProblem(2, [left_disk()], max_degree=3)
    with pytest.raises(ValueError):
        FeasibilityProblem(2, [])
    with pytest.raises(ValueError):
        FeasibilityProblem(3, [left_disk()])


# -- projection dispatch -----------------------------------------------------


def test_project_feasible_point_unchanged():
    s = left_disk()
    x = (-1.2, 0.3)
    assert project(s, x) == x


def test_project_ball_closed_form():
    # projection of (1, 0) onto the unit disk centered at (-1, 0)
    assert project(left_disk(), (1.0, 0.0)) == (0.0, 0.0)
    y = project(left_disk(), (-1.0, 3.0))
    assert vdist(y, (-1.0, 1.0)) <= 1e-15


def test_project_halfspace_closed_form():
    s = ConvexSetDescriptor(
        "plane", [Polynomial(2, {(1, 0): 1.0, (0, 1): 1.0, (0, 0): -1.0})], Halfspace((1.0, 1.0), 1.0)
    )
    y = project(s, (2.0, 2.0))
    assert vdist(y, (0.5, 0.5)) <= 1e-15


def test_project_single_constraint_kkt_parabola():
    s = parabola_region()
    for y0 in (0.5, 1.0, 2.0):
        y = project(s, (0.0, y0))
        # stationarity of the boundary minimization: 2 t^3 + t = y0
        t = y[1]
        assert abs(2.0 * t**3 + t - y0) <= 1e-9
        assert abs(y[0] - t * t) <= 1e-9


def test_project_penalty_polyhedral_corner():
    corner = ConvexSetDescriptor(
        "corner", [Polynomial(2, {(1, 0): 1.0}), Polynomial(2, {(0, 1): 1.0})]
    )
    y = project(corner, (1.0, 1.0))
    assert vdist(y, (0.0, 0.0)) <= 1e-9


def test_project_penalty_disk_cap_corner():
    cap = ConvexSetDescriptor(
        "cap",
        [
            Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0}),
            Polynomial(2, {(1, 0): 1.0, (0, 1): -1.0}),
        ],
    )
    y = project(cap, (2.0, 0.0))
    corner_pt = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    assert vdist(y, corner_pt) <= 1e-9
    # smooth part of the same set goes through the single-constraint branch
    y = project(cap, (-2.0, 0.5))
    nrm = math.hypot(2.0, 0.5)
    assert vdist(y, (-2.0 / nrm, 0.5 / nrm)) <= 1e-9


def test_project_degenerate_thin_set():
    thin = ConvexSetDescriptor("thin", [Polynomial(2, {(2, 0): 1.0})])
    y = project(thin, (0.3, 0.7))
    assert abs(y[0]) <= 1e-5 and y[1] == 0.7


def test_project_empty_set_raises_with_best_iterate():
    empty = ConvexSetDescriptor("empty", [Polynomial(1, {(2,): 1.0, (0,): 1.0})])
    with pytest.raises(ProjectionError) as exc_info:
        project(empty, (2.0,))
    assert exc_info.value.best is not None
    assert exc_info.value.feasibility > 0.9  # x^2 + 1 >= 1 everywhere


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(left_disk(), (1.0, 2.0, 3.0))


def test_projection_is_deterministic():
    s = parabola_region()
    assert project(s, (-0.3, 1.7)) == project(s, (-0.3, 1.7))


def test_tolerances_validation():
    with pytest.raises(ValueError):
        ProjectionTolerances(feasibility=0.0)


# -- distance -----------------------------------------------------------------


def test_distance_feasible_point():
    assert distance(left_disk(), (-1.0, 0.0)) == 0.0


def test_distance_halfspace():
    assert distance(halfplane_x(), (3.0, 4.0)) == 3.0


def test_distance_quartic_ball_on_axis():
    n = 2
    terms = {
        (4, 0): 1.0,
        (3, 0): 4.0,
        (2, 0): 6.0,
        (1, 0): 4.0,
        (0, 4): 1.0,
    }
    quartic = ConvexSetDescriptor("quartic", [Polynomial(n, terms)])
    assert abs(distance(quartic, (2.0, 0.0)) - 2.0) <= 1e-9


# -- operator properties (small scale; the full suite runs in acceptance) ----


def _sample_sets():
    return [left_disk(), halfplane_x(), parabola_region()]


def test_projection_idempotent_small():
    rng = np.random.default_rng(5)
    for s in _sample_sets():
        for _ in range(50):
            x = tuple(rng.uniform(-2.5, 2.5, size=2))
            y = project(s, x)
            assert vdist(project(s, y), y) <= 1e-8


def test_projection_nonexpansive_small():
    rng = np.random.default_rng(6)
    for s in _sample_sets():
        for _ in range(50):
            x = tuple(rng.uniform(-2.5, 2.5, size=2))
            y = tuple(rng.uniform(-2.5, 2.5, size=2))
            assert vdist(project(s, x), project(s, y)) <= vdist(x, y) + 1e-8


def test_variational_inequality_small():
    rng = np.random.default_rng(8)
    for s in _sample_sets():
        feas = []
        while len(feas) < 20:
            c = project(s, tuple(rng.uniform(-2.5, 2.5, size=2)))
            if residual(s, c) <= 1e-8:
                feas.append(c)
        for _ in range(30):
            x = tuple(rng.uniform(-2.5, 2.5, size=2))
            px = project(s, x)
            for c in feas:
                inner = sum((a - b) * (cc - b) for a, b, cc in zip(x, px, c))
                assert inner <= 1e-8


def test_distance_matches_brute_force_grid_small():
    rng = np.random.default_rng(9)
    s = left_disk()
    queries = [tuple(rng.uniform(-1.5, 1.5, size=2)) for _ in range(5)]
    brute = brute_force_distances(s, queries, box=((-2.2, 0.3), (-1.2, 1.2)))
    for q, b in zip(queries, brute):
        assert abs(distance(s, q) - b) <= 2e-3


# -- oracles ------------------------------------------------------------------


def test_singleton_and_segment_distance():
    assert Singleton((1.0, 2.0)).distance((1.0, 2.0)) == 0.0
    seg = AffineSegment(((0.0, 0.0), (2.0, 0.0)))
    assert seg.distance((1.0, 1.0)) == 1.0
    assert seg.distance((3.0, 0.0)) == 1.0
    assert seg.distance((-1.0, 0.0)) == 1.0
