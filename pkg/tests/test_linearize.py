"""The forward/inverse linearization pair and its independence properties."""

import math

import numpy as np
import pytest

from pathlin import Frame, Grid, Point, Tangent, get_model
from pathlin.errors import ValidationError
from pathlin.linearize import (TangentCurve, basis_independence_check,
                               chart_independence_check, p_forward, p_inverse,
                               rescale_to_unit, roundtrip_check)
from pathlin.suite import random_curve, random_tangent_curve
from pathlin.transport import SampledCurve

from conftest import assert_close


def test_straight_line_linearizes_to_constant(euclidean):
    grid = Grid.regular(0.0, 1.0, 100)
    w = np.array([0.3, -0.8])
    pts = tuple(Point("xy", [0.1, 0.2] + w * t) for t in grid.nodes)
    rep = p_forward(euclidean, SampledCurve(grid, pts))
    assert_close(rep.tangent_curve.components,
                 np.tile(w, (101, 1)), 1e-12, "constant components")
    assert rep.norm_drift < 1e-12


def test_initial_value_is_velocity(model):
    rng = np.random.default_rng(4)
    grid = Grid.regular(0.0, 1.0, 200)
    v = random_tangent_curve(model, rng, grid)
    curve = p_inverse(model, v)
    rep = p_forward(model, curve, v.frame0)
    assert_close(rep.tangent_curve.components[0], v.components[0], 1e-8,
                 "v(0) = velocity components at the basepoint")


def test_great_circle_linearizes_to_constant_unit_vector(sphere):
    grid = Grid.regular(0.0, 1.0, 400)
    pole = Point("north", [0.0, 0.0])
    f0 = sphere.orthonormal_frame(pole)
    pts = tuple(sphere.exp_oracle(pole, Tangent(pole, f0.columns[:, 0] * t))
                for t in grid.nodes)
    rep = p_forward(sphere, SampledCurve(grid, pts, order=2), f0)
    comps = rep.tangent_curve.components
    assert_close(comps, np.tile(comps[0], (401, 1)), 1e-6)
    assert abs(np.linalg.norm(comps[0]) - 1.0) < 1e-8
    assert rep.norm_drift < 1e-5


def test_p_inverse_zero_is_constant(model):
    grid = Grid.regular(0.0, 1.0, 50)
    rng = np.random.default_rng(8)
    from pathlin.suite import random_interior_point
    p = random_interior_point(model, rng)
    v = TangentCurve(p, model.orthonormal_frame(p), grid, np.zeros((51, 2)))
    curve = p_inverse(model, v)
    for pt in curve.points:
        assert model.point_distance(pt, p) < 1e-14


def test_geodesic_shooting_matches_oracle():
    # endpoint against the closed-form exponential on the two curved models
    cases = {"sphere2": (0.1, 0.5, math.pi / 2.0),
             "hyperbolic2": (0.1, 0.5)}
    grid = Grid.regular(0.0, 1.0, 400)
    for name, speeds in cases.items():
        model = get_model(name)
        rng = np.random.default_rng(10)
        from pathlin.suite import random_interior_point
        p = random_interior_point(model, rng)
        f0 = model.orthonormal_frame(p)
        for s in speeds:
            comps = np.zeros((401, 2))
            comps[:, 0] = s * 0.6
            comps[:, 1] = s * 0.8
            v = TangentCurve(p, f0, grid, comps)
            curve = p_inverse(model, v)
            target = model.exp_oracle(
                p, Tangent(p, f0.columns @ np.array([s * 0.6, s * 0.8])))
            assert model.dist_oracle(curve.points[-1], target) < 1e-6, \
                (name, s)


def test_euclidean_inverse_of_linear_components(euclidean):
    grid = Grid.regular(0.0, 1.0, 100)
    p = Point("xy", [0.5, -0.5])
    comps = np.stack([np.ones(101), 2.0 * grid.nodes], axis=1)
    curve = p_inverse(euclidean, TangentCurve(
        p, Frame(p, np.eye(2)), grid, comps))
    for t, pt in zip(grid.nodes, curve.points):
        assert_close(pt.coords, [0.5 + t, -0.5 + t * t], 1e-12, "parabola")


def test_roundtrip_euclidean_closed_form(euclidean):
    grid = Grid.regular(0.0, 1.0, 200)
    pts = tuple(Point("xy", [math.sin(t), t * t]) for t in grid.nodes)
    rt = roundtrip_check(euclidean, SampledCurve(grid, pts, order=3))
    assert rt.max_distance < 1e-8


def test_roundtrip_seeded(model):
    rng = np.random.default_rng(31)
    grid = Grid.regular(0.0, 1.0, 400)
    for _ in range(3):
        curve = random_curve(model, rng, grid)
        rt = roundtrip_check(model, curve)
        assert rt.max_distance < 1e-5
        assert rt.forward.norm_drift < 1e-5


def test_basis_independence_rotation(sphere):
    rng = np.random.default_rng(12)
    grid = Grid.regular(0.0, 1.0, 400)
    curve = random_curve(sphere, rng, grid)
    frame_a = sphere.orthonormal_frame(curve.basepoint)
    theta = 0.7
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    frame_b = Frame(frame_a.base, frame_a.columns @ rot)
    assert basis_independence_check(sphere, curve, frame_a, frame_b) < 1e-7


def test_chart_independence_equator_band(sphere):
    grid = Grid.regular(0.0, 1.0, 400)
    base = Point("north", [1.0, 0.0])
    f0 = sphere.orthonormal_frame(base)
    comps = 0.3 * np.stack([np.sin(2 * grid.nodes) + 0.6,
                            np.cos(3 * grid.nodes)], axis=1)
    curve = p_inverse(sphere, TangentCurve(base, f0, grid, comps))
    assert chart_independence_check(sphere, curve, "north", "south") < 1e-6


def test_gl_equivariance(model):
    rng = np.random.default_rng(14)
    grid = Grid.regular(0.0, 1.0, 300)
    curve = random_curve(model, rng, grid)
    frame_a = model.orthonormal_frame(curve.basepoint)
    a = np.array([[1.2, -0.4], [0.5, 0.9]])
    frame_b = Frame(frame_a.base, frame_a.columns @ a)
    rep_a = p_forward(model, curve, frame_a)
    rep_b = p_forward(model, curve, frame_b)
    expected = np.linalg.solve(a, rep_a.tangent_curve.components.T).T
    assert_close(rep_b.tangent_curve.components, expected, 1e-9)


def test_two_sided_grid_roundtrip(model):
    rng = np.random.default_rng(15)
    grid = Grid.regular(-1.0, 1.0, 400)
    v = random_tangent_curve(model, rng, grid, scale=0.3)
    curve = p_inverse(model, v)
    assert curve.base_index == 200
    assert model.point_distance(curve.points[200], v.base) < 1e-14
    rt = roundtrip_check(model, curve, v.frame0)
    assert rt.max_distance < 1e-5


def test_rescale_identity_and_chain_rule(euclidean, sphere):
    grid = Grid.regular(-2.0, 2.0, 100)
    p = Point("xy", [0.0, 0.0])
    w = np.array([0.3, -0.1])
    v = TangentCurve(p, Frame(p, np.eye(2)), grid, np.tile(w, (101, 1)))
    assert rescale_to_unit(v, 1.0) is v

    scaled = rescale_to_unit(v, 2.0)
    assert_close(scaled.grid.nodes, np.linspace(-1, 1, 101), 1e-15)
    assert_close(scaled.components, np.tile(2.0 * w, (101, 1)), 1e-15)
    ga = p_inverse(euclidean, v)
    gb = p_inverse(euclidean, scaled)
    assert_close(ga.points[-1].coords, gb.points[-1].coords, 1e-10,
                 "same endpoint after rescale")

    # sphere: constant v of g-norm 1 on [-pi, pi] vs rescaled -> length pi
    grid_pi = Grid.regular(-math.pi, math.pi, 400)
    pole = Point("north", [0.0, 0.0])
    f0 = sphere.orthonormal_frame(pole)
    comps = np.tile(f0.columns[:, 0] * 0.0 + np.array([1.0, 0.0]), (401, 1))
    v_pi = TangentCurve(pole, f0, grid_pi, comps)
    both = [p_inverse(sphere, v_pi), p_inverse(sphere,
                                               rescale_to_unit(v_pi, math.pi))]
    d = sphere.dist_oracle(both[0].points[-1], both[1].points[-1])
    assert d < 1e-6
    with pytest.raises(ValidationError):
        rescale_to_unit(v_pi, -1.0)
