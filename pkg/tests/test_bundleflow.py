"""Carrier fields, flows, trivializations, mapping charts, normalization."""

import math

import numpy as np
import pytest

from pathlin import Grid, Point, Tangent
from pathlin.bundleflow import (TrivializationChart, arclength_normalize,
                                carrier_field, flow, make_carrier,
                                mapping_chart_in, mapping_chart_out, phi,
                                smooth_step, trivialize, untrivialize)
from pathlin.errors import NotImmersed, OutOfInjectivityRange
from pathlin.linearize import p_forward
from pathlin.suite import random_curve, random_interior_point, random_tangent
from pathlin.transport import SampledCurve, curve_velocities

from conftest import assert_close


def test_smooth_step_profile():
    assert smooth_step(-1.0) == 0.0 and smooth_step(0.0) == 0.0
    assert smooth_step(1.0) == 1.0 and smooth_step(2.0) == 1.0
    assert abs(smooth_step(0.5) - 0.5) < 1e-15
    xs = np.linspace(0.01, 0.99, 50)
    vals = [smooth_step(x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_carrier_at_base_is_log(model):
    rng = np.random.default_rng(2)
    p = random_interior_point(model, rng)
    q = model.exp_oracle(p, random_tangent(model, rng, p, norm=0.3))
    spec = make_carrier(model, p, q)
    y = carrier_field(spec, p)
    assert_close(y.components, spec.q_prime.components, 1e-8,
                 "field at p is log_p(q)")


def test_carrier_zero_outside_cutoff(model):
    rng = np.random.default_rng(3)
    p = random_interior_point(model, rng)
    q = model.exp_oracle(p, random_tangent(model, rng, p, norm=0.2))
    spec = make_carrier(model, p, q)
    for scale in (1.0, 1.1, 1.3):
        far = model.exp_oracle(p, random_tangent(model, rng, p,
                                                 norm=scale * spec.r_out))
        y = carrier_field(spec, far)
        assert np.all(y.components == 0.0), "exact zero outside r_out"
        assert model.point_distance(flow(spec, far, 1.0), far) < 1e-14


def test_carrier_rejects_distant_pair(sphere):
    p = Point("north", [0.0, 0.0])
    q = sphere.exp_oracle(p, Tangent(p, [0.5, 0.0]))   # distance 1 > r0/2
    with pytest.raises(OutOfInjectivityRange):
        make_carrier(sphere, p, q)


def test_euclidean_carrier_constant_inside(euclidean):
    p, q = Point("xy", [0.1, 0.2]), Point("xy", [1.1, -0.6])
    spec = make_carrier(euclidean, p, q)
    m = Point("xy", [0.5, 0.5])
    assert_close(carrier_field(spec, m).components, [1.0, -0.8], 1e-9)
    assert_close(phi(spec, m).coords, [1.5, -0.3], 1e-9,
                 "translation inside the inner radius")


def test_phi_moves_p_to_q_disk(disk):
    p, q = Point("disk", [0.0, 0.0]), Point("disk", [0.3, 0.0])
    spec = make_carrier(disk, p, q)
    out = phi(spec, p)
    assert_close(out.coords, [0.3, 0.0], 1e-6)


def test_phi_moves_p_to_q_seeded(model):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        p = random_interior_point(model, rng)
        d = float(rng.uniform(0.05, min(0.45 * model.r0(p), 2.0)))
        q = model.exp_oracle(p, random_tangent(model, rng, p, norm=d))
        spec = make_carrier(model, p, q)
        worst = max(worst, model.dist_oracle(phi(spec, p), q))
    assert worst < 1e-6


def test_flow_group_law_and_inverse(model):
    rng = np.random.default_rng(7)
    p = random_interior_point(model, rng)
    q = model.exp_oracle(p, random_tangent(model, rng, p, norm=0.25))
    spec = make_carrier(model, p, q)
    m = model.exp_oracle(p, random_tangent(model, rng, p, norm=0.15))
    for s, t in ((0.4, 0.6), (-0.3, 0.8), (0.7, -0.7)):
        two = flow(spec, flow(spec, m, s), t)
        one = flow(spec, m, s + t)
        assert model.dist_oracle(two, one) < 1e-5, (s, t)


def test_trivialize_at_base_is_identity(model):
    rng = np.random.default_rng(11)
    grid = Grid.regular(0.0, 1.0, 60)
    curve = random_curve(model, rng, grid)
    chart = TrivializationChart(model, curve.basepoint)
    sigma = trivialize(chart, curve.basepoint, curve)
    worst = max(model.point_distance(a, b)
                for a, b in zip(curve.points, sigma.points))
    assert worst < 1e-12, "Y(p, p) = 0 so phi is the identity"


def test_trivialize_euclidean_is_translation(euclidean):
    grid = Grid.regular(0.0, 1.0, 50)
    pts = tuple(Point("xy", [math.sin(t), t]) for t in grid.nodes)
    curve = SampledCurve(grid, pts)
    m = Point("xy", [0.4, -0.3])
    chart = TrivializationChart(euclidean, curve.basepoint)
    sigma = trivialize(chart, m, curve)
    shift = m.coords - curve.basepoint.coords
    for a, b in zip(curve.points, sigma.points):
        assert_close(b.coords, a.coords + shift, 1e-9)


def test_trivialize_roundtrip_sphere(sphere):
    rng = np.random.default_rng(13)
    grid = Grid.regular(0.0, 1.0, 400)
    curve = random_curve(sphere, rng, grid)
    fiber = sphere.exp_oracle(curve.basepoint,
                              random_tangent(sphere, rng, curve.basepoint,
                                             norm=0.3))
    chart = TrivializationChart(sphere, curve.basepoint)
    sigma = trivialize(chart, fiber, curve)
    assert sphere.dist_oracle(sigma.points[sigma.base_index], fiber) < 1e-6
    fiber_back, back = untrivialize(chart, sigma)
    assert sphere.dist_oracle(fiber_back, fiber) < 1e-6
    worst = max(sphere.point_distance(a, b)
                for a, b in zip(curve.points, back.points))
    assert worst < 1e-5


def test_mapping_chart_inverse_pair(model):
    rng = np.random.default_rng(17)
    grid = Grid.regular(0.0, 1.0, 120)
    ref = random_curve(model, rng, grid)
    section = [Tangent(pt, 0.05 * np.array([math.sin(3 * t), math.cos(t)]))
               for pt, t in zip(ref.points, grid.nodes)]
    nearby = mapping_chart_out(model, ref, section)
    back = mapping_chart_in(model, ref, nearby)
    worst = max(float(np.max(np.abs(a.components - b.components)))
                for a, b in zip(section, back))
    assert worst < 1e-8
    zero = mapping_chart_in(model, ref, ref)
    assert max(float(np.max(np.abs(t.components))) for t in zero) < 1e-9
    same = mapping_chart_out(model, ref, zero)
    assert max(model.point_distance(a, b)
               for a, b in zip(ref.points, same.points)) < 1e-8


def test_mapping_chart_euclidean_is_difference(euclidean):
    grid = Grid.regular(0.0, 1.0, 30)
    ref = SampledCurve(grid, tuple(Point("xy", [t, 0.0]) for t in grid.nodes))
    f = SampledCurve(grid, tuple(Point("xy", [t, 0.1 + 0.2 * t])
                                 for t in grid.nodes))
    section = mapping_chart_in(euclidean, ref, f)
    for t, vec in zip(grid.nodes, section):
        assert_close(vec.components, [0.0, 0.1 + 0.2 * t], 1e-14)


def test_mapping_chart_cross_reference(sphere):
    rng = np.random.default_rng(19)
    grid = Grid.regular(0.0, 1.0, 200)
    ref1 = random_curve(sphere, rng, grid)
    section = [Tangent(pt, 0.04 * np.array([math.sin(2 * t), 0.5]))
               for pt, t in zip(ref1.points, grid.nodes)]
    f = mapping_chart_out(sphere, ref1, section)
    ref2 = mapping_chart_out(sphere, ref1,
                             [Tangent(pt, np.array([0.02, -0.01]))
                              for pt in ref1.points])
    crossed = mapping_chart_in(sphere, ref2, f)
    f_back = mapping_chart_out(sphere, ref2, crossed)
    worst = max(sphere.point_distance(a, b)
                for a, b in zip(f.points, f_back.points))
    assert worst < 1e-7


def test_mapping_chart_out_of_range_reports_node(sphere):
    grid = Grid.regular(0.0, 1.0, 30)
    pole = Point("north", [0.0, 0.0])
    ref = SampledCurve(grid, tuple(pole for _ in grid.nodes))
    far = sphere.exp_oracle(pole, Tangent(pole, [0.9, 0.0]))  # dist 1.8 > r0
    f = SampledCurve(grid, tuple(pole for _ in grid.nodes[:-1]) + (far,))
    with pytest.raises(OutOfInjectivityRange) as err:
        mapping_chart_in(sphere, ref, f)
    assert err.value.node == 30


def test_arclength_normalize_euclidean_line(euclidean):
    grid = Grid.regular(0.0, 1.0, 100)
    pts = tuple(Point("xy", [0.1 + 2.0 * t, 0.3]) for t in grid.nodes)
    out = arclength_normalize(euclidean, SampledCurve(grid, pts, order=2))
    assert_close(out.points[0].coords, [0.1, 0.3], 1e-12, "output(0)=gamma(0)")
    assert abs(out.grid.nodes[-1] - 2.0) < 1e-10
    speeds = [euclidean.g_norm(v) for v in curve_velocities(euclidean, out)]
    assert max(abs(s - 1.0) for s in speeds) < 1e-10


def test_arclength_already_unit_speed_fixed_point(sphere):
    grid = Grid.regular(0.0, 1.0, 400)
    pole = Point("north", [0.0, 0.0])
    f0 = sphere.orthonormal_frame(pole)
    pts = tuple(sphere.exp_oracle(pole, Tangent(pole, f0.columns[:, 0] * t))
                for t in grid.nodes)
    curve = SampledCurve(grid, pts, order=2)
    out = arclength_normalize(sphere, curve)
    worst = max(sphere.dist_oracle(a, b)
                for a, b in zip(curve.points, out.points))
    assert worst < 1e-6


def test_arclength_normalized_great_circle_linearizes_constant(sphere):
    grid = Grid.regular(0.0, 1.0, 400)
    pole = Point("north", [0.0, 0.0])
    f0 = sphere.orthonormal_frame(pole)
    pts = tuple(sphere.exp_oracle(pole,
                                  Tangent(pole, f0.columns[:, 0] * 3.0 * t))
                for t in grid.nodes)
    out = arclength_normalize(sphere, SampledCurve(grid, pts, order=2))
    rep = p_forward(sphere, out)
    comps = rep.tangent_curve.components
    gram = sphere.frame_gram(rep.tangent_curve.frame0)
    norms = np.sqrt(np.einsum("ji,ik,jk->j", comps, gram, comps))
    assert np.max(np.abs(norms - 1.0)) < 1e-5
    assert np.max(np.abs(comps - comps[0])) < 1e-5


def test_arclength_idempotent(model):
    rng = np.random.default_rng(23)
    curve = random_curve(model, rng, Grid.regular(0.0, 1.0, 400))
    once = arclength_normalize(model, curve)
    twice = arclength_normalize(model, once)
    worst = max(model.point_distance(a, b)
                for a, b in zip(once.points, twice.points))
    assert worst < 1e-5


def test_arclength_rejects_non_immersed(euclidean):
    grid = Grid.regular(-1.0, 1.0, 100)
    pts = tuple(Point("xy", [t * t * t / 3.0, 0.0]) for t in grid.nodes)
    with pytest.raises(NotImmersed) as err:
        arclength_normalize(euclidean,
                            SampledCurve(grid, pts, order=2, base_index=50))
    assert err.value.node is not None
