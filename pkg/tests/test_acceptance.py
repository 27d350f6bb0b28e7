"""Acceptance criteria, one test per criterion, at their stated tolerances.

Each test prints a single summary line (visible with `pytest -s` or in the
captured output of a failure).  Criteria 1 and 4 share one computation
through a module-scoped fixture.
"""

import math
import time

import numpy as np
import pytest

from pathlin import Frame, Grid, Point, PolyCoeffs, Tangent, get_model
from pathlin.bundleflow import (TrivializationChart, arclength_normalize,
                                carrier_field, flow, make_carrier,
                                mapping_chart_in, mapping_chart_out, phi,
                                trivialize, untrivialize)
from pathlin.cli import main as cli_main
from pathlin.cubemaps import CubeLinearization, p2_forward, p2_inverse
from pathlin.linearize import (TangentCurve, basis_independence_check,
                               chart_independence_check, p_forward, p_inverse,
                               roundtrip_check)
from pathlin.numerics import eval_poly, fit_poly
from pathlin.polycurves import (conjugation_residual, covariant_power_residual,
                                make_polynomial_like, weierstrass_fit)
from pathlin.suite import (random_interior_point, random_tangent,
                           random_tangent_curve, wiggly_tangent_curve)
from pathlin.transport import SampledCurve, curve_velocities

MODELS = ("euclidean2", "hyperbolic2", "sphere2", "torus2")
SEED = 2024


def report(number: int, label: str, passed: bool, detail: str):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:2d} {label}: {status}  ({detail})")


@pytest.fixture(scope="module")
def roundtrip_suite():
    """Criterion 1 computation, shared with criterion 4."""
    t0 = time.monotonic()
    grid = Grid.regular(0.0, 1.0, 400)
    grid_fine = Grid.regular(0.0, 1.0, 800)
    results = {}
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 1])
        errors, drifts, fine_errors = [], [], []
        tangent_curves = [random_tangent_curve(model, rng, grid)
                          for _ in range(30)]
        for v in tangent_curves:
            curve = p_inverse(model, v)
            rt = roundtrip_check(model, curve, v.frame0)
            errors.append(rt.max_distance)
            drifts.append(rt.forward.norm_drift)
        for v in tangent_curves[:6]:
            coeffs = fit_poly(v.components, grid, 3)
            vf = TangentCurve(v.base, v.frame0, grid_fine,
                              eval_poly(coeffs, grid_fine))
            fine = p_inverse(model, vf)
            fine_errors.append(
                roundtrip_check(model, fine, v.frame0).max_distance)
        results[name] = {"errors": errors, "drifts": drifts,
                         "fine_errors": fine_errors}
    results["runtime"] = time.monotonic() - t0
    return results


def test_criterion_1_roundtrip_diffeomorphism(roundtrip_suite):
    worst = max(max(r["errors"]) for n, r in roundtrip_suite.items()
                if n != "runtime")
    ratios = {}
    for name in MODELS:
        coarse = max(roundtrip_suite[name]["errors"][:6])
        fine = max(roundtrip_suite[name]["fine_errors"])
        ratios[name] = math.inf if coarse <= 1e-12 else coarse / fine
    min_ratio = min(ratios.values())
    runtime = roundtrip_suite["runtime"]
    passed = worst < 1e-5 and min_ratio >= 8.0 and runtime < 30.0
    report(1, "roundtrip diffeomorphism", passed,
           f"max err {worst:.2e} < 1e-5; refinement ratio >= "
           f"{min_ratio:.1f}; runtime {runtime:.1f}s < 30s")
    assert worst < 1e-5
    assert min_ratio >= 8.0
    assert runtime < 30.0


def test_criterion_2_geodesic_oracle():
    t0 = time.monotonic()
    grid = Grid.regular(0.0, 1.0, 400)
    cases = {"sphere2": (0.1, 0.5, math.pi / 2.0), "hyperbolic2": (0.1, 0.5)}
    worst = 0.0
    for name, norms in cases.items():
        model = get_model(name)
        rng = np.random.default_rng([SEED, 2])
        for norm in norms:
            for _ in range(3):
                p = random_interior_point(model, rng)
                f0 = model.orthonormal_frame(p)
                direction = rng.normal(size=2)
                direction /= np.linalg.norm(direction)
                comps = np.tile(direction * norm, (401, 1))
                curve = p_inverse(model, TangentCurve(p, f0, grid, comps))
                target = model.exp_oracle(
                    p, Tangent(p, f0.columns @ (direction * norm)))
                worst = max(worst,
                            model.dist_oracle(curve.points[-1], target))
    runtime = time.monotonic() - t0
    passed = worst < 1e-6 and runtime < 5.0
    report(2, "geodesic oracle", passed,
           f"max endpoint err {worst:.2e} < 1e-6; runtime {runtime:.1f}s < 5s")
    assert worst < 1e-6
    assert runtime < 5.0


def test_criterion_3_independence():
    model = get_model("sphere2")
    grid = Grid.regular(0.0, 1.0, 400)
    rng = np.random.default_rng([SEED, 3])
    worst_basis = 0.0
    worst_chart = 0.0
    for _ in range(3):
        base = Point("north", rng.uniform(-0.9, 0.9, size=2) + [1.0, 0.0])
        f0 = model.orthonormal_frame(base)
        comps = 0.3 * np.stack([np.sin(2 * grid.nodes) + rng.uniform(0.2, 0.6),
                                np.cos(3 * grid.nodes)], axis=1)
        curve = p_inverse(model, TangentCurve(base, f0, grid, comps))
        theta = rng.uniform(0.2, 1.3)
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        frame_b = Frame(f0.base, f0.columns @ rot)
        worst_basis = max(worst_basis, basis_independence_check(
            model, curve, f0, frame_b))
        worst_chart = max(worst_chart, chart_independence_check(
            model, curve, "north", "south"))
    passed = worst_basis < 1e-6 and worst_chart < 1e-6
    report(3, "basis/chart independence", passed,
           f"basis {worst_basis:.2e}, chart {worst_chart:.2e} < 1e-6")
    assert worst_basis < 1e-6
    assert worst_chart < 1e-6


def test_criterion_4_norm_correspondence(roundtrip_suite):
    worst = max(max(r["drifts"]) for n, r in roundtrip_suite.items()
                if n != "runtime")
    report(4, "norm correspondence", worst < 1e-5,
           f"max drift {worst:.2e} < 1e-5 across the roundtrip suite")
    assert worst < 1e-5


def test_criterion_5_conjugation_identity():
    worst = 0.0
    worst_order = math.inf
    for name in MODELS:
        model = get_model(name)
        residuals = {}
        for n in (400, 800):
            grid = Grid.regular(0.0, 1.0, n)
            v = wiggly_tangent_curve(model, np.random.default_rng([SEED, 5]),
                                     grid)
            curve = p_inverse(model, v)
            residuals[n] = conjugation_residual(model, curve, v.frame0)
        worst = max(worst, residuals[400])
        if residuals[400] > 1e-12:
            worst_order = min(worst_order,
                              math.log2(residuals[400] / residuals[800]))
    passed = worst < 1e-4 and worst_order >= 2.0
    report(5, "conjugation identity", passed,
           f"max residual {worst:.2e} < 1e-4; order >= {worst_order:.2f}")
    assert worst < 1e-4
    assert worst_order >= 2.0


def test_criterion_6_polynomial_like_residuals():
    grid = Grid.regular(0.0, 1.0, 400)
    worst_high = 0.0
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 6])
        for degree in (1, 2):
            p = random_interior_point(model, rng)
            f0 = model.orthonormal_frame(p)
            coeffs = PolyCoeffs(
                "monomial", degree,
                rng.uniform(-0.3, 0.3, size=(degree + 1, 2)), (0.0, 1.0))
            poly = make_polynomial_like(model, p, f0, coeffs, grid)
            worst_high = max(worst_high, poly.residual)
    # flat witness: nonvanishing order-d derivative for nonzero lead
    euclid = get_model("euclidean2")
    p = Point("xy", [0.0, 0.0])
    lead = np.array([0.2, -0.3])
    coeffs = PolyCoeffs("monomial", 2,
                        np.stack([np.array([0.5, 0.1]),
                                  np.array([-0.2, 0.3]), lead]), (0.0, 1.0))
    poly = make_polynomial_like(euclid, p, euclid.orthonormal_frame(p),
                                coeffs, grid)
    low = covariant_power_residual(euclid, poly.realized, 2)
    ratio = low / float(np.linalg.norm(lead))
    passed = worst_high < 1e-4 and ratio > 0.1
    report(6, "polynomial-like residuals", passed,
           f"order-(d+1) residual {worst_high:.2e} < 1e-4; flat order-d "
           f"witness {ratio:.2f} > 0.1")
    assert worst_high < 1e-4
    assert ratio > 0.1


def test_criterion_7_weierstrass_density_shadow():
    model = get_model("sphere2")
    grid = Grid.regular(0.0, 1.0, 400)
    v = wiggly_tangent_curve(model, np.random.default_rng([SEED, 7]), grid)
    curve = p_inverse(model, v)
    residuals = []
    c0 = {}
    for degree in range(11):
        fit = weierstrass_fit(model, curve, degree, frame0=v.frame0)
        residuals.append(fit.v_residual)
        c0[degree] = fit.c0_error
    worst_jump = max(residuals[d + 1] - residuals[d] for d in range(10))
    passed = worst_jump <= 1e-12 and c0[10] < c0[3]
    report(7, "Weierstrass density shadow", passed,
           f"residual jumps <= {worst_jump:.1e} (1e-12 slack); C0 deg10 "
           f"{c0[10]:.2e} < deg3 {c0[3]:.2e}")
    assert worst_jump <= 1e-12
    assert c0[10] < c0[3]


def test_criterion_8_cube_maps():
    t0 = time.monotonic()
    worst = 0.0
    n = 200
    grid1 = Grid.regular(-1.0, 1.0, n)
    grid2 = Grid.regular(-1.0, 1.0, n)
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 8])
        p = random_interior_point(model, rng)
        f0 = model.orthonormal_frame(p)
        a = rng.uniform(-0.25, 0.25, size=(2, 2))
        b = rng.uniform(-0.2, 0.2, size=(3, 2))
        v1 = a[0][None, :] + a[1][None, :] * grid1.nodes[:, None]
        v2 = (b[0][None, None, :]
              + b[1][None, None, :] * grid1.nodes[:, None, None]
              + b[2][None, None, :] * grid2.nodes[None, :, None])
        lin = CubeLinearization(p, f0, grid1, grid2, v1, v2)
        alpha = p2_inverse(model, lin)
        lin_back = p2_forward(model, alpha, f0)
        worst = max(worst, float(np.max(np.abs(lin_back.v1 - v1))),
                    float(np.max(np.abs(lin_back.v2 - v2))))
        alpha_back = p2_inverse(model, lin_back)
        worst = max(worst, max(
            model.point_distance(x, y)
            for ra, rb in zip(alpha.points, alpha_back.points)
            for x, y in zip(ra, rb)))
    runtime = time.monotonic() - t0
    passed = worst < 1e-4 and runtime < 60.0
    report(8, "cube maps (n=2)", passed,
           f"both roundtrips {worst:.2e} < 1e-4 at 200x200; runtime "
           f"{runtime:.1f}s < 60s")
    assert worst < 1e-4
    assert runtime < 60.0


def test_criterion_9_flow_trivialization():
    worst_phi = 0.0
    worst_group = 0.0
    worst_triv = 0.0
    worst_support = 0.0
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 9])
        pairs = []
        for _ in range(50):
            p = random_interior_point(model, rng)
            d = float(rng.uniform(0.05, min(0.45 * model.r0(p), 2.0)))
            q = model.exp_oracle(p, random_tangent(model, rng, p, norm=d))
            pairs.append((p, q))
            spec = make_carrier(model, p, q)
            worst_phi = max(worst_phi, model.dist_oracle(phi(spec, p), q))
        for p, q in pairs[:10]:
            spec = make_carrier(model, p, q)
            m = model.exp_oracle(p, random_tangent(model, rng, p, norm=0.2))
            s, t = rng.uniform(-1.0, 1.0, size=2)
            worst_group = max(worst_group, model.dist_oracle(
                flow(spec, flow(spec, m, float(s)), float(t)),
                flow(spec, m, float(s + t))))
        p, q = pairs[0]
        spec = make_carrier(model, p, q)
        for _ in range(10):
            far = model.exp_oracle(
                p, random_tangent(model, rng, p,
                                  norm=float(rng.uniform(1.0, 1.4))
                                  * spec.r_out))
            worst_support = max(worst_support, float(np.max(np.abs(
                carrier_field(spec, far).components))))

        grid = Grid.regular(0.0, 1.0, 400)
        base = random_interior_point(model, rng)
        f0 = model.orthonormal_frame(base)
        comps = eval_poly(PolyCoeffs(
            "bernstein", 3, rng.uniform(-0.4, 0.4, size=(4, 2)), (0.0, 1.0)),
            grid)
        curve = p_inverse(model, TangentCurve(base, f0, grid, comps))
        fiber = model.exp_oracle(base,
                                 random_tangent(model, rng, base, norm=0.3))
        chart = TrivializationChart(model, base)
        sigma = trivialize(chart, fiber, curve)
        _, back = untrivialize(chart, sigma)
        worst_triv = max(worst_triv, max(
            model.point_distance(x, y)
            for x, y in zip(curve.points, back.points)))
    passed = (worst_phi < 1e-6 and worst_group < 1e-5
              and worst_triv < 1e-5 and worst_support == 0.0)
    report(9, "flow trivialization", passed,
           f"phi err {worst_phi:.2e} < 1e-6; group law {worst_group:.2e} "
           f"< 1e-5; trivialize roundtrip {worst_triv:.2e} < 1e-5; "
           f"support leak {worst_support}")
    assert worst_phi < 1e-6
    assert worst_group < 1e-5
    assert worst_triv < 1e-5
    assert worst_support == 0.0


def test_criterion_10_mapping_charts():
    worst_inverse = 0.0
    worst_cross = 0.0
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 10])
        grid = Grid.regular(0.0, 1.0, 400)
        v = random_tangent_curve(model, rng, grid)
        ref = p_inverse(model, v)
        section = [Tangent(pt, 0.05 * np.array([math.sin(3 * t),
                                                math.cos(2 * t)]))
                   for pt, t in zip(ref.points, grid.nodes)]
        nearby = mapping_chart_out(model, ref, section)
        back = mapping_chart_in(model, ref, nearby)
        worst_inverse = max(worst_inverse, max(
            float(np.max(np.abs(a.components - b.components)))
            for a, b in zip(section, back)))
        ref2 = mapping_chart_out(model, ref,
                                 [Tangent(pt, np.array([0.02, -0.015]))
                                  for pt in ref.points])
        crossed = mapping_chart_in(model, ref2, nearby)
        nearby_back = mapping_chart_out(model, ref2, crossed)
        worst_cross = max(worst_cross, max(
            model.point_distance(x, y)
            for x, y in zip(nearby.points, nearby_back.points)))
    passed = worst_inverse < 1e-8 and worst_cross < 1e-7
    report(10, "mapping-space charts", passed,
           f"in/out inverse {worst_inverse:.2e} < 1e-8; cross-reference "
           f"roundtrip {worst_cross:.2e} < 1e-7")
    assert worst_inverse < 1e-8
    assert worst_cross < 1e-7


def test_criterion_11_shape_normalization():
    worst_unit = 0.0
    worst_idem = 0.0
    for name in MODELS:
        model = get_model(name)
        rng = np.random.default_rng([SEED, 11])
        grid = Grid.regular(0.0, 1.0, 400)
        base = random_interior_point(model, rng)
        frame0 = model.orthonormal_frame(base)
        ph = rng.uniform(0.0, 2.0 * math.pi, size=2)
        # clearly immersed: speed stays within [0.45, 0.95]
        comps = np.stack([
            0.7 + 0.15 * np.sin(3.0 * grid.nodes + ph[0]),
            0.2 * np.cos(2.0 * grid.nodes + ph[1]),
        ], axis=1)
        v = TangentCurve(base, frame0, grid, comps)
        curve = p_inverse(model, v)
        normalized = arclength_normalize(model, curve)
        speeds = [model.g_norm(w)
                  for w in curve_velocities(model, normalized)]
        worst_unit = max(worst_unit, max(abs(s - 1.0) for s in speeds))
        again = arclength_normalize(model, normalized)
        worst_idem = max(worst_idem, max(
            model.point_distance(x, y)
            for x, y in zip(normalized.points, again.points)))

    sphere = get_model("sphere2")
    grid = Grid.regular(0.0, 1.0, 400)
    pole = Point("north", [0.0, 0.0])
    f0 = sphere.orthonormal_frame(pole)
    pts = tuple(sphere.exp_oracle(pole,
                                  Tangent(pole, f0.columns[:, 0] * 3.0 * t))
                for t in grid.nodes)
    unit_gc = arclength_normalize(sphere, SampledCurve(grid, pts, order=2))
    rep = p_forward(sphere, unit_gc)
    comps = rep.tangent_curve.components
    gram = sphere.frame_gram(rep.tangent_curve.frame0)
    norms = np.sqrt(np.einsum("ji,ik,jk->j", comps, gram, comps))
    gc_const = float(np.max(np.abs(comps - comps[0])))
    gc_unit = float(np.max(np.abs(norms - 1.0)))
    passed = (worst_unit < 1e-4 and worst_idem < 1e-5
              and gc_const < 1e-5 and gc_unit < 1e-5)
    report(11, "shape normalization", passed,
           f"unit speed {worst_unit:.2e} < 1e-4; idempotence {worst_idem:.2e}"
           f" < 1e-5; normalized great circle const {gc_const:.2e}, "
           f"unit {gc_unit:.2e} < 1e-5")
    assert worst_unit < 1e-4
    assert worst_idem < 1e-5
    assert gc_const < 1e-5
    assert gc_unit < 1e-5


def test_criterion_12_determinism(tmp_path, capsys):
    args = ["check", "euclidean2", "--seed", "11", "--cube-n", "16"]
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert cli_main(args + ["--report", str(first)]) == 0
    out1 = capsys.readouterr().out
    assert cli_main(args + ["--report", str(second)]) == 0
    out2 = capsys.readouterr().out
    identical = (first.read_bytes() == second.read_bytes()
                 and out1 == out2)
    report(12, "determinism", identical,
           "byte-identical check reports and stdout on repeated runs")
    assert identical
