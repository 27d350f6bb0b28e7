"""The path-space linearization pair.

p_forward sends a based sampled curve to the tangent-space curve
v(t) = (transport of the velocity back to the basepoint), computed with one
parallel frame: the velocity's coefficients in the transported frame are the
components of v in the initial basis.

p_inverse integrates the coupled system with m^2 + m unknowns

    de_i^l/dt = -e_i^j Gamma^l_{kj}(gamma) r^k,   r^k = v^i e_i^k,
    dgamma^k/dt = r^k,

from gamma(0) = p and e_i(0) = the chosen basis, continuing across charts.
On two-sided grids the base node sits in the interior and the system is
integrated outward in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartContinuationFailure, NoOverlap, NonFiniteState, ValidationError
from .geometry import INSIDE, Frame, ManifoldModel, Point
from .numerics import Grid
from .transport import (FrameField, SampledCurve, _stage_values, curve_velocities,
                        transport_frame)


@dataclass(frozen=True)
class TangentCurve:
    """A curve of tangent vectors at a fixed basepoint.

    components[j] are the coefficients of v(t_j) in the columns of frame0;
    they are chart-free data, which is what makes chart-independence checks
    meaningful.
    """

    base: Point
    frame0: Frame
    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (self.grid.nodes.size, self.base.coords.size):
            raise ValidationError("components must be (nodes, dim)")
        if self.frame0.base.chart_id != self.base.chart_id or \
                not np.allclose(self.frame0.base.coords, self.base.coords,
                                atol=1e-12):
            raise ValidationError("frame0 must be based at the curve's basepoint")
        if not np.all(np.isfinite(comps)):
            raise ValidationError("components must be finite")
        comps = comps.copy()
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True)
class LinearizationReport:
    tangent_curve: TangentCurve
    switch_log: tuple[tuple[int, str, str], ...]
    norm_drift: float
    h: float


@dataclass(frozen=True)
class RoundtripReport:
    max_distance: float
    distances: np.ndarray
    reconstructed: SampledCurve
    forward: LinearizationReport


# ---------------------------------------------------------------------------
# Forward map
# ---------------------------------------------------------------------------

def _p_forward_detailed(model: ManifoldModel, curve: SampledCurve,
                        frame0: Frame | None = None, substeps: int = 2):
    if curve.order < 1:
        raise ValidationError("curve order must be at least 1")
    if frame0 is None:
        frame0 = model.orthonormal_frame(curve.basepoint)
    field = transport_frame(model, curve, frame0, substeps=substeps)
    velocities = curve_velocities(model, curve)
    n = curve.grid.nodes.size
    comps = np.empty((n, model.dim))
    drift = 0.0
    gram0 = model.frame_gram(frame0)
    for j in range(n):
        fr = field.frames[j]
        r = velocities[j]
        if r.base.chart_id != fr.base.chart_id:
            r = model.push_tangent(r, fr.base.chart_id)
        comps[j] = np.linalg.solve(fr.columns, r.components)
        norm_v = float(np.sqrt(max(comps[j] @ gram0 @ comps[j], 0.0)))
        drift = max(drift, abs(norm_v - model.g_norm(velocities[j])))
    tc = TangentCurve(base=frame0.base, frame0=frame0, grid=curve.grid,
                      components=comps)
    report = LinearizationReport(tangent_curve=tc, switch_log=field.switch_log,
                                 norm_drift=drift, h=curve.grid.h)
    return report, field, velocities


def p_forward(model: ManifoldModel, curve: SampledCurve,
              frame0: Frame | None = None, substeps: int = 2) -> LinearizationReport:
    """Linearize a based curve: v(t_j) = transport of the velocity to the
    basepoint, expressed in frame0 (default: g-orthonormalized coordinates)."""
    report, _, _ = _p_forward_detailed(model, curve, frame0, substeps)
    return report


# ---------------------------------------------------------------------------
# Inverse map
# ---------------------------------------------------------------------------

def _switch_state(model, chart, x, cols, node, switch_log):
    """Re-express position and frame columns when the state hits a margin."""
    status = model.chart(chart).domain_test(x)
    if status == INSIDE:
        return chart, x, cols
    here = Point(chart, x)
    try:
        moved = model.select_chart(here)
    except NoOverlap as exc:
        raise ChartContinuationFailure(
            f"no admissible chart at node {node}: {exc}", node=node)
    if moved.chart_id == chart:
        return chart, x, cols
    jac = model.transition_jacobian(here, moved.chart_id)
    switch_log.append((node, chart, moved.chart_id))
    return moved.chart_id, moved.coords, jac @ cols


def _integrate_interval(model, chart, x, cols, v_stage, h, substeps, reverse):
    """One grid interval of the coupled position+frame system (RK4)."""
    hsub = (-h if reverse else h) / substeps
    action = model.christoffel_action
    for s in range(substeps):
        if reverse:
            i0 = v_stage.shape[0] - 1 - 2 * s
            va, vb, vc = v_stage[i0], v_stage[i0 - 1], v_stage[i0 - 2]
        else:
            va, vb, vc = v_stage[2 * s], v_stage[2 * s + 1], v_stage[2 * s + 2]

        r1 = cols @ va
        k1x, k1e = r1, -(action(chart, x, r1)) @ cols
        x2, e2 = x + 0.5 * hsub * k1x, cols + 0.5 * hsub * k1e
        r2 = e2 @ vb
        k2x, k2e = r2, -(action(chart, x2, r2)) @ e2
        x3, e3 = x + 0.5 * hsub * k2x, cols + 0.5 * hsub * k2e
        r3 = e3 @ vb
        k3x, k3e = r3, -(action(chart, x3, r3)) @ e3
        x4, e4 = x + hsub * k3x, cols + hsub * k3e
        r4 = e4 @ vc
        k4x, k4e = r4, -(action(chart, x4, r4)) @ e4

        x = x + (hsub / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        cols = cols + (hsub / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    return x, cols


def p_inverse_detailed(model: ManifoldModel, v: TangentCurve,
                       substeps: int = 2, order: int = 3):
    """Integrate the coupled position+frame system; returns the realized
    curve together with the transported frame field along it."""
    grid = v.grid
    base_node = grid.base_node()
    n = grid.nodes.size
    h = grid.h
    v_stages = _stage_values(np.asarray(v.components), substeps)

    charts = [None] * n
    coords = [None] * n
    frames = [None] * n
    switch_log: list[tuple[int, str, str]] = []

    chart0 = v.base.chart_id
    x0 = v.base.coords.copy()
    e0 = v.frame0.columns.copy()
    charts[base_node], coords[base_node], frames[base_node] = chart0, x0, e0

    def march(stop: int):
        chart, x, cols = chart0, x0.copy(), e0.copy()
        direction = 1 if stop >= base_node else -1
        j = base_node
        while j != stop:
            interval = j if direction > 0 else j - 1
            x, cols = _integrate_interval(model, chart, x, cols,
                                          v_stages[interval], h, substeps,
                                          reverse=direction < 0)
            j += direction
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(cols))):
                raise NonFiniteState(
                    f"inverse system became non-finite at node {j}")
            if j != stop:
                chart, x, cols = _switch_state(model, chart, x, cols, j,
                                               switch_log)
            charts[j], coords[j], frames[j] = chart, x.copy(), cols.copy()

    march(n - 1)
    if base_node > 0:
        march(0)

    points = tuple(Point(charts[j], coords[j]) for j in range(n))
    curve = SampledCurve(grid=grid, points=points, order=order,
                         base_index=base_node)
    switch_log.sort()
    field = FrameField(curve=curve,
                       frames=tuple(Frame(points[j], frames[j])
                                    for j in range(n)),
                       switch_log=tuple(switch_log))
    return curve, field


def p_inverse(model: ManifoldModel, v: TangentCurve,
              substeps: int = 2, order: int = 3) -> SampledCurve:
    """Realize a tangent-space curve as a manifold curve through the coupled
    position+frame initial-value problem."""
    curve, _ = p_inverse_detailed(model, v, substeps=substeps, order=order)
    return curve


def _solve_inverse_batch(model: ManifoldModel, charts0, coords0: np.ndarray,
                         frames0: np.ndarray, grid: Grid,
                         components: np.ndarray, substeps: int = 2):
    """Solve the coupled position+frame system for a batch of independent
    initial conditions sharing one grid.

    charts0: chart id per element; coords0: (B, m); frames0: (B, m, m);
    components: (B, n, m) coefficients in each element's initial frame.
    Returns (charts, coords, frames, switch_logs) with per-node data.

    Elements in the same chart advance together through vectorized RK4
    stages; chart switches are handled per element at node boundaries.
    """
    b, n, m = components.shape
    base_node = grid.base_node()
    h = grid.h
    flat = np.ascontiguousarray(components.transpose(1, 0, 2)).reshape(n, b * m)
    v_stages = _stage_values(flat, substeps)          # (n-1, S, b*m)
    v_stages = v_stages.reshape(n - 1, -1, b, m).transpose(2, 0, 1, 3)

    charts_out = [[None] * n for _ in range(b)]
    coords_out = np.empty((b, n, m))
    frames_out = np.empty((b, n, m, m))
    logs = [[] for _ in range(b)]

    def record(j, charts, x, e):
        for i in range(b):
            charts_out[i][j] = charts[i]
        coords_out[:, j] = x
        frames_out[:, j] = e

    record(base_node, list(charts0), coords0, frames0)

    def march(stop: int):
        charts = list(charts0)
        x = coords0.copy()
        e = frames0.copy()
        direction = 1 if stop >= base_node else -1
        j = base_node

        def groups():
            out: dict[str, list[int]] = {}
            for i, cid in enumerate(charts):
                out.setdefault(cid, []).append(i)
            return {cid: np.asarray(idx) for cid, idx in out.items()}

        chart_groups = groups()

        def rhs(xs, es, vs):
            r = np.einsum("bki,bi->bk", es, vs)
            if len(chart_groups) == 1:
                cid = next(iter(chart_groups))
                mm = model.christoffel_action_batch(cid, xs, r)
            else:
                mm = np.empty((b, m, m))
                for cid, idx in chart_groups.items():
                    mm[idx] = model.christoffel_action_batch(cid, xs[idx], r[idx])
            return r, -np.matmul(mm, es)

        while j != stop:
            interval = j if direction > 0 else j - 1
            hsub = (direction * h) / substeps
            for s in range(substeps):
                if direction > 0:
                    ia, ib, ic = 2 * s, 2 * s + 1, 2 * s + 2
                else:
                    top = v_stages.shape[2] - 1
                    ia, ib, ic = top - 2 * s, top - 2 * s - 1, top - 2 * s - 2
                va = v_stages[:, interval, ia]
                vb = v_stages[:, interval, ib]
                vc = v_stages[:, interval, ic]

                k1x, k1e = rhs(x, e, va)
                k2x, k2e = rhs(x + 0.5 * hsub * k1x, e + 0.5 * hsub * k1e, vb)
                k3x, k3e = rhs(x + 0.5 * hsub * k2x, e + 0.5 * hsub * k2e, vb)
                k4x, k4e = rhs(x + hsub * k3x, e + hsub * k3e, vc)
                x = x + (hsub / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
                e = e + (hsub / 6.0) * (k1e + 2 * k2e + 2 * k3e + k4e)
            j += direction
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(e))):
                raise NonFiniteState(
                    f"inverse system became non-finite at node {j}")
            if j != stop:
                switched = False
                for i in range(b):
                    if model.chart(charts[i]).domain_test(x[i]) != INSIDE:
                        chart, xi, ei = _switch_state(model, charts[i], x[i],
                                                      e[i], j, logs[i])
                        if chart != charts[i]:
                            charts[i], x[i], e[i] = chart, xi, ei
                            switched = True
                if switched:
                    chart_groups = groups()
            record(j, charts, x, e)

    march(n - 1)
    if base_node > 0:
        march(0)
    return charts_out, coords_out, frames_out, [sorted(l) for l in logs]


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def roundtrip_check(model: ManifoldModel, curve: SampledCurve,
                    frame0: Frame | None = None,
                    substeps: int = 2) -> RoundtripReport:
    """Max pointwise distance between the curve and p_inverse(p_forward(.))."""
    report = p_forward(model, curve, frame0, substeps)
    rebuilt = p_inverse(model, report.tangent_curve, substeps=substeps,
                        order=curve.order)
    dists = np.array([model.point_distance(a, b)
                      for a, b in zip(curve.points, rebuilt.points)])
    return RoundtripReport(max_distance=float(dists.max()), distances=dists,
                           reconstructed=rebuilt, forward=report)


def basis_independence_check(model: ManifoldModel, curve: SampledCurve,
                             frame_a: Frame, frame_b: Frame,
                             substeps: int = 2) -> float:
    """Realize the same tangent curve in two bases and compare the curves.

    The second component set is the exact GL(m) re-expression of the first,
    so the comparison isolates the solver's basis independence.
    """
    rep = p_forward(model, curve, frame_a, substeps)
    cols_a = frame_a.columns
    if frame_b.base.chart_id != frame_a.base.chart_id:
        jac = model.transition_jacobian(frame_a.base, frame_b.base.chart_id)
        cols_a = jac @ cols_a
    comps_b = np.linalg.solve(frame_b.columns, cols_a @ rep.tangent_curve.components.T).T
    vb = TangentCurve(base=frame_b.base, frame0=frame_b, grid=curve.grid,
                      components=comps_b)
    ga = p_inverse(model, rep.tangent_curve, substeps=substeps)
    gb = p_inverse(model, vb, substeps=substeps)
    return float(max(model.point_distance(a, b)
                     for a, b in zip(ga.points, gb.points)))


def chart_independence_check(model: ManifoldModel, curve: SampledCurve,
                             chart_a: str, chart_b: str,
                             substeps: int = 2) -> float:
    """Run p_inverse on the same component data with the initial point and
    frame expressed in two different start charts and compare the curves."""
    p_a = model.transition(curve.basepoint, chart_a)
    frame_a = model.orthonormal_frame(p_a)
    rep = p_forward(model, curve, frame_a, substeps)

    p_b = model.transition(p_a, chart_b)
    jac = model.transition_jacobian(p_a, chart_b)
    frame_b = Frame(p_b, jac @ frame_a.columns)
    vb = TangentCurve(base=p_b, frame0=frame_b, grid=curve.grid,
                      components=rep.tangent_curve.components)

    ga = p_inverse(model, rep.tangent_curve, substeps=substeps)
    gb = p_inverse(model, vb, substeps=substeps)
    return float(max(model.point_distance(a, b)
                     for a, b in zip(ga.points, gb.points)))


def rescale_to_unit(v: TangentCurve, a: float) -> TangentCurve:
    """Pull a tangent curve on [-a, a] back to [-1, 1], scaling components by
    a, so realizing the result reparametrizes the realized original."""
    if a <= 0:
        raise ValidationError("rescale factor must be positive")
    if a == 1.0:
        return v
    return TangentCurve(base=v.base, frame0=v.frame0,
                        grid=Grid(v.grid.nodes / a),
                        components=a * np.asarray(v.components))
