"""Chart-atlas manifold abstraction.

A ManifoldModel bundles explicit coordinate charts with transition maps (and
their Jacobians), a Christoffel-symbol evaluator, a metric evaluator, an
optional closed-form exp/log/dist oracle, and a conservative injectivity
floor r0.  The connection is supplied as Gamma^l_{kj} directly; it must be
compatible with the metric but need not be Levi-Civita, and a constructor
validator probes the compatibility residual.

All values are immutable after construction and every operation is a pure
function, so concurrent use needs no synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import NoOracle, NoOverlap, ValidationError

INSIDE = "inside"
MARGIN = "margin"
OUTSIDE = "outside"

_FRAME_DET_FLOOR = 1e-10


def _freeze(array, shape=None) -> np.ndarray:
    arr = np.array(array, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValidationError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Point:
    """A manifold point: a chart id plus coordinates in that chart."""

    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _freeze(self.coords))


@dataclass(frozen=True)
class Tangent:
    """A tangent vector: components in the base point's coordinate frame."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        comps = _freeze(self.components)
        if comps.shape != self.base.coords.shape:
            raise ValidationError("tangent components must match the base dimension")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True)
class Frame:
    """m columns e_i at a base point; column i holds the components e_i^j."""

    base: Point
    columns: np.ndarray

    def __post_init__(self):
        m = self.base.coords.size
        cols = _freeze(self.columns, shape=(m, m))
        norms = np.linalg.norm(cols, axis=0)
        scale = float(np.prod(norms)) if np.all(norms > 0) else 0.0
        if scale == 0.0 or abs(np.linalg.det(cols)) < _FRAME_DET_FLOOR * scale:
            raise ValidationError("frame columns are (numerically) linearly dependent")
        object.__setattr__(self, "columns", cols)

    def column(self, i: int) -> Tangent:
        return Tangent(self.base, self.columns[:, i])


@dataclass(frozen=True)
class ChartSpec:
    """One coordinate chart: identity, domain classifier, and sampling data.

    domain_test maps coordinates to INSIDE / MARGIN / OUTSIDE.  MARGIN means
    the coordinates are still valid but continuation should switch charts.
    `center` is the chart's own origin in its coordinates; `sample_box` is a
    box strictly inside the interior used for seeded probing.
    """

    chart_id: str
    domain_test: Callable[[np.ndarray], str]
    center: np.ndarray
    sample_box: tuple[np.ndarray, np.ndarray]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "center", _freeze(self.center))
        lo, hi = self.sample_box
        object.__setattr__(self, "sample_box", (_freeze(lo), _freeze(hi)))


class TransitionMap:
    """Coordinate change between two charts with its Jacobian.

    `apply` may return None when the point has no image in the target chart
    (for example a stereographic projection point), which surfaces as
    NoOverlap at the model level.
    """

    def __init__(self, apply: Callable[[np.ndarray], np.ndarray | None],
                 jacobian: Callable[[np.ndarray], np.ndarray]):
        self.apply = apply
        self.jacobian = jacobian


class Oracle:
    """Closed-form exp/log/dist for a model geometry.

    The scalar methods take chart-tagged values.  The *_from kernels are
    fixed-chart batch variants used by the flow machinery: all coordinates
    live in one named chart, nothing is validated, and the defaults simply
    loop over the scalar methods.
    """

    def exp(self, model: "ManifoldModel", p: Point, v: Tangent) -> Point:
        raise NotImplementedError

    def log(self, model: "ManifoldModel", p: Point, q: Point) -> Tangent:
        raise NotImplementedError

    def dist(self, model: "ManifoldModel", p: Point, q: Point) -> float:
        raise NotImplementedError

    def dist_from(self, model: "ManifoldModel", p: Point, chart_id: str,
                  coords: np.ndarray) -> np.ndarray:
        return np.array([self.dist(model, p, Point(chart_id, c))
                         for c in coords])

    def log_from(self, model: "ManifoldModel", p: Point, chart_id: str,
                 coords: np.ndarray) -> np.ndarray:
        return np.stack([self.log(model, p, Point(chart_id, c)).components
                         for c in coords])

    def exp_from(self, model: "ManifoldModel", p: Point, vecs: np.ndarray,
                 chart_id: str) -> np.ndarray:
        out = []
        for v in vecs:
            q = self.exp(model, p, Tangent(p, v))
            out.append(model.transition(q, chart_id).coords)
        return np.stack(out)


class ManifoldModel:
    """A chart atlas with connection, metric, and optional closed-form oracle.

    christoffel returns Gamma[l, k, j] = Gamma^l_{kj}; the frame equation
    contracts the k slot with the velocity and the j slot with the frame
    component.  Batched variants take (K, m) coordinates and are the hooks the
    transport kernels rely on, so models should override them with closed
    forms where speed matters.
    """

    def __init__(self, name: str, dim: int, charts: Sequence[ChartSpec],
                 transitions: Mapping[tuple[str, str], TransitionMap],
                 christoffel, metric, r0, oracle: Oracle | None = None,
                 validate: bool = True):
        self.name = name
        self.dim = dim
        self.charts = {c.chart_id: c for c in charts}
        self.transitions = dict(transitions)
        self._christoffel = christoffel
        self._metric = metric
        self._r0 = r0
        self.oracle = oracle
        if validate:
            self._validate_compatibility()

    # -- chart bookkeeping ---------------------------------------------------

    def chart(self, chart_id: str) -> ChartSpec:
        try:
            return self.charts[chart_id]
        except KeyError:
            raise ValidationError(f"model {self.name!r} has no chart {chart_id!r}")

    def domain_status(self, point: Point) -> str:
        return self.chart(point.chart_id).domain_test(point.coords)

    def transition(self, point: Point, target: str) -> Point:
        """Re-express a point in the target chart; NoOverlap if impossible."""
        if target == point.chart_id:
            return point
        tmap = self.transitions.get((point.chart_id, target))
        if tmap is None:
            raise NoOverlap(f"no transition {point.chart_id!r} -> {target!r}")
        coords = tmap.apply(point.coords)
        if coords is None or not np.all(np.isfinite(coords)):
            raise NoOverlap(
                f"point in {point.chart_id!r} has no image in chart {target!r}")
        if self.chart(target).domain_test(coords) == OUTSIDE:
            raise NoOverlap(
                f"point in {point.chart_id!r} lies outside chart {target!r}")
        return Point(target, coords)

    def transition_jacobian(self, point: Point, target: str) -> np.ndarray:
        if target == point.chart_id:
            return np.eye(self.dim)
        tmap = self.transitions.get((point.chart_id, target))
        if tmap is None:
            raise NoOverlap(f"no transition {point.chart_id!r} -> {target!r}")
        return tmap.jacobian(point.coords)

    def push_tangent(self, t: Tangent, target: str) -> Tangent:
        """Move a tangent to another chart through the transition Jacobian."""
        if target == t.base.chart_id:
            return t
        base = self.transition(t.base, target)
        jac = self.transition_jacobian(t.base, target)
        return Tangent(base, jac @ t.components)

    def select_chart(self, point: Point) -> Point:
        """Deterministic continuation rule for a point at a chart margin.

        Candidates are all charts where the point is representable; charts
        reporting INSIDE win over MARGIN, then the chart whose center is
        nearest in its own coordinates, then the lowest chart id.
        """
        best = None
        for cid in sorted(self.charts):
            try:
                cand = self.transition(point, cid)
            except NoOverlap:
                continue
            status = self.domain_status(cand)
            if status == OUTSIDE:
                continue
            rank = (0 if status == INSIDE else 1,
                    float(np.linalg.norm(cand.coords - self.chart(cid).center)),
                    cid)
            if best is None or rank < best[0]:
                best = (rank, cand)
        if best is None:
            raise NoOverlap(f"no chart admits point {point}")
        return best[1]

    # -- connection and metric ------------------------------------------------

    def christoffel(self, chart_id: str, coords: np.ndarray) -> np.ndarray:
        return self._christoffel(chart_id, np.asarray(coords, dtype=float))

    def christoffel_batch(self, chart_id: str, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.stack([self._christoffel(chart_id, c) for c in coords])

    def christoffel_action(self, chart_id: str, coords: np.ndarray,
                           r: np.ndarray) -> np.ndarray:
        """M[l, j] = Gamma^l_{kj} r^k, the matrix acting on frame columns."""
        gamma = self.christoffel(chart_id, coords)
        return np.tensordot(gamma, r, axes=([1], [0]))

    def christoffel_action_batch(self, chart_id: str, coords: np.ndarray,
                                 r: np.ndarray) -> np.ndarray:
        """Batched christoffel_action over a leading axis of points."""
        gamma = self.christoffel_batch(chart_id, coords)
        return np.einsum("slkj,sk->slj", gamma, r)

    def metric(self, chart_id: str, coords: np.ndarray) -> np.ndarray:
        return self._metric(chart_id, np.asarray(coords, dtype=float))

    def metric_batch(self, chart_id: str, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.stack([self._metric(chart_id, c) for c in coords])

    def inner(self, u: Tangent, v: Tangent) -> float:
        if u.base.chart_id != v.base.chart_id:
            v = self.push_tangent(v, u.base.chart_id)
        g = self.metric(u.base.chart_id, u.base.coords)
        return float(u.components @ g @ v.components)

    def g_norm(self, t: Tangent) -> float:
        return float(np.sqrt(max(self.inner(t, t), 0.0)))

    def r0(self, point: Point) -> float:
        return float(self._r0(point))

    # -- frames ---------------------------------------------------------------

    def coordinate_frame(self, point: Point) -> Frame:
        return Frame(point, np.eye(self.dim))

    def orthonormal_frame(self, point: Point) -> Frame:
        """g-orthonormalized coordinate basis (Gram-Schmidt, column order)."""
        g = self.metric(point.chart_id, point.coords)
        cols = np.eye(self.dim)
        for i in range(self.dim):
            v = cols[:, i].copy()
            for k in range(i):
                v -= (cols[:, k] @ g @ v) * cols[:, k]
            norm = np.sqrt(v @ g @ v)
            if norm <= 0:
                raise ValidationError("metric is degenerate at the point")
            cols[:, i] = v / norm
        return Frame(point, cols)

    def frame_gram(self, frame: Frame) -> np.ndarray:
        """Gram matrix g(e_i, e_j) of a frame; the norm on its span."""
        g = self.metric(frame.base.chart_id, frame.base.coords)
        return frame.columns.T @ g @ frame.columns

    # -- oracle access ---------------------------------------------------------

    def _require_oracle(self) -> Oracle:
        if self.oracle is None:
            raise NoOracle(f"model {self.name!r} has no closed-form oracle")
        return self.oracle

    def exp_oracle(self, p: Point, v: Tangent) -> Point:
        return self._require_oracle().exp(self, p, v)

    def log_oracle(self, p: Point, q: Point) -> Tangent:
        return self._require_oracle().log(self, p, q)

    def dist_oracle(self, p: Point, q: Point) -> float:
        return self._require_oracle().dist(self, p, q)

    def point_distance(self, p: Point, q: Point) -> float:
        """Oracle distance when available, else coordinate distance in a
        common chart (the comparison metric used by the check reports)."""
        if self.oracle is not None:
            return self.dist_oracle(p, q)
        q_in_p = self.transition(q, p.chart_id)
        return float(np.linalg.norm(p.coords - q_in_p.coords))

    # -- construction-time validation ------------------------------------------

    def _validate_compatibility(self, step: float = 1e-5, tol: float = 1e-6):
        for spec in self.charts.values():
            lo, hi = spec.sample_box
            probes = [spec.center, lo, hi, 0.5 * (lo + hi)]
            for coords in probes:
                if spec.domain_test(np.asarray(coords, float)) == OUTSIDE:
                    continue
                res = metric_compatibility_residual(self, spec.chart_id,
                                                    coords, step)
                if res > tol:
                    raise ValidationError(
                        f"connection incompatible with metric on chart "
                        f"{spec.chart_id!r}: residual {res:.3e}")


def metric_compatibility_residual(model: ManifoldModel, chart_id: str,
                                  coords: np.ndarray, step: float = 1e-5) -> float:
    """Max |d_k g_ij - Gamma^l_{ki} g_lj - Gamma^l_{kj} g_il| with central
    differences for the metric derivative."""
    coords = np.asarray(coords, dtype=float)
    m = coords.size
    g = model.metric(chart_id, coords)
    gamma = model.christoffel(chart_id, coords)
    worst = 0.0
    for k in range(m):
        delta = np.zeros(m)
        delta[k] = step
        dg = (model.metric(chart_id, coords + delta)
              - model.metric(chart_id, coords - delta)) / (2.0 * step)
        term = dg - np.einsum("li,lj->ij", gamma[:, k, :], g) \
                  - np.einsum("lj,il->ij", gamma[:, k, :], g)
        worst = max(worst, float(np.max(np.abs(term))))
    return worst
