"""JSON file formats (schema_version 1) and CSV emission.

All files carry "schema_version" and a "kind" discriminator:

  curve               grid + one chart-tagged sample per node
  tangent_curve       base point, basis columns, per-node components
  cube                grid1 x grid2 array of chart-tagged samples
  cube_linearization  base, basis, v1 (grid1) and v2 (grid1 x grid2)
  points              a bare list of chart-tagged points
  report              command echo, tolerances, metrics, pass flags

Loaders validate before anything is computed and raise ValidationError
naming the offending field.  Writers emit canonical JSON (sorted keys,
two-space indent, trailing newline), so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cubemaps import CubeLinearization, CubeSample
from .errors import ValidationError
from .geometry import Frame, ManifoldModel, OUTSIDE, Point
from .linearize import TangentCurve
from .models import get_model
from .numerics import Grid
from .transport import SampledCurve

SCHEMA_VERSION = 1


def dump_json(payload: dict, path) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})")


def _require(payload: dict, field: str, kind=None):
    if field not in payload:
        raise ValidationError(f"missing field {field!r}")
    value = payload[field]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(f"field {field!r} has the wrong type")
    return value


def _check_header(payload: dict, kind: str):
    version = _require(payload, "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {version}")
    actual = _require(payload, "kind", str)
    if actual != kind:
        raise ValidationError(f"expected kind {kind!r}, found {actual!r}")


def _model_of(payload: dict) -> ManifoldModel:
    return get_model(_require(payload, "manifold", str))


# -- grids -------------------------------------------------------------------

def grid_to_json(grid: Grid) -> dict:
    if grid.uniform:
        return {"start": float(grid.nodes[0]), "end": float(grid.nodes[-1]),
                "n": int(grid.n_intervals)}
    return {"nodes": [float(t) for t in grid.nodes]}


def grid_from_json(payload: dict, field: str = "grid") -> Grid:
    spec = _require(payload, field, dict)
    if "nodes" in spec:
        return Grid(np.asarray(spec["nodes"], dtype=float))
    for key in ("start", "end", "n"):
        if key not in spec:
            raise ValidationError(f"field {field!r} needs start/end/n or nodes")
    return Grid.regular(float(spec["start"]), float(spec["end"]),
                        int(spec["n"]))


# -- points, frames ----------------------------------------------------------

def point_to_json(point: Point) -> dict:
    return {"chart": point.chart_id, "coords": [float(c) for c in point.coords]}


def point_from_json(model: ManifoldModel, payload: dict, where: str) -> Point:
    chart = _require(payload, "chart", str)
    if chart not in model.charts:
        raise ValidationError(f"{where}: unknown chart {chart!r}")
    coords = np.asarray(_require(payload, "coords", list), dtype=float)
    if coords.shape != (model.dim,):
        raise ValidationError(f"{where}: coords must have length {model.dim}")
    if not np.all(np.isfinite(coords)):
        raise ValidationError(f"{where}: coords must be finite")
    point = Point(chart, coords)
    if model.domain_status(point) == OUTSIDE:
        raise ValidationError(f"{where}: point lies outside chart {chart!r}")
    return point


def frame_to_json(frame: Frame) -> list:
    # one list per basis vector e_i (that is, the matrix columns)
    return [[float(c) for c in frame.columns[:, i]]
            for i in range(frame.columns.shape[1])]


def frame_from_json(base: Point, payload, where: str) -> Frame:
    cols = np.asarray(payload, dtype=float)
    m = base.coords.size
    if cols.shape != (m, m):
        raise ValidationError(f"{where}: frame needs {m} vectors of length {m}")
    try:
        return Frame(base, cols.T)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}")


# -- curves --------------------------------------------------------------------

def curve_to_json(model: ManifoldModel, curve: SampledCurve) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "curve",
        "manifold": model.name,
        "grid": grid_to_json(curve.grid),
        "base_index": int(curve.base_index),
        "order": int(curve.order),
        "samples": [point_to_json(p) for p in curve.points],
    }


def curve_from_json(payload: dict) -> tuple[ManifoldModel, SampledCurve]:
    _check_header(payload, "curve")
    model = _model_of(payload)
    grid = grid_from_json(payload)
    samples = _require(payload, "samples", list)
    if len(samples) != grid.nodes.size:
        raise ValidationError(
            f"field 'samples' has {len(samples)} entries but the grid has "
            f"{grid.nodes.size} nodes")
    points = tuple(point_from_json(model, s, f"samples[{j}]")
                   for j, s in enumerate(samples))
    base_index = int(payload.get("base_index", 0))
    order = int(payload.get("order", 1))
    if order < 1:
        raise ValidationError("field 'order' must be at least 1")
    curve = SampledCurve(grid=grid, points=points, order=order,
                         base_index=base_index)
    validate_curve(model, curve)
    return model, curve


def validate_curve(model: ManifoldModel, curve: SampledCurve) -> None:
    """Sampled-curve invariants: consecutive points share a chart after at
    most one transition and stay within the injectivity floor."""
    for j in range(len(curve.points) - 1):
        a, b = curve.points[j], curve.points[j + 1]
        try:
            model.transition(b, a.chart_id)
        except Exception:
            raise ValidationError(
                f"samples[{j}] and samples[{j + 1}] share no chart")
        if model.oracle is not None:
            d = model.dist_oracle(a, b)
            if d >= min(model.r0(a), model.r0(b)):
                raise ValidationError(
                    f"samples[{j}] and samples[{j + 1}] are {d:.4f} apart, "
                    "beyond the injectivity floor")


# -- tangent curves -----------------------------------------------------------

def tangent_curve_to_json(model: ManifoldModel, v: TangentCurve) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "tangent_curve",
        "manifold": model.name,
        "grid": grid_to_json(v.grid),
        "base": point_to_json(v.base),
        "frame0": frame_to_json(v.frame0),
        "components": [[float(c) for c in row] for row in v.components],
    }


def tangent_curve_from_json(payload: dict) -> tuple[ManifoldModel, TangentCurve]:
    _check_header(payload, "tangent_curve")
    model = _model_of(payload)
    grid = grid_from_json(payload)
    base = point_from_json(model, _require(payload, "base", dict), "base")
    frame0 = frame_from_json(base, _require(payload, "frame0", list), "frame0")
    comps = np.asarray(_require(payload, "components", list), dtype=float)
    if comps.shape != (grid.nodes.size, model.dim):
        raise ValidationError(
            f"field 'components' must be {grid.nodes.size} rows of length "
            f"{model.dim}")
    return model, TangentCurve(base=base, frame0=frame0, grid=grid,
                               components=comps)


# -- cubes ---------------------------------------------------------------------

def cube_to_json(model: ManifoldModel, cube: CubeSample) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "cube",
        "manifold": model.name,
        "grid1": grid_to_json(cube.grid1),
        "grid2": grid_to_json(cube.grid2),
        "samples": [[point_to_json(p) for p in row] for row in cube.points],
    }


def cube_from_json(payload: dict) -> tuple[ManifoldModel, CubeSample]:
    _check_header(payload, "cube")
    model = _model_of(payload)
    grid1 = grid_from_json(payload, "grid1")
    grid2 = grid_from_json(payload, "grid2")
    samples = _require(payload, "samples", list)
    if len(samples) != grid1.nodes.size:
        raise ValidationError("field 'samples' must have one row per grid1 node")
    rows = []
    for i, row in enumerate(samples):
        if not isinstance(row, list) or len(row) != grid2.nodes.size:
            raise ValidationError(
                f"samples[{i}] must have one entry per grid2 node")
        rows.append(tuple(point_from_json(model, s, f"samples[{i}][{j}]")
                          for j, s in enumerate(row)))
    return model, CubeSample(grid1=grid1, grid2=grid2, points=tuple(rows))


def cube_linearization_to_json(model: ManifoldModel,
                               lin: CubeLinearization) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "cube_linearization",
        "manifold": model.name,
        "grid1": grid_to_json(lin.grid1),
        "grid2": grid_to_json(lin.grid2),
        "base": point_to_json(lin.base),
        "frame0": frame_to_json(lin.frame0),
        "v1": [[float(c) for c in row] for row in lin.v1],
        "v2": [[[float(c) for c in vec] for vec in row] for row in lin.v2],
    }


def cube_linearization_from_json(payload: dict):
    _check_header(payload, "cube_linearization")
    model = _model_of(payload)
    grid1 = grid_from_json(payload, "grid1")
    grid2 = grid_from_json(payload, "grid2")
    base = point_from_json(model, _require(payload, "base", dict), "base")
    frame0 = frame_from_json(base, _require(payload, "frame0", list), "frame0")
    v1 = np.asarray(_require(payload, "v1", list), dtype=float)
    v2 = np.asarray(_require(payload, "v2", list), dtype=float)
    try:
        lin = CubeLinearization(base=base, frame0=frame0, grid1=grid1,
                                grid2=grid2, v1=v1, v2=v2)
    except ValidationError as exc:
        raise ValidationError(f"cube_linearization: {exc}")
    return model, lin


# -- point lists ----------------------------------------------------------------

def points_to_json(model: ManifoldModel, points) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "points",
        "manifold": model.name,
        "points": [point_to_json(p) for p in points],
    }


def points_from_json(payload: dict):
    _check_header(payload, "points")
    model = _model_of(payload)
    entries = _require(payload, "points", list)
    points = tuple(point_from_json(model, s, f"points[{j}]")
                   for j, s in enumerate(entries))
    return model, points


# -- reports and CSV -------------------------------------------------------------

def report_to_json(command: str, tolerances: dict, metrics: dict,
                   passes: dict, extra: dict | None = None) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "report",
        "command": command,
        "tolerances": tolerances,
        "metrics": metrics,
        "passes": passes,
    }
    if extra:
        payload.update(extra)
    return payload


def curve_to_csv(model: ManifoldModel, curve: SampledCurve, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + [f"x{i}" for i in range(model.dim)] + ["chart"])
        for t, p in zip(curve.grid.nodes, curve.points):
            writer.writerow([repr(float(t))]
                            + [repr(float(c)) for c in p.coords]
                            + [p.chart_id])


def tangent_curve_to_csv(model: ManifoldModel, v: TangentCurve, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + [f"v{i}" for i in range(model.dim)])
        for t, row in zip(v.grid.nodes, v.components):
            writer.writerow([repr(float(t))] + [repr(float(c)) for c in row])
