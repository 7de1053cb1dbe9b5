"""Scene files: a chart, a metric, optional frame and spinor, named vector fields, points.

A scene is a JSON object with a top-level ``"schema": 1``.  Metric entries are
keyed by two coordinate indices (``"01"``; ``"0,1"`` is accepted too) and the
missing half is filled in symmetrically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .expr import ParseError, UnknownFunctionError, free_symbols
from .geometry import (Chart, FrameField, MetricField, VectorFieldExpr, _to_expr,
                       orthonormal_frame)
from .liealg import SignatureMetric
from .spinor import SpinorFieldExpr

__all__ = ["Scene", "SceneError", "load_scene", "bundled_scene_path", "DEFAULT_TOLERANCES"]

DEFAULT_TOLERANCES = {
    "killing": 1e-9,
    "conformal": 1e-9,
    "gkilling": 1e-9,
    "kosmann": 1e-9,
    "oracle": 1e-6,
    "decompose": 1e-12,
    "clifford": 1e-12,
    "projectors": 1e-12,
    "ad_invariance": 1e-9,
}


class SceneError(ValueError):
    """The scene file is malformed; the CLI maps this to exit code 2."""


def _require(cond: bool, msg: str):
    if not cond:
        raise SceneError(msg)


def _expr(text, where: str, coords):
    if not isinstance(text, (str, int, float)) or isinstance(text, bool):
        raise SceneError(f"{where}: expected an expression string, got {text!r}")
    try:
        e = _to_expr(str(text) if not isinstance(text, str) else text)
    except (ParseError, UnknownFunctionError) as exc:
        raise SceneError(f"{where}: {exc}") from None
    unknown = free_symbols(e) - set(coords)
    _require(not unknown, f"{where}: unknown symbol(s) {sorted(unknown)}")
    return e


def _metric_key(key: str, m: int) -> tuple[int, int]:
    parts = key.split(",") if "," in key else list(key) if len(key) == 2 else None
    try:
        i, j = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise SceneError(f"metric key {key!r} is not a pair of coordinate indices") from None
    _require(0 <= i < m and 0 <= j < m, f"metric key {key!r} out of range for dimension {m}")
    return i, j


@dataclass
class Scene:
    chart: Chart
    metric: MetricField
    fields: dict[str, VectorFieldExpr]
    points: np.ndarray
    frame: FrameField | None = None
    spinor: SpinorFieldExpr | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    digest: str = ""
    source: str = ""

    @property
    def m(self) -> int:
        return self.chart.m

    @property
    def signature(self) -> SignatureMetric:
        return self.chart.signature

    def tol(self, key: str, override: float | None = None) -> float:
        if override is not None:
            return override
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def field(self, name: str) -> VectorFieldExpr:
        if name not in self.fields:
            raise SceneError(f"no vector field named {name!r}; have {sorted(self.fields)}")
        return self.fields[name]

    def frame_field(self) -> FrameField:
        """The scene's frame, or the symbolic orthonormal frame of a diagonal metric."""
        if self.frame is not None:
            return self.frame
        if not self.metric.is_diagonal:
            raise SceneError("non-diagonal metric: the scene must give an explicit frame")
        return orthonormal_frame(self.metric, self.points)

    @classmethod
    def from_dict(cls, data: dict, digest: str = "", source: str = "") -> "Scene":
        _require(isinstance(data, dict), "scene must be a JSON object")
        _require(data.get("schema") == 1, f"unsupported scene schema {data.get('schema')!r}; expected 1")
        for key in ("dimension", "signature", "coordinates", "metric", "vector_fields", "points"):
            _require(key in data, f"scene is missing {key!r}")
        m = data["dimension"]
        _require(isinstance(m, int) and m >= 1, f"dimension must be a positive integer, got {m!r}")
        sig = data["signature"]
        _require(isinstance(sig, list) and len(sig) == 2 and all(isinstance(v, int) for v in sig),
                 f"signature must be [p, q], got {sig!r}")
        _require(sig[0] + sig[1] == m, f"signature {sig} does not add up to dimension {m}")
        coords = data["coordinates"]
        _require(isinstance(coords, list) and len(coords) == m and all(isinstance(c, str) for c in coords),
                 f"coordinates must be {m} names")
        try:
            chart = Chart(tuple(coords), SignatureMetric(*sig))
        except ValueError as exc:
            raise SceneError(str(exc)) from None

        raw = data["metric"]
        _require(isinstance(raw, dict), "metric must map index pairs to expressions")
        g = np.full((m, m), None, dtype=object)
        for key, text in raw.items():
            i, j = _metric_key(key, m)
            e = _expr(text, f"metric[{key}]", coords)
            for a, b in ((i, j), (j, i)):
                _require(g[a, b] is None or g[a, b] == e,
                         f"metric entries {i}{j} and {j}{i} disagree")
                g[a, b] = e
        g[g == None] = _to_expr("0")  # noqa: E711
        metric = MetricField(chart, g)

        vfs = data["vector_fields"]
        _require(isinstance(vfs, dict), "vector_fields must be an object")
        fields = {}
        for name, comps in vfs.items():
            _require(isinstance(comps, list) and len(comps) == m,
                     f"vector field {name!r} needs {m} components")
            fields[name] = VectorFieldExpr(tuple(_expr(c, f"vector_fields[{name}]", coords) for c in comps), name)

        pts = data["points"]
        try:
            points = np.array(pts, dtype=float)
        except (TypeError, ValueError):
            raise SceneError("points must be a list of numeric coordinate tuples") from None
        _require(points.ndim == 2 and points.shape[1] == m and len(points) >= 1,
                 f"points must be a non-empty list of {m}-tuples")
        _require(bool(np.all(np.isfinite(points))), "points must be finite")

        frame = None
        if data.get("frame") is not None:
            fr = data["frame"]
            _require(isinstance(fr, list) and len(fr) == m and all(isinstance(r, list) and len(r) == m for r in fr),
                     f"frame must be an {m}x{m} matrix of expressions")
            e = np.array([[_expr(c, "frame", coords) for c in row] for row in fr], dtype=object)
            frame = FrameField.from_frame(chart, e)

        spinor = None
        if data.get("spinor") is not None:
            sp = data["spinor"]
            _require(isinstance(sp, dict) and "re" in sp and "im" in sp, "spinor needs 're' and 'im' lists")
            _require(len(sp["re"]) == len(sp["im"]), "spinor 're' and 'im' differ in length")
            spinor = SpinorFieldExpr(tuple(_expr(c, "spinor.re", coords) for c in sp["re"]),
                                     tuple(_expr(c, "spinor.im", coords) for c in sp["im"]))

        tols = data.get("tolerances") or {}
        _require(isinstance(tols, dict), "tolerances must be an object")
        for k, v in tols.items():
            _require(k in DEFAULT_TOLERANCES, f"unknown tolerance key {k!r}")
            _require(isinstance(v, (int, float)) and v > 0, f"tolerance {k!r} must be positive")
        return cls(chart, metric, fields, points, frame, spinor, {k: float(v) for k, v in tols.items()},
                   digest, source)


def bundled_scene_path(name: str) -> Path | None:
    """Path of a scene shipped with the package, or None."""
    ref = resources.files("liespin") / "scenes" / name
    if ref.is_file():
        return Path(str(ref))
    return None


def load_scene(path: str | Path) -> Scene:
    """Load a scene file.  Bare names of bundled scenes also resolve."""
    p = Path(path)
    if not p.is_file():
        alt = bundled_scene_path(p.name)
        if alt is None:
            raise SceneError(f"scene file not found: {path}")
        p = alt
    raw = p.read_bytes()
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SceneError(f"{p}: invalid JSON ({exc})") from None
    return Scene.from_dict(data, hashlib.sha256(raw).hexdigest(), str(p))
