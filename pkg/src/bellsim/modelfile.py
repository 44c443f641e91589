"""Loading ``.model`` definition files.

A model file is a YAML mapping whose ``kind`` selects the family. Angles in
response tables are degrees unless ``angle_unit: rad``. Unknown keys are
rejected at every level.

p16 -- a distribution over the 16 rows of the sign table::

    kind: p16
    p: [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]

factorizable -- per-lambda ``angle: [value, probability]`` tables per wing::

    kind: factorizable
    angle_unit: deg
    lambdas:
      - label: up
        weight: 0.5
        A: {0: [1.0, 1.0], 90: [-1.0, 0.5]}
        B: {45: [1.0, 1.0], 135: [1.0, 0.25]}

joint -- one (A, B) table per lambda, rows indexed by ``values`` for A and
columns for B::

    kind: joint
    values: [1, -1]
    lambdas:
      - label: l0
        weight: 1.0
        table: [[0.0, 1.0], [0.0, 0.0]]

visibility::

    kind: visibility
    V: 0.95459
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Mapping

import yaml

from .lhv import HiddenVariableModel, JointDistributionModel, ModelValidationError, as_p16
from .montecarlo import FactorizableSource, JointSource, P16Source, VisibilityModel, VisibilitySource

_TOP_KEYS = {
    "p16": {"kind", "p", "description"},
    "factorizable": {"kind", "angle_unit", "lambdas", "description"},
    "joint": {"kind", "values", "lambdas", "description"},
    "visibility": {"kind", "V", "description"},
}
_LAMBDA_KEYS = {
    "factorizable": {"label", "weight", "A", "B"},
    "joint": {"label", "weight", "table"},
}


class ModelFileError(ValueError):
    pass


def _reject_unknown(mapping: Mapping, allowed: set, where: str) -> None:
    extra = set(mapping) - allowed
    if extra:
        raise ModelFileError(f"unknown keys in {where}: {sorted(map(str, extra))}")


def _require(mapping: Mapping, key: str, where: str) -> Any:
    if key not in mapping:
        raise ModelFileError(f"missing key {key!r} in {where}")
    return mapping[key]


def parse_model(doc: Any):
    """Build a sampling source from an already-parsed document."""
    if not isinstance(doc, Mapping):
        raise ModelFileError("model file must contain a mapping")
    kind = _require(doc, "kind", "model")
    if kind not in _TOP_KEYS:
        raise ModelFileError(f"unknown model kind {kind!r}; expected one of {sorted(_TOP_KEYS)}")
    _reject_unknown(doc, _TOP_KEYS[kind], "model")
    try:
        if kind == "p16":
            return P16Source(as_p16(_require(doc, "p", "model")))
        if kind == "visibility":
            return VisibilitySource(VisibilityModel(float(_require(doc, "V", "model"))))
        lambdas = _require(doc, "lambdas", "model")
        if not isinstance(lambdas, list) or not lambdas:
            raise ModelFileError("'lambdas' must be a non-empty list")
        for i, entry in enumerate(lambdas):
            if not isinstance(entry, Mapping):
                raise ModelFileError(f"lambda entry {i} must be a mapping")
            _reject_unknown(entry, _LAMBDA_KEYS[kind], f"lambda entry {i}")
        labels = [entry.get("label", i) for i, entry in enumerate(lambdas)]
        if len(set(labels)) != len(labels):
            raise ModelFileError("lambda labels must be unique")
        weights = [float(_require(e, "weight", f"lambda {l!r}")) for e, l in zip(lambdas, labels)]
        if kind == "factorizable":
            unit = doc.get("angle_unit", "deg")
            if unit not in ("deg", "rad"):
                raise ModelFileError(f"angle_unit must be 'deg' or 'rad', got {unit!r}")
            conv = math.radians if unit == "deg" else float
            table_A, table_B = {}, {}
            for e, l in zip(lambdas, labels):
                table_A[l] = _response_table(_require(e, "A", f"lambda {l!r}"), conv, l)
                table_B[l] = _response_table(_require(e, "B", f"lambda {l!r}"), conv, l)
            return FactorizableSource(HiddenVariableModel.from_tables(labels, weights, table_A, table_B))
        values = doc.get("values", [1.0, -1.0])
        tables = [_require(e, "table", f"lambda {l!r}") for e, l in zip(lambdas, labels)]
        return JointSource(JointDistributionModel(tuple(labels), tuple(weights), tuple(tables), tuple(values)))
    except (TypeError, ModelValidationError) as exc:
        raise ModelFileError(str(exc)) from exc


def _response_table(table: Any, conv, label) -> dict[float, tuple[float, float]]:
    if not isinstance(table, Mapping) or not table:
        raise ModelFileError(f"response table for lambda {label!r} must be a non-empty mapping")
    out = {}
    for angle, entry in table.items():
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ModelFileError(f"response for lambda {label!r} at {angle!r} must be [value, probability]")
        out[conv(float(angle))] = (float(entry[0]), float(entry[1]))
    return out


def load_model(path: str | Path):
    """Read and validate a model file; OSError propagates for I/O problems."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"{path}: not valid YAML: {exc}") from exc
    return parse_model(doc)


def load_config(path: str | Path, allowed: set[str]) -> dict:
    """Read a flat YAML mapping of CLI option names (dashes or underscores) to values."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ModelFileError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ModelFileError(f"{path}: config must be a mapping")
    out = {str(k).replace("-", "_"): v for k, v in doc.items()}
    _reject_unknown(out, allowed, f"config {path}")
    return out
