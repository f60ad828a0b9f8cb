"""Instance files, front export and atomic file writes."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
import tempfile
from itertools import combinations
from pathlib import Path
from typing import Any

import jsonschema

from .frontier import FrontierResult, normalized_quality
from .model import Feature, Instance, Line, LineClass, Product, ProductClass, validate_instance

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

_CLASS = {"enum": [c.value for c in ProductClass]}
_NUM = {"type": "number"}
_TENSOR = {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": _NUM}}}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "products", "features", "lines", "requires", "cost", "quality", "emission",
                 "resource", "green", "weights"],
    "properties": {
        "format": {"const": FORMAT_VERSION},
        "name": {"type": "string"},
        "products": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "class"],
            "properties": {"id": {"type": "string"}, "class": _CLASS}}},
        "features": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "class"],
            "properties": {"id": {"type": "string"}, "class": _CLASS}}},
        "lines": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "class", "capacity", "supports"],
            "properties": {
                "id": {"type": "string"},
                "class": {"enum": [c.value for c in LineClass]},
                "capacity": _NUM,
                "supports": {"type": "array", "items": {"type": "string"}},
                "incompatible": {"type": "array", "items": {
                    "type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
                "incompatible_all": {"type": "boolean"},
            }}},
        "requires": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}},
        "cost": _TENSOR,
        "quality": _TENSOR,
        "emission": _TENSOR,
        "resource": _TENSOR,
        "green": {"type": "object", "additionalProperties": False, "required": ["AG", "alpha", "beta"],
                  "properties": {"AG": _NUM, "alpha": _NUM, "beta": _NUM}},
        "weights": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
    },
}


class InstanceFormatError(ValueError):
    """Schema, syntax or validation failure while reading an instance file."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or [message]


def _locate(text: str, token: str) -> str:
    pos = text.find(f'"{token}"')
    if pos < 0:
        return ""
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return f"line {line}, column {col}: "


def instance_from_dict(doc: dict, text: str = "") -> Instance:
    """Build an instance from a parsed document, enforcing the strict schema."""
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            where = ""
            if e.validator == "additionalProperties":
                extra = [k for k in e.instance if k not in e.schema.get("properties", {})]
                where = _locate(text, extra[0]) if extra and text else ""
            elif e.absolute_path:
                where = _locate(text, str(e.absolute_path[-1])) if text else ""
            msgs.append(f"{where}{path}: {e.message}")
        raise InstanceFormatError("schema violation: " + "; ".join(msgs), msgs)

    products = tuple(Product(p["id"], ProductClass(p["class"])) for p in doc["products"])
    features = tuple(Feature(f["id"], ProductClass(f["class"])) for f in doc["features"])
    fidx = {f.name: k for k, f in enumerate(features)}

    def feature_index(line_id: str, name: str) -> int:
        if name not in fidx:
            raise InstanceFormatError(f"{_locate(text, name)}line {line_id} references unknown feature {name}")
        return fidx[name]

    lines = []
    for ln in doc["lines"]:
        supports = frozenset(feature_index(ln["id"], f) for f in ln["supports"])
        pairs = {frozenset((feature_index(ln["id"], a), feature_index(ln["id"], b))) for a, b in ln.get("incompatible", [])}
        if ln.get("incompatible_all"):
            pairs |= {frozenset(p) for p in combinations(sorted(supports), 2)}
        lines.append(Line(ln["id"], LineClass(ln["class"]), float(ln["capacity"]), supports, frozenset(pairs)))
    green = doc["green"]
    shape = (len(products), len(features), len(lines))
    for key in ("cost", "quality", "emission", "resource"):
        t = doc[key]
        if len(t) != shape[0] or any(len(r) != shape[1] for r in t) or any(len(c) != shape[2] for r in t for c in r):
            raise InstanceFormatError(f"{_locate(text, key)}{key}: expected nested shape {shape}")
    if len(doc["requires"]) != shape[0] or any(len(r) != shape[1] for r in doc["requires"]):
        raise InstanceFormatError(f"{_locate(text, 'requires')}requires: expected shape {shape[:2]}")
    inst = Instance(products, features, tuple(lines), doc["requires"], doc["cost"], doc["quality"],
                    doc["emission"], doc["resource"], float(green["AG"]), float(green["alpha"]),
                    float(green["beta"]), tuple(doc["weights"]))
    report = validate_instance(inst)
    if not report.ok:
        raise InstanceFormatError("invalid instance: " + "; ".join(report.violations), report.violations)
    return inst


def parse_instance(path: str | os.PathLike) -> Instance:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc, text)


def _num(x: float) -> float | int:
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def instance_to_dict(inst: Instance) -> dict:
    def tensor(a):
        return [[[_num(v) for v in col] for col in row] for row in a]

    feats = inst.features
    return {
        "format": FORMAT_VERSION,
        "products": [{"id": p.name, "class": p.cls.value} for p in inst.products],
        "features": [{"id": f.name, "class": f.cls.value} for f in feats],
        "lines": [{
            "id": ln.name,
            "class": ln.cls.value,
            "capacity": _num(ln.capacity),
            "supports": [feats[j].name for j in sorted(ln.supports)],
            "incompatible": [[feats[a].name, feats[b].name] for a, b in sorted(tuple(sorted(p)) for p in ln.incompatible)],
        } for ln in inst.lines],
        "requires": [[int(v) for v in row] for row in inst.requires],
        "cost": tensor(inst.cost),
        "quality": tensor(inst.quality),
        "emission": tensor(inst.emission),
        "resource": tensor(inst.resource),
        "green": {"AG": _num(inst.avg_emission), "alpha": _num(inst.penalty_rate), "beta": _num(inst.reward_rate)},
        "weights": [_num(w) for w in inst.weights],
    }


_FLAT_ARRAY = re.compile(r"\[[\d\s,.\-eE+]*\]")


def dumps_instance(inst: Instance) -> str:
    """Canonical text: sorted keys, one-line numeric arrays, trailing newline."""
    text = json.dumps(instance_to_dict(inst), sort_keys=True, indent=1)
    text = _FLAT_ARRAY.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(0)[1:-1].split(",")) + "]", text)
    return text + "\n"


def atomic_write(path: str | os.PathLike, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_instance(inst: Instance, path: str | os.PathLike) -> None:
    atomic_write(path, dumps_instance(inst))


CSV_COLUMNS = ["grid_index", "z1_cost", "z2_quality", "z2_quality_normalized", "z3_emission", "S", "R"]


def front_csv(result: FrontierResult, inst: Instance) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in result.points:
        v = p.objectives
        w.writerow([p.grid_index, f"{v.z1:.3f}", f"{v.z2:.3f}", f"{normalized_quality(inst, v):.3f}", f"{v.z3:.3f}",
                    "" if p.s_value is None else f"{p.s_value:.3f}",
                    "" if p.r_value is None else f"{p.r_value:.3f}"])
    return buf.getvalue()


def front_dict(result: FrontierResult, inst: Instance) -> dict:
    pt = result.payoff
    return {
        "method": result.method,
        "grid_count": result.config.grid_count,
        "eps": result.config.eps,
        "green_enabled": result.config.green_enabled,
        "subproblems": result.subproblems,
        "payoff": None if pt is None else {
            "rows": [list(r.as_tuple()) for r in pt.rows],
            "ideal": list(pt.ideal), "nadir": list(pt.nadir), "ranges": list(pt.ranges)},
        "points": [{
            "grid_index": p.grid_index,
            "z1_cost": p.objectives.z1,
            "z2_quality": p.objectives.z2,
            "z2_quality_normalized": normalized_quality(inst, p.objectives),
            "z3_emission": p.objectives.z3,
            "S": p.s_value,
            "R": p.r_value,
            "t_green": p.assignment.t_green,
            "e_green": p.assignment.e_green,
            "assignment": [list(lab) for lab in p.assignment.labels(inst)],
        } for p in result.points],
    }


def plot_data(result: FrontierResult) -> str:
    return "".join(f"{p.objectives.z1:.3f} {p.objectives.z2:.3f}\n" for p in result.points)


def export_front(result: FrontierResult, inst: Instance, path: str | os.PathLike, fmt: str = "csv") -> list[Path]:
    """Write the front as CSV or JSON plus a two-column plot-data file next to it.

    Returns the written paths.
    """
    path = Path(path)
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    if not result.points:
        log.warning("empty front: writing header-only output")
    body = front_csv(result, inst) if fmt == "csv" else json.dumps(front_dict(result, inst), indent=1, sort_keys=True) + "\n"
    atomic_write(path, body)
    plot = path.with_suffix(".plot.txt")
    atomic_write(plot, plot_data(result))
    return [path, plot]


DATA_DIR = Path(__file__).with_name("data")


def fixture_path(name: str) -> Path:
    """Path of a bundled instance file, e.g. ``fixture_path("tiny1")``."""
    return DATA_DIR / f"{name}.json"


def load_fixture(name: str) -> Instance:
    return parse_instance(fixture_path(name))
