"""JSON configuration and gains files.

A run configuration has the blocks ``plant``, ``basis``, ``supply`` and the
optional ``algorithm``, ``solver`` and ``output``; see README for the field list.
Matrices are nested arrays of numbers (a bare number is a 1x1 matrix).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .basis import BasisSpec
from .errors import ConfigurationError
from .model import ControllerGains, PlantModel, SupplyRate, supply_from_template
from .synthesis import AlgorithmConfig

_MATRIX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}},
    ]
}
_VECTOR = {"type": "array", "minItems": 1, "items": {"type": "number"}}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["plant", "basis", "supply"],
    "additionalProperties": False,
    "properties": {
        "plant": {
            "type": "object",
            "required": ["A", "B", "D1", "C1", "C2", "C3bar", "D2", "D3", "r"],
            "additionalProperties": False,
            "properties": {
                **{k: _MATRIX for k in ("A", "B", "D1", "C1", "C2", "C3bar", "D2", "D3")},
                "r": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "basis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"exponents": _VECTOR, "Pi": _MATRIX, "f0": _VECTOR},
            "oneOf": [{"required": ["exponents"]}, {"required": ["Pi", "f0"]}],
        },
        "supply": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "template": {"enum": ["l2gain", "passivity", "sector"]},
                "alpha": {"type": "number"},
                "beta": {"type": "number"},
                "J1": _MATRIX,
                "Jtilde": _MATRIX,
                "J2": _MATRIX,
                "J3": _MATRIX,
            },
            "oneOf": [{"required": ["template"]}, {"required": ["J1", "Jtilde", "J2", "J3"]}],
        },
        "algorithm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rho1": {"type": "number", "exclusiveMinimum": 0},
                "rho2": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "X": _MATRIX,
                "K": _MATRIX,
                "proximal_only": {"type": "boolean"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "backend": {"enum": ["reference", "cvxopt"]},
                "feastol": {"type": "number", "exclusiveMinimum": 0},
                "gaptol": {"type": "number", "exclusiveMinimum": 0},
                "iter_cap": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"gains": {"type": "string"}, "trace": {"type": "string"}, "report": {"type": "string"}},
        },
    },
}


def _json_path(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        best = jsonschema.exceptions.best_match([exc]) or exc
        raise ConfigurationError(f"{_json_path(best.absolute_path)}: {best.message}") from None
    for block in ("plant", "supply", "algorithm", "basis"):
        for key, val in cfg.get(block, {}).items():
            if isinstance(val, list) and val and isinstance(val[0], list):
                widths = {len(row) for row in val}
                if len(widths) != 1:
                    raise ConfigurationError(f"$.{block}.{key}: rows have different lengths {sorted(widths)}")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    validate_config(cfg)
    return cfg


def paper_example_config() -> dict:
    text = resources.files("dsfc.data").joinpath("paper_example.json").read_text(encoding="utf-8")
    cfg = json.loads(text)
    validate_config(cfg)
    return cfg


def _m(x):
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass
class RunSetup:
    plant: PlantModel
    spec: BasisSpec
    supply: SupplyRate
    algorithm: AlgorithmConfig
    output: dict = field(default_factory=dict)


def _check_plant_shapes(p: dict, d: int) -> None:
    """Report the first plant matrix whose shape disagrees with A, B, D1 and C1."""
    A, B, D1, C1 = (_m(p[k]) for k in ("A", "B", "D1", "C1"))
    n, pp, q, m = A.shape[0], B.shape[1], D1.shape[1], C1.shape[0]
    nu = n + pp
    expected = {"A": (n, n), "B": (n, pp), "D1": (n, q), "C1": (m, nu), "C2": (m, nu), "C3bar": (m, d * nu),
                "D2": (pp, q), "D3": (m, q)}
    for k, want in expected.items():
        got = _m(p[k]).shape
        if got != want:
            raise ConfigurationError(f"$.plant.{k}: expected shape {want[0]}x{want[1]}, got {got[0]}x{got[1]}")


def setup_from_config(cfg: dict) -> RunSetup:
    p = cfg["plant"]
    b = cfg["basis"]
    _check_plant_shapes(p, len(b["exponents"]) if "exponents" in b else len(b["f0"]))
    plant = PlantModel(*(_m(p[k]) for k in ("A", "B", "D1", "C1", "C2", "C3bar", "D2", "D3")), r=float(p["r"]))
    if "exponents" in b:
        spec = BasisSpec.diagonal(b["exponents"], plant.r)
    else:
        spec = BasisSpec(_m(b["Pi"]), np.asarray(b["f0"], dtype=float), plant.r)
    s = cfg["supply"]
    if "template" in s:
        supply = supply_from_template(s["template"], plant.m, plant.q, s.get("alpha"), s.get("beta"))
    else:
        supply = SupplyRate(_m(s["J1"]), _m(s["Jtilde"]), _m(s["J2"]), _m(s["J3"]))
    a = dict(cfg.get("algorithm", {}))
    for k in ("X", "K"):
        if k in a:
            a[k] = _m(a[k])
    sv = cfg.get("solver", {})
    algo = AlgorithmConfig(**a, **sv)
    return RunSetup(plant, spec, supply, algo, dict(cfg.get("output", {})))


def gains_to_dict(gains: ControllerGains, gamma=None, certificate: dict | None = None, extra: dict | None = None) -> dict:
    out = {"K1": gains.K1.tolist(), "K2": gains.K2.tolist(), "K3": gains.K3.tolist(), "gamma": gamma}
    if certificate is not None:
        out["certificate"] = {k: np.asarray(v).tolist() for k, v in certificate.items()}
    if extra:
        out.update(extra)
    return out


def dumps_gains(data: dict) -> str:
    # json writes floats with repr, so values survive a round trip exactly
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_gains(path, gains: ControllerGains, gamma=None, certificate=None, extra=None) -> None:
    Path(path).write_text(dumps_gains(gains_to_dict(gains, gamma, certificate, extra)), encoding="utf-8")


def read_gains(path):
    """Returns (gains, gamma, certificate or None, raw dict)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"gains file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    for k in ("K1", "K2", "K3"):
        if k not in data:
            raise ConfigurationError(f"$.{k}: missing from gains file")
    gains = ControllerGains(_m(data["K1"]), _m(data["K2"]), _m(data["K3"]))
    cert = data.get("certificate")
    if cert is not None:
        cert = {k: _m(v) for k, v in cert.items()}
    return gains, data.get("gamma"), cert, data
