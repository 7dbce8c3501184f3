"""Run configuration: JSON schema, validation, and object construction.

Configs are strict: unknown keys anywhere are rejected, and every default is
resolved into the emitted manifest so a run is reproducible from it.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import jsonschema

from . import geometry
from .geometry import DomainSpec, MetricChart, make_chart


class ConfigError(ValueError):
    """Invalid or schema-violating run configuration."""


CHECK_IDS = (
    "log-concavity",
    "main-inequality",
    "barrier-criteria",
    "sweep",
    "gradient-bound",
    "boundary-probe",
    "strict-region",
    "half-log-concavity",
)

_num = {"type": "number"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["chart", "domain"],
    "properties": {
        "chart": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(geometry.CHART_KINDS)},
                "epsilon": _num,
                "psi": {"type": ["string", "null"]},
            },
        },
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["shape"],
            "properties": {
                "shape": {"enum": ["disk", "ellipse", "rectangle", "radial",
                                    "spherical-cap", "hyperbolic-ball"]},
                "rho": _num,
                "a": _num,
                "b": _num,
                "theta0": _num,
                "radius": _num,
                "profile": {"type": "string"},
                "center": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "level": {"type": "integer", "minimum": 8},
                "h": {"type": ["number", "null"]},
                "richardson": {"type": "boolean"},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": ["sphere-convex", "euclidean-convex", "pinched-sphere",
                                     "einstein-nonneg", "hyperbolic-ball", "general", "manual",
                                     None]},
                "alpha": {"type": ["number", "null"]},
                "c": {"type": ["number", "null"]},
                "d": {"type": ["number", "null"]},
                "eps": {"type": ["number", "null"]},
                "n": {"type": "integer", "minimum": 2},
            },
        },
        "checks": {"type": "array", "items": {"enum": list(CHECK_IDS)}},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"steps": {"type": "integer", "minimum": 5}},
        },
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "offsets": {"type": ["array", "null"], "items": _num, "minItems": 2},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol_scale": _num, "touch_tol": {"type": ["number", "null"]}},
        },
        "spectral_gap": {"type": "boolean"},
        "heatmaps": {"type": "array", "items": {"enum": ["u", "v", "margin"]}},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "chart": {"epsilon": 0.0, "psi": None},
    "grid": {"level": 64, "h": None, "richardson": True},
    "constants": {"preset": None, "alpha": None, "c": None, "d": None, "eps": None, "n": 2},
    "checks": list(CHECK_IDS),
    "sweep": {"steps": 11},
    "probe": {"samples": 8, "offsets": None},
    "tolerances": {"tol_scale": 1.0, "touch_tol": None},
    "spectral_gap": False,
    "heatmaps": ["u", "v", "margin"],
    "output_dir": "out",
}


def validate_config(raw: dict) -> dict:
    """Schema-validate and fill defaults; returns the resolved config."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"config rejected: {e.message} (at {'/'.join(str(p) for p in e.absolute_path)})")
    cfg = copy.deepcopy(raw)
    for key, sub in DEFAULTS.items():
        if isinstance(sub, dict):
            merged = dict(sub)
            merged.update(cfg.get(key, {}))
            cfg[key] = merged
        else:
            cfg.setdefault(key, copy.deepcopy(sub))
    if cfg["grid"]["h"] is None and cfg["grid"].get("level") is None:
        cfg["grid"]["level"] = 64
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return validate_config(raw)


def chart_from_config(cfg: dict) -> MetricChart:
    c = cfg["chart"]
    return make_chart(c["kind"], epsilon=c.get("epsilon") or 0.0, psi=c.get("psi"))


def domain_from_config(cfg: dict) -> DomainSpec:
    d = cfg["domain"]
    shape = d["shape"]
    center = tuple(d.get("center", (0.0, 0.0)))

    def need(*keys):
        missing = [k for k in keys if d.get(k) is None]
        if missing:
            raise ConfigError(f"domain shape {shape!r} needs {missing}")

    if shape == "disk":
        need("rho")
        return geometry.disk(d["rho"], center)
    if shape == "ellipse":
        need("a", "b")
        return geometry.ellipse(d["a"], d["b"], center)
    if shape == "rectangle":
        need("a", "b")
        return geometry.rectangle(d["a"], d["b"], center)
    if shape == "radial":
        need("profile")
        return geometry.radial(d["profile"], center)
    if shape == "spherical-cap":
        need("theta0")
        if center != (0.0, 0.0):
            raise ConfigError("spherical-cap domains are centered at the chart origin")
        return geometry.spherical_cap(d["theta0"])
    if shape == "hyperbolic-ball":
        need("radius")
        if center != (0.0, 0.0):
            raise ConfigError("hyperbolic-ball domains are centered at the chart origin")
        return geometry.hyperbolic_ball(d["radius"])
    raise ConfigError(f"unhandled shape {shape!r}")


def grid_h(cfg: dict, domain: DomainSpec) -> float:
    g = cfg["grid"]
    if g.get("h"):
        return float(g["h"])
    return domain.grid_scale / float(g["level"])
