"""
Run configuration: JSON schema, validation and query-point generation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
from scipy.optimize import brentq

from .airy_predictor import DEFAULT_CONVENTION, Convention, locate_airy_argument, ray_point, tube_energy
from .classical import IntegratorSpec, Potential
from .errors import AiryLayerError, ConfigError

__all__ = ["RunConfig", "Query", "SCHEMA", "load_config", "parse_config", "generate_queries",
           "surface_point"]

_NUM = {"type": "number"}
_NUMLIST = {"type": "array", "items": _NUM}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["potential"],
    "properties": {
        "potential": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["isotropic", "anisotropic", "cosine_perturbed",
                                  "user_polynomial_bounded"]},
                "dimension": {"type": "integer", "minimum": 1, "maximum": 2},
                "omega": {"type": "number", "exclusiveMinimum": 0},
                "omegas": _NUMLIST,
                "lam": {"type": "number", "minimum": 0, "maximum": 0.5},
                "coeffs": {"type": "array", "items": _NUMLIST},
            },
            "additionalProperties": False,
        },
        "energy": {"type": "number", "exclusiveMinimum": 0},
        "hbar": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                 "minItems": 1},
        "queries": {
            "type": "object",
            "required": ["generator"],
            "properties": {
                "generator": {"enum": ["tube", "ray", "explicit", "airy_extrema", "random_tube"]},
                "u": _NUMLIST,
                "s": _NUMLIST,
                "points": {"type": "array", "items": _NUMLIST},
                "zeros": {"type": "array", "items": {"type": "integer", "minimum": 1,
                                                     "maximum": 3}},
                "theta": _NUM,
                "count": {"type": "integer", "minimum": 1},
                "u_range": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "window": {
            "type": "object",
            "properties": {"a": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "integrator": {
            "type": "object",
            "properties": {"rtol": _NUM, "atol": _NUM, "max_steps": {"type": "integer"},
                           "max_horizon": _NUM},
            "additionalProperties": False,
        },
        "convention": {
            "type": "object",
            "properties": {
                "ledger": {"type": "string"},
                "convention_id": {"type": "string"},
                "prefactor": {"type": "number", "exclusiveMinimum": 0},
                "rho_source": {"enum": ["critical-values", "area"]},
                "u00_placement": {"enum": ["split", "joint"]},
            },
            "additionalProperties": False,
        },
        "flow": {
            "type": "object",
            "properties": {"times": _NUMLIST, "points": {"type": "array", "items": _NUMLIST}},
            "additionalProperties": False,
        },
        "hk": {
            "type": "object",
            "properties": {"times": _NUMLIST},
            "additionalProperties": False,
        },
        "exact": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["smoothed", "sharp"]},
                "interval": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "basis_dir": {"type": "string"},
                "closed_form": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "compare": {
            "type": "object",
            "properties": {"predict_csv": {"type": "string"}, "exact_csv": {"type": "string"}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
}


@dataclass(frozen=True)
class Query:
    index: int
    x: np.ndarray
    xi: np.ndarray
    u: float
    tag: str = ""


@dataclass(frozen=True)
class RunConfig:
    potential: Potential
    energy: float
    hbars: tuple
    queries: dict
    window_a: float
    integrator: IntegratorSpec
    convention: Convention
    flow_times: tuple
    flow_points: tuple
    hk_times: tuple
    exact: dict
    compare: dict
    seed: int
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return self.potential.dimension


def parse_config(raw: dict, base_dir: Optional[Path] = None) -> RunConfig:
    """Validate a configuration document and build a :class:`RunConfig`."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
    try:
        pot = Potential.from_dict(raw["potential"])
    except AiryLayerError as exc:
        raise ConfigError(f"bad potential: {exc}") from exc
    hbars = tuple(float(h) for h in raw.get("hbar", [0.01]))
    if any(b >= a for a, b in zip(hbars, hbars[1:])):
        raise ConfigError("hbar values must be strictly descending")
    conv_raw = dict(raw.get("convention", {}))
    if "ledger" in conv_raw:
        path = Path(conv_raw.pop("ledger"))
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            conv = Convention.load(path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read convention ledger {path}: {exc}") from exc
    else:
        conv = DEFAULT_CONVENTION
    if conv_raw:
        conv = Convention.from_dict({**conv.to_dict(), **conv_raw})
    integ = IntegratorSpec(**raw.get("integrator", {}))
    flow_raw = raw.get("flow", {})
    return RunConfig(
        potential=pot,
        energy=float(raw.get("energy", 1.0)),
        hbars=hbars,
        queries=dict(raw.get("queries", {"generator": "tube", "u": [-2.0, 0.0, 1.0]})),
        window_a=float(raw.get("window", {}).get("a", 3.0)),
        integrator=integ,
        convention=conv,
        flow_times=tuple(float(t) for t in flow_raw.get("times", [0.0, math.pi / 2])),
        flow_points=tuple(tuple(float(v) for v in p) for p in flow_raw.get("points", [])),
        hk_times=tuple(float(t) for t in raw.get("hk", {}).get("times", [0.4, 0.8])),
        exact=dict(raw.get("exact", {})),
        compare=dict(raw.get("compare", {})),
        seed=int(raw.get("seed", 0)),
        raw=raw,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw, path.parent)


def surface_point(pot: Potential, E: float, theta: float) -> np.ndarray:
    """
    Point of Sigma_E on the phase-space ray from the potential minimum in
    the direction (cos theta, sin theta) of the first (q, p) plane.
    """
    d = pot.dimension
    centre = np.zeros(2 * d)
    if pot.kind == "user_polynomial_bounded":
        c = np.array(pot.coeffs)
        centre[:d] = -c[:, 1] / (2 * c[:, 2])
    direction = np.zeros(2 * d)
    direction[0] = math.cos(theta)
    direction[d] = math.sin(theta)

    def excess(r):
        z = centre + r * direction
        return 0.5 * np.dot(z[d:], z[d:]) + float(pot.value(z[:d])) - E

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    r = brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-15)
    return centre + r * direction


def generate_queries(cfg: RunConfig, hbar: float) -> list:
    """Query points for one hbar, in a deterministic order."""
    q = cfg.queries
    gen = q["generator"]
    d = cfg.dimension
    E = cfg.energy
    pot = cfg.potential
    theta = float(q.get("theta", 0.3))
    base = surface_point(pot, E, theta)
    out = []

    def add(z, u, tag=""):
        out.append(Query(len(out), np.array(z[:d]), np.array(z[d:]), float(u), tag))

    if gen == "tube":
        for u in q.get("u", [-2.0, 0.0, 1.0]):
            add(ray_point(base, pot, tube_energy(u, E, hbar)), u)
    elif gen == "ray":
        for s in q.get("s", [0.6]):
            H = s * E
            add(ray_point(base, pot, H), (H - E) * (2 * E / hbar) ** (2.0 / 3.0))
    elif gen == "explicit":
        for pt in q.get("points", []):
            if len(pt) != 2 * d:
                raise ConfigError(f"explicit point {pt} does not have 2d = {2 * d} entries")
            z = np.asarray(pt, dtype=float)
            H = 0.5 * np.dot(z[d:], z[d:]) + float(pot.value(z[:d]))
            add(z, (H - E) * (2 * E / hbar) ** (2.0 / 3.0))
    elif gen == "airy_extrema":
        from .specfun import AIRY_AI_PRIME_ZEROS
        for k in q.get("zeros", [1, 2]):
            target = AIRY_AI_PRIME_ZEROS[k - 1]
            z = locate_airy_argument(base, E, hbar, target, pot, cfg.integrator)
            H = 0.5 * np.dot(z[d:], z[d:]) + float(pot.value(z[:d]))
            add(z, (H - E) * (2 * E / hbar) ** (2.0 / 3.0), f"extremum{k}")
    elif gen == "random_tube":
        rng = np.random.default_rng(cfg.seed)
        lo, hi = q.get("u_range", [-3.0, 1.0])
        for _ in range(int(q.get("count", 10))):
            u = float(rng.uniform(lo, hi))
            th = float(rng.uniform(0, 2 * math.pi))
            add(ray_point(surface_point(pot, E, th), pot, tube_energy(u, E, hbar)), u)
    return out
