"""JSON run configuration: schema, validation and translation into library objects.

A document has the sections ``physics``, ``grid``, ``region``, ``run`` and
(optionally) ``acceptance``. Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .analysis import canonical_digest
from .errors import ConfigError
from .projection import Interval, Rectangle2D, UnionOfIntervals, padded_grid
from .propagator import HarmonicPotential, LinearPotential, PropagatorSpec, ZeroPotential
from .state import Grid
from .zeno import GaussianState, SineState, ZenoRunConfig

_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_band = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_num_or_pair = {"oneOf": [{"type": "number"}, _pair]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["region", "run"],
    "properties": {
        "physics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m": {"type": "number", "exclusiveMinimum": 0},
                "hbar": {"type": "number", "exclusiveMinimum": 0},
                "potential": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["zero", "linear", "harmonic"]},
                        "force": {"type": "number"},
                        "axis": {"type": "integer", "minimum": 0, "maximum": 1},
                        "omega": {"type": "number"},
                        "center": {"type": "number"},
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bounds": {"type": "array", "items": _pair, "minItems": 1, "maxItems": 2},
                "points": {"oneOf": [{"type": "integer", "minimum": 8},
                                     {"type": "array", "items": {"type": "integer", "minimum": 8}}]},
                "padding_factor": {"type": "number", "minimum": 2},
                "dt_max": {"type": "number", "exclusiveMinimum": 0},
                "kinetic": {"enum": ["fourier", "fd"]},
            },
        },
        "region": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["interval", "union", "rectangle"]},
                "bounds": _pair,
                "intervals": {"type": "array", "items": _pair, "minItems": 1},
                "x": _pair,
                "y": _pair,
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T"],
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0},
                "N": {"type": "integer", "minimum": 1},
                "N_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "backend": {"enum": ["dense", "spectral"]},
                "record_every": {"type": "integer", "minimum": 1},
                "M": {"type": "integer", "minimum": 1},
                "modes": {"type": "integer", "minimum": 1},
                "block": {"type": "integer", "minimum": 1},
                "count": {"type": "integer", "minimum": 1},
                "sweep": {"enum": ["convergence", "leakage", "state_error", "matrix_limit"]},
                "snapshots": {"type": "boolean"},
                "t_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "pairs": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                                     "minItems": 2, "maxItems": 2}},
                "bases": {"type": "array", "items": {"enum": ["dirichlet_sine", "cosine"]}},
                "initial": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["sine", "gaussian"]},
                        "n": {"oneOf": [{"type": "integer", "minimum": 1},
                                        {"type": "array", "items": {"type": "integer", "minimum": 1},
                                         "minItems": 2, "maxItems": 2}]},
                        "center": _num_or_pair,
                        "width": _num_or_pair,
                        "momentum": _num_or_pair,
                    },
                },
            },
        },
        "acceptance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "survival_deficit": _band,
                "state_error": _band,
                "matrix_deviation": _band,
            },
        },
    },
}


@dataclass(frozen=True)
class LoadedConfig:
    raw: dict
    digest: str
    run: ZenoRunConfig

    @property
    def section(self) -> dict:
        return self.raw["run"]

    @property
    def bands(self) -> dict:
        return {k: tuple(v) for k, v in self.raw.get("acceptance", {}).items()}


def _location(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(raw: dict) -> None:
    """Raise :class:`ConfigError` naming the offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{_location(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(msgs))


def parse_text(text: str, source: str = "<config>") -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    return raw


def _region(sec: dict):
    kind = sec["type"]
    try:
        if kind == "interval":
            return Interval(*sec["bounds"])
        if kind == "union":
            return UnionOfIntervals(tuple(tuple(p) for p in sec["intervals"]))
        return Rectangle2D(tuple(sec["x"]), tuple(sec["y"]))
    except KeyError as exc:
        raise ConfigError(f"region: field {exc.args[0]!r} is required for type {kind!r}") from None


def _potential(sec: dict | None):
    if not sec or sec["type"] == "zero":
        return ZeroPotential()
    if sec["type"] == "linear":
        if "force" not in sec:
            raise ConfigError("physics/potential: field 'force' is required for a linear potential")
        return LinearPotential(float(sec["force"]), int(sec.get("axis", 0)))
    if "omega" not in sec:
        raise ConfigError("physics/potential: field 'omega' is required for a harmonic potential")
    return HarmonicPotential(float(sec["omega"]), float(sec.get("center", 0.0)))


def _grid(sec: dict, region) -> Grid:
    padding = float(sec.get("padding_factor", 4.0))
    points = sec.get("points", 1001)
    if "bounds" in sec:
        bounds = sec["bounds"]
        if len(bounds) != region.dim:
            raise ConfigError(f"grid/bounds: {len(bounds)} axes given for a {region.dim}D region")
        counts = points if isinstance(points, list) else [points] * len(bounds)
        if len(counts) != len(bounds):
            raise ConfigError("grid/points: one count per axis is required")
        if len(bounds) == 1:
            return Grid.line(bounds[0][0], bounds[0][1], counts[0])
        return Grid.rect((*bounds[0], counts[0]), (*bounds[1], counts[1]))
    return padded_grid(region, padding, points)


def _initial(sec: dict | None):
    if not sec or sec["type"] == "sine":
        n = (sec or {}).get("n", 1)
        return SineState(tuple(n) if isinstance(n, list) else n)
    for key in ("center", "width"):
        if key not in sec:
            raise ConfigError(f"run/initial: field {key!r} is required for a gaussian state")
    conv = lambda v: tuple(v) if isinstance(v, list) else float(v)  # noqa: E731
    return GaussianState(conv(sec["center"]), conv(sec["width"]), conv(sec.get("momentum", 0.0)))


def build(raw: dict, backend: str | None = None) -> LoadedConfig:
    """Validate ``raw`` and turn it into a :class:`ZenoRunConfig` (N defaults to the first of ``N_list``)."""
    validate(raw)
    run = raw["run"]
    if "N" not in run and "N_list" not in run:
        raise ConfigError("run: one of 'N' or 'N_list' is required")
    physics = raw.get("physics", {})
    grid_sec = raw.get("grid", {})
    region = _region(raw["region"])
    spec = PropagatorSpec(
        _grid(grid_sec, region),
        mass=float(physics.get("m", 1.0)),
        hbar=float(physics.get("hbar", 1.0)),
        potential=_potential(physics.get("potential")),
        padding_factor=float(grid_sec.get("padding_factor", 4.0)),
        dt_max=float(grid_sec.get("dt_max", 1e-3)),
        kinetic=grid_sec.get("kinetic", "fourier"),
    )
    N = int(run["N"]) if "N" in run else int(run["N_list"][0])
    config = ZenoRunConfig(
        T=float(run["T"]), N=N, region=region, spec=spec, initial=_initial(run.get("initial")),
        backend=backend or run.get("backend", "spectral"), record_every=int(run.get("record_every", 1)),
    )
    return LoadedConfig(raw, canonical_digest(raw), config)


def load(path: str | Path, backend: str | None = None) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return build(parse_text(text, str(path)), backend)
