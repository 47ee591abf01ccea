"""JSON scenario configuration (angles in degrees)."""

from __future__ import annotations

import math

import jsonschema

from .errors import LayoutError, ScenarioError
from .geometry import validate
from .manifold import SourceParams
from .synth import Scenario, SourceTruth

SCHEMA_VERSION = 1

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "layout", "sources"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "layout": {
            "type": "object",
            "required": ["kind", "delta_y", "delta_x"],
            "properties": {
                "kind": {"enum": ["dipole", "loop"]},
                "delta_y": {"type": "number"},
                "delta_x": {"type": "number"},
                "m1": {"type": "integer"},
                "m2": {"type": "integer"},
                "d1": {"type": "number"},
                "d2": {"type": "number"},
            },
            "anyOf": [{"required": ["m1"]}, {"required": ["d1"]}],
            "additionalProperties": False,
        },
        "sources": {
            "type": "array",
            "minItems": 1,
            "maxItems": 3,
            "items": {
                "type": "object",
                "required": ["theta1_deg", "theta2_deg", "theta3_deg", "theta4_deg", "frequency"],
                "properties": {
                    "theta1_deg": {"type": "number"},
                    "theta2_deg": {"type": "number", "minimum": 0, "maximum": 90},
                    "theta3_deg": {"type": "number", "minimum": 0, "maximum": 90},
                    "theta4_deg": {"type": "number"},
                    "frequency": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                    "initial_phase_deg": {"type": ["number", "null"]},
                },
                "additionalProperties": False,
            },
        },
        "snapshots": {"type": "integer", "minimum": 9},
        "snr_db": {"type": ["number", "null"]},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


def _path(err: jsonschema.ValidationError) -> str:
    parts = []
    for p in err.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else (("." if parts else "") + str(p)))
    where = "".join(parts)
    if err.validator == "required":
        missing = err.message.split("'")[1]
        where = f"{where}.{missing}" if where else missing
    return where or "<root>"


def scenario_from_config(cfg: dict) -> Scenario:
    """Validate a config mapping and build a :class:`Scenario`.

    ``snr_db`` of ``null`` (or absent) disables noise.
    """
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _path(err))
    lay = cfg["layout"]
    try:
        layout = validate(
            lay["kind"], lay["delta_y"], lay["delta_x"],
            m1=lay.get("m1"), m2=lay.get("m2"), d1=lay.get("d1"), d2=lay.get("d2"),
        )
    except LayoutError as exc:
        raise ScenarioError(str(exc), "layout") from exc

    sources = []
    for i, s in enumerate(cfg["sources"]):
        try:
            params = SourceParams.from_degrees(
                s["theta1_deg"], s["theta2_deg"], s["theta3_deg"], s["theta4_deg"]
            )
        except ValueError as exc:
            raise ScenarioError(str(exc), f"sources[{i}]") from exc
        ph = s.get("initial_phase_deg")
        sources.append(SourceTruth(params, float(s["frequency"]),
                                   None if ph is None else math.radians(ph)))
    snr = cfg.get("snr_db")
    return Scenario(
        layout=layout,
        sources=tuple(sources),
        snapshots=int(cfg.get("snapshots", 100)),
        snr_db=math.inf if snr is None else float(snr),
        seed=int(cfg.get("seed", 0)),
    )


def scenario_to_config(sc: Scenario) -> dict:
    lay = sc.layout
    return {
        "schema_version": SCHEMA_VERSION,
        "layout": {
            "kind": lay.kind.value,
            "delta_y": lay.delta_y,
            "delta_x": lay.delta_x,
            "m1": lay.m1,
            "m2": lay.m2,
        },
        "sources": [
            {
                "theta1_deg": math.degrees(s.params.theta1),
                "theta2_deg": math.degrees(s.params.theta2),
                "theta3_deg": math.degrees(s.params.theta3),
                "theta4_deg": math.degrees(s.params.theta4),
                "frequency": s.digital_frequency,
                "initial_phase_deg": None if s.initial_phase is None else math.degrees(s.initial_phase),
            }
            for s in sc.sources
        ],
        "snapshots": sc.snapshots,
        "snr_db": None if sc.noiseless else sc.snr_db,
        "seed": sc.seed,
    }


def benchmark_scenario(num_sources: int = 2, snr_db: float = math.inf, kind: str = "dipole",
                   seed: int = 0) -> Scenario:
    """The two- or three-source benchmark: d1 = d2 = 8, delta_x = delta_y = 4."""
    table = [
        ((30, 15, 45, 90), 0.0895),
        ((73, 43, 45, -90), 0.1685),
        ((150, 77, 45, 90), 0.2555),
    ]
    if not 1 <= num_sources <= 3:
        raise ValueError("num_sources must be 1, 2 or 3")
    sources = tuple(
        SourceTruth(SourceParams.from_degrees(*angles), f) for angles, f in table[:num_sources]
    )
    return Scenario(validate(kind, 4.0, 4.0, m1=2, m2=2), sources, 100, snr_db, seed)
