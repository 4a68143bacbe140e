"""JSON schemas for problem specs and emitted reports."""

from __future__ import annotations

from jsonschema import Draft202012Validator

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}
_mat = {"type": "array", "items": _vec, "minItems": 1}
_nullable_num = {"type": ["number", "null"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


DOMAIN = {
    "oneOf": [
        _obj({"box": _obj({"lower": _vec, "upper": _vec}, ["lower", "upper"])}, ["box"]),
        _obj({"ball": _obj({"center": _vec, "radius": _pos}, ["center", "radius"])}, ["ball"]),
        _obj({"intersection": {"type": "array", "items": {"$ref": "#/$defs/domain"}, "minItems": 1}},
             ["intersection"]),
    ],
}

PHI = {
    "oneOf": [
        _obj({"id": {"const": "l1"}, "weight": {"type": "number", "minimum": 0}}, ["id"]),
        _obj({"id": {"const": "box"}, "lower": _vec, "upper": _vec}, ["id", "lower", "upper"]),
        _obj({"id": {"const": "ball"}, "center": _vec, "radius": _pos}, ["id", "center", "radius"]),
        _obj({"id": {"const": "quadratic"}, "Q": _mat, "b": _vec}, ["id", "Q"]),
        _obj({"id": {"const": "linear"}, "M": _mat}, ["id", "M"]),
    ]
}

FUNCTION = {
    "oneOf": [
        _obj({"id": {"const": "example31"}}, ["id"]),
        _obj({"id": {"const": "quadratic"}, "Q": _mat, "b": _vec}, ["id", "Q"]),
        _obj({"id": {"const": "envelope"}, "phi": {"$ref": "#/$defs/phi"}, "lambda": _pos},
             ["id", "phi", "lambda"]),
        _obj({"id": {"const": "rotation"}}, ["id"]),
    ]
}

OPERATOR = {
    "oneOf": [
        _obj({"id": {"const": "rotation"}}, ["id"]),
        _obj({"id": {"const": "example31"}}, ["id"]),
        _obj({"id": {"const": "quadratic"}, "Q": _mat, "b": _vec}, ["id", "Q"]),
        _obj({"id": {"const": "linear"}, "M": _mat}, ["id", "M"]),
        _obj({"id": {"const": "prox"}, "phi": {"$ref": "#/$defs/phi"}, "mu": _pos}, ["id", "phi", "mu"]),
        _obj({"id": {"const": "yosida"}, "phi": {"$ref": "#/$defs/phi"}, "lambda": _pos},
             ["id", "phi", "lambda"]),
    ]
}

PROBLEM_SPEC = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"domain": DOMAIN, "phi": PHI, "function": FUNCTION, "operator": OPERATOR},
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "kind"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["certify", "moduli", "solve", "demo"]},
        "name": {"enum": ["example31"]},
        "function": {"$ref": "#/$defs/function"},
        "operator": {"$ref": "#/$defs/operator"},
        "phi": {"$ref": "#/$defs/phi"},
        "domain": {"$ref": "#/$defs/domain"},
        "beta": _pos,
        "mu": _pos,
        "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "t_end": _pos,
        "tol": _pos,
        "max_iter": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "count": {"type": "integer", "minimum": 2},
        "x0": _vec,
        "point": _vec,
        "mode": {"enum": ["fixed_point", "euler", "rk4"]},
        "alpha": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 4},
                  "minItems": 1},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "certify"}}},
         "then": {"required": ["function", "beta"]}},
        {"if": {"properties": {"kind": {"const": "moduli"}}},
         "then": {"required": ["operator"]}},
        {"if": {"properties": {"kind": {"const": "solve"}}},
         "then": {"required": ["phi", "operator", "x0", "mu"]}},
    ],
}

_pair = {"oneOf": [{"type": "null"},
                   _obj({"x": _vec, "y": _vec, "scale": _num}, ["x", "y", "scale"])]}

CERTIFICATE = {
    "type": "object",
    "required": ["type", "claim", "verdict", "margin", "tolerance", "pairs_used", "witness", "reason"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "Certificate"},
        "claim": {"type": "object"},
        "verdict": {"enum": ["falsified", "consistent", "proved"]},
        "margin": _nullable_num,
        "tolerance": _num,
        "pairs_used": {"type": "integer", "minimum": 0},
        "witness": {"type": ["object", "null"]},
        "reason": {"type": "string"},
    },
}

MODULUS_REPORT = {
    "type": "object",
    "required": ["type", "operator", "lipschitz_sup", "coco_inf", "lip_witness", "coco_witness",
                 "monotone_violation", "pairs_used", "pairs_skipped", "seed"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "ModulusReport"},
        "operator": {"type": "string"},
        "lipschitz_sup": _nullable_num,
        "coco_inf": _nullable_num,
        "lip_witness": _pair,
        "coco_witness": _pair,
        "monotone_violation": _pair,
        "pairs_used": {"type": "integer", "minimum": 0},
        "pairs_skipped": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "checks": {"type": "array", "items": CERTIFICATE},
    },
}

BH_REPORT = {
    "type": "object",
    "required": ["type", "function", "beta", "verdict_a", "verdict_b", "verdict_c", "consistency",
                 "descent_check", "descent_used", "descent_skipped"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "BHReport"},
        "function": {"type": "string"},
        "beta": _pos,
        "verdict_a": CERTIFICATE,
        "verdict_b": CERTIFICATE,
        "verdict_c": CERTIFICATE,
        "consistency": {"type": "boolean"},
        "descent_check": _nullable_num,
        "descent_used": {"type": "integer", "minimum": 0},
        "descent_skipped": {"type": "integer", "minimum": 0},
    },
}

LOCAL_REPORT = {
    "type": "object",
    "required": ["type", "center", "radius", "beta_local", "coco_modulus", "certificate", "history"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "LocalCocoReport"},
        "center": _vec,
        "radius": _num,
        "beta_local": _nullable_num,
        "coco_modulus": _nullable_num,
        "certificate": CERTIFICATE,
        "history": {"type": "array", "items": _obj(
            {"radius": _num, "beta_local": _num, "verdict": {"type": "string"}},
            ["radius", "beta_local", "verdict"])},
    },
}

SOLVE_REPORT = {
    "type": "object",
    "required": ["type", "mode", "mu", "dt", "iterations", "converged", "diverged", "final_residual",
                 "x_final", "admissibility"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "SolveTrace"},
        "mode": {"enum": ["fixed_point", "euler", "rk4"]},
        "mu": _pos,
        "dt": _nullable_num,
        "iterations": {"type": "integer", "minimum": 0},
        "converged": {"type": "boolean"},
        "diverged": {"type": "boolean"},
        "final_residual": _nullable_num,
        "x_final": {"type": "array", "items": _nullable_num},
        "admissibility": _obj({"admissible": {"type": "boolean"}, "mu": _num, "beta": _nullable_num,
                               "two_beta": _nullable_num, "source": {"enum": ["claimed", "estimated"]}},
                              ["admissible", "mu", "beta", "two_beta", "source"]),
    },
}

_row_num = {"type": ["number", "null"]}

DEMO_REPORT = {
    "type": "object",
    "required": ["type", "name", "seed", "rows"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "DemoReport"},
        "name": {"const": "example31"},
        "seed": {"type": "integer"},
        "rows": {"type": "array", "items": _obj({
            "alpha": _num, "grid_max_f2": _row_num, "lipschitz_sup": _row_num, "coco_inf": _row_num,
            "claimed_modulus": _num, "verdict": {"enum": ["falsified", "consistent"]},
            "reciprocal_verdict": {"enum": ["falsified", "consistent"]},
            "witness_x": _row_num, "witness_y": _row_num, "witness_separation": _row_num,
            "alt_modulus": _row_num, "alt_verdict": {"enum": ["falsified", "consistent", None]},
        }, ["alpha", "grid_max_f2", "lipschitz_sup", "coco_inf", "claimed_modulus", "verdict",
            "reciprocal_verdict", "witness_x", "witness_y", "witness_separation", "alt_modulus",
            "alt_verdict"])},
    },
}

REPORT_SCHEMAS = {
    "Certificate": CERTIFICATE,
    "ModulusReport": MODULUS_REPORT,
    "BHReport": BH_REPORT,
    "LocalCocoReport": LOCAL_REPORT,
    "SolveTrace": SOLVE_REPORT,
    "DemoReport": DEMO_REPORT,
}

problem_validator = Draft202012Validator(PROBLEM_SPEC)


def validate_problem(spec: dict) -> None:
    """Raise ``jsonschema.ValidationError`` for a malformed problem spec."""
    problem_validator.validate(spec)


def validate_report(report: dict) -> None:
    Draft202012Validator(REPORT_SCHEMAS[report["type"]]).validate(report)
