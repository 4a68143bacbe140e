"""Command-line entry point.

    cocoercivity certify --spec quad.json
    cocoercivity moduli --spec rot.json --seed 7
    cocoercivity solve --spec box.json --format json --out trace.json
    cocoercivity demo example31 --alpha 2.0 --alpha 3.0

Exit codes: 0 consistent/converged, 1 falsified/diverged, 2 usage or spec
error, 3 runtime evaluation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import jsonschema
import numpy as np

from . import demo as demo_mod
from .certifier import bh_check, local_coco_search, pseudo_gradient
from .core import Box, DomainError, EmptyDomainError, SamplingError, domain_from_dict
from .estimators import EvaluationError, check_cocoercive, check_lipschitz, estimate_moduli
from .funclib import (
    L1,
    BallIndicator,
    BoxIndicator,
    LinearMonotone,
    QuadraticPenalty,
    UnsupportedOperatorError,
    example31,
    gradient_operator,
    linear_operator,
    moreau_envelope,
    prox_operator,
    quadratic,
    rotation_operator,
    yosida_operator,
)
from .schema import validate_problem, validate_report
from .splitting import (
    InclusionProblem,
    admissibility,
    dyn_integrate,
    forward_backward,
    trace_to_csv,
)

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_SEED = 42
DEFAULT_COUNT = 2000
DEFAULT_DT = 0.1
DEFAULT_T_END = 100.0
SUBCOMMANDS = ("certify", "moduli", "solve", "demo")


class SpecError(ValueError):
    """The problem spec is well-formed JSON but describes nothing buildable."""


# ---------------------------------------------------------------------------
# spec -> objects


def build_phi(d: dict):
    kind = d["id"]
    if kind == "l1":
        return L1(d.get("weight", 1.0))
    if kind == "box":
        return BoxIndicator(d["lower"], d["upper"])
    if kind == "ball":
        return BallIndicator(d["center"], d["radius"])
    if kind == "quadratic":
        return QuadraticPenalty(d["Q"], d.get("b"))
    if kind == "linear":
        return LinearMonotone(d["M"])
    raise SpecError(f"unknown phi {kind!r}")


def _default_box(n: int) -> Box:
    return Box(-np.ones(n), np.ones(n))


def _need_domain(domain, what: str):
    if domain is None:
        raise SpecError(f"{what} needs an explicit domain")
    return domain


def build_function(d: dict, domain=None):
    kind = d["id"]
    if kind == "example31":
        return example31(domain)
    if kind == "quadratic":
        return quadratic(d["Q"], d.get("b"), domain)
    if kind == "envelope":
        return moreau_envelope(build_phi(d["phi"]), d["lambda"], _need_domain(domain, "envelope"))
    if kind == "rotation":
        return pseudo_gradient(rotation_operator(domain))
    raise SpecError(f"unknown function {kind!r}")


def build_operator(d: dict, domain=None):
    kind = d["id"]
    if kind == "rotation":
        return rotation_operator(domain)
    if kind in ("example31", "quadratic"):
        return gradient_operator(build_function(d, domain))
    if kind == "linear":
        m = np.asarray(d["M"], dtype=float)
        return linear_operator(m, domain if domain is not None else _default_box(m.shape[0]))
    if kind == "prox":
        return prox_operator(build_phi(d["phi"]), d["mu"], _need_domain(domain, "prox operator"))
    if kind == "yosida":
        return yosida_operator(build_phi(d["phi"]), d["lambda"], _need_domain(domain, "yosida operator"))
    raise SpecError(f"unknown operator {kind!r}")


def resolve_seed(flag, spec: dict) -> int:
    """--seed beats the spec, which beats $COCO_SEED, which beats 42."""
    if flag is not None:
        return int(flag)
    if "seed" in spec:
        return int(spec["seed"])
    env = os.environ.get("COCO_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise SpecError(f"COCO_SEED must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


# ---------------------------------------------------------------------------
# commands; each returns (payload, exit code) where payload is a dict or str


def _tol_kw(spec: dict) -> dict:
    return {"tol": spec["tol"]} if "tol" in spec else {}


def cmd_certify(spec: dict, seed: int, fmt: str):
    domain = domain_from_dict(spec["domain"]) if "domain" in spec else None
    f = build_function(spec["function"], domain)
    count = spec.get("count", DEFAULT_COUNT)
    if "point" in spec:
        rep = local_coco_search(f, None, spec["point"], seed, count, **_tol_kw(spec))
        return rep.to_dict(), EXIT_FALSIFIED if rep.certificate.falsified else EXIT_OK
    rep = bh_check(f, None, spec["beta"], seed, count, **_tol_kw(spec))
    bad = any(v == "falsified" for v in rep.verdicts())
    return rep.to_dict(), EXIT_FALSIFIED if bad else EXIT_OK


def cmd_moduli(spec: dict, seed: int, fmt: str):
    domain = domain_from_dict(spec["domain"]) if "domain" in spec else None
    op = build_operator(spec["operator"], domain)
    rep = estimate_moduli(op, None, seed, spec.get("count", DEFAULT_COUNT), **_tol_kw(spec))
    out = rep.to_dict()
    code = EXIT_OK
    if "beta" in spec:
        checks = [check_lipschitz(rep, spec["beta"], **_tol_kw(spec)),
                  check_cocoercive(rep, 1.0 / spec["beta"], **_tol_kw(spec))]
        out["checks"] = [c.to_dict() for c in checks]
        if any(c.falsified for c in checks):
            code = EXIT_FALSIFIED
    return out, code


def cmd_solve(spec: dict, seed: int, fmt: str):
    domain = domain_from_dict(spec["domain"]) if "domain" in spec else None
    op = build_operator(spec["operator"], domain)
    p = InclusionProblem(build_phi(spec["phi"]), op, spec["x0"], spec.get("beta"))
    mu = spec["mu"]
    mode = spec.get("mode", "fixed_point")
    kw = _tol_kw(spec)
    if mode == "fixed_point":
        if "max_iter" in spec:
            kw["max_iter"] = spec["max_iter"]
        trace = forward_backward(p, mu, **kw)
    else:
        trace = dyn_integrate(p, mu, spec.get("dt", DEFAULT_DT), spec.get("t_end", DEFAULT_T_END),
                              method=mode, **kw)
    code = EXIT_OK if trace.converged else EXIT_FALSIFIED
    if fmt == "csv":
        return trace_to_csv(trace), code
    out = trace.to_dict()
    out["admissibility"] = admissibility(p, mu, seed, spec.get("count", DEFAULT_COUNT)).to_dict()
    return out, code


def cmd_demo(spec: dict, seed: int, fmt: str):
    if spec.get("name", "example31") != "example31":
        raise SpecError(f"unknown demo {spec['name']!r}")
    alphas = spec.get("alpha") or demo_mod.DEFAULT_ALPHAS
    for a in alphas:
        if not 0.0 < a < 4.0:
            raise SpecError(f"alpha must lie in (0, 4), got {a}")
    rows = demo_mod.demo_example31(alphas, seed, spec.get("count", DEFAULT_COUNT))
    if fmt == "csv":
        return demo_mod.rows_to_csv(rows), EXIT_OK
    return {"type": "DemoReport", "name": "example31", "seed": seed, "rows": rows}, EXIT_OK


COMMANDS = {"certify": cmd_certify, "moduli": cmd_moduli, "solve": cmd_solve, "demo": cmd_demo}
# (default format, allowed formats)
FORMATS = {"certify": ("json", {"json"}), "moduli": ("json", {"json"}),
           "solve": ("csv", {"json", "csv"}), "demo": ("csv", {"json", "csv"})}


# ---------------------------------------------------------------------------
# plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError(message)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cocoercivity", description="Cocoercivity certificates and splitting solvers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", help="JSON problem spec")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, help="overrides the spec seed")
        p.add_argument("--format", choices=("json", "csv"))
        if name == "demo":
            p.add_argument("name", nargs="?", choices=("example31",))
            p.add_argument("--alpha", type=float, action="append", help="interval half-width, repeatable")
            p.add_argument("--count", type=int, help="sample pairs per estimate")
    return parser


def _finite_only(obj):
    """Replace non-finite floats by None so the JSON is strict."""
    if isinstance(obj, dict):
        return {k: _finite_only(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_only(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite_only(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(payload) -> str:
    if isinstance(payload, str):
        return payload
    payload = _finite_only(payload)
    validate_report(payload)
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_spec(args) -> dict:
    if args.spec is None:
        spec = {"version": 1, "kind": args.command}
    else:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise SpecError(f"cannot read spec: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
    if args.command == "demo":
        if args.name is not None:
            spec.setdefault("name", args.name)
        if args.alpha:
            spec["alpha"] = list(args.alpha)
        if args.count is not None:
            spec["count"] = args.count
    try:
        validate_problem(spec)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"invalid spec: {exc.message}") from exc
    if spec["kind"] != args.command:
        raise SpecError(f"spec kind {spec['kind']!r} does not match subcommand {args.command!r}")
    return spec


def run(argv=None) -> int:
    """Parse ``argv``, execute, write the output; return the exit code."""
    try:
        args = make_parser().parse_args(argv)
        spec = load_spec(args)
        seed = resolve_seed(args.seed, spec)
        default, allowed = FORMATS[args.command]
        fmt = args.format or default
        if fmt not in allowed:
            raise SpecError(f"{args.command} does not support --format {fmt}")
        payload, code = COMMANDS[args.command](spec, seed, fmt)
        text = render(payload)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SamplingError, EvaluationError, ArithmeticError,
            UnsupportedOperatorError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (EmptyDomainError, ValueError, KeyError) as exc:
        # construction failures: non-psd matrix, dimension mismatch, ...
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


def main() -> None:
    sys.exit(run())
