"""Joint test of the three equivalent gradient properties on an open convex set.

For convex differentiable ``f`` and ``beta > 0`` these are equivalent:

(a) ``grad f`` is beta-Lipschitz on the domain,
(b) ``(beta/2)||x||^2 - f`` is convex on the domain,
(c) ``grad f`` is 1/beta-cocoercive on the domain.

:func:`bh_check` tests all three on shared samples and flags any pattern of
verdicts that the equivalence rules out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_SCALES, Ball, as_vector, domain_to_dict, sample_pairs
from .estimators import (
    TOL,
    Certificate,
    ShiftedPointError,
    check_cocoercive,
    check_lipschitz,
    convexity_check,
    descent_gap,
    estimate_moduli,
)
from .funclib import ScalarFunction, VectorOperator, gradient_operator

__all__ = [
    "BHReport",
    "LocalCocoReport",
    "bh_check",
    "convex_gap_function",
    "pseudo_gradient",
    "local_coco_search",
    "slice_check",
    "orthonormal_basis",
]

DESCENT_STEPS = (0.1, 0.5, 1.0, 1.5, 1.9)  # times 1/beta, inside (0, 2/beta)
MAX_HALVINGS = 20
RADIUS_FLOOR = 1e-12
RANK_TOL = 1e-10
# center-anchored probes, relative to the ball radius; finer than the sampling ladder
ANCHOR_SCALES = (1e-2, 1e-4, 1e-6, 1e-8)


@dataclass
class BHReport:
    beta: float
    verdict_a: Certificate
    verdict_b: Certificate
    verdict_c: Certificate
    consistency: bool
    descent_check: float
    descent_used: int
    descent_skipped: int
    function: str = ""

    def verdicts(self) -> tuple[str, str, str]:
        return self.verdict_a.verdict, self.verdict_b.verdict, self.verdict_c.verdict

    def to_dict(self) -> dict:
        return {
            "type": "BHReport",
            "function": self.function,
            "beta": self.beta,
            "verdict_a": self.verdict_a.to_dict(),
            "verdict_b": self.verdict_b.to_dict(),
            "verdict_c": self.verdict_c.to_dict(),
            "consistency": self.consistency,
            "descent_check": self.descent_check if math.isfinite(self.descent_check) else None,
            "descent_used": self.descent_used,
            "descent_skipped": self.descent_skipped,
        }


def convex_gap_function(f: ScalarFunction, beta: float) -> ScalarFunction:
    """``x -> (beta/2)||x||^2 - f(x)`` with derivatives when ``f`` has them."""
    beta = float(beta)
    grad = hess = None
    if f.gradient is not None:
        def grad(x):
            return beta * x - np.asarray(f.gradient(x))
    if f.hessian is not None:
        def hess(x):
            return beta * np.eye(x.size) - np.asarray(f.hessian(x))
    return ScalarFunction(
        f.domain,
        lambda x: 0.5 * beta * float(x @ x) - f.value(x),
        grad,
        hess,
        f"{beta:g}/2|x|^2-{f.label}",
    )


def pseudo_gradient(t: VectorOperator, value=None) -> ScalarFunction:
    """Dress an operator up as the "gradient" of a ScalarFunction.

    Used to run :func:`bh_check` on fields that are not gradients (the
    rotation), which shows the gradient hypothesis cannot be dropped.  The
    value defaults to zero.
    """
    value = (lambda x: 0.0) if value is None else value
    return ScalarFunction(t.domain, value, t.apply, None, f"pseudo[{t.label}]")


def bh_check(f: ScalarFunction, domain=None, beta: float = 1.0, seed: int = 0,
             count: int = 2000, tol: float = TOL, descent_count: int = 200) -> BHReport:
    """Test (a), (b), (c) for ``(f, beta)`` and report whether they agree.

    Sub-checks use seeds ``seed``, ``seed + 1`` and ``seed + 3`` so that any
    of them can be rerun alone with identical results.
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if f.gradient is None:
        raise ValueError(f"{f.label} needs an analytic gradient")
    domain = f.domain if domain is None else domain
    report = estimate_moduli(gradient_operator(f), domain, seed, count, tol=tol)
    cert_a = check_lipschitz(report, beta, tol)
    cert_c = check_cocoercive(report, 1.0 / beta, tol)
    cert_b = convexity_check(convex_gap_function(f, beta), domain, seed + 1,
                             max(1, count // 4), tol=tol)
    cert_b.claim["property"] = "convex_gap"
    cert_b.claim["modulus"] = float(beta)

    worst = math.inf
    used = skipped = 0
    for p in sample_pairs(domain, seed + 3, descent_count):
        for step in DESCENT_STEPS:
            try:
                gap = descent_gap(f, beta, p.x, p.y, step / beta)
            except ShiftedPointError:
                skipped += 1
                continue
            used += 1
            worst = min(worst, gap)

    verdicts = {cert_a.falsified, cert_b.falsified, cert_c.falsified}
    return BHReport(beta, cert_a, cert_b, cert_c, len(verdicts) == 1, worst, used, skipped, f.label)


# ---------------------------------------------------------------------------
# local cocoercivity


@dataclass
class LocalCocoReport:
    center: np.ndarray
    radius: float
    beta_local: float
    certificate: Certificate
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "type": "LocalCocoReport",
            "center": self.center.tolist(),
            "radius": self.radius,
            "beta_local": self.beta_local if math.isfinite(self.beta_local) else None,
            "coco_modulus": 1.0 / self.beta_local if self.beta_local > 0 else None,
            "certificate": self.certificate.to_dict(),
            "history": self.history,
        }


def _anchored_pairs(center: np.ndarray, radius: float, seed: int):
    rng = np.random.default_rng(seed)
    n = center.size
    dirs = [np.eye(n)[i] for i in range(n)] + [-np.eye(n)[i] for i in range(n)]
    for _ in range(2 * n):
        d = rng.standard_normal(n)
        dirs.append(d / np.linalg.norm(d))
    return [(center, center + s * radius * d) for s in ANCHOR_SCALES for d in dirs]


def local_coco_search(f: ScalarFunction, domain=None, x=None, seed: int = 0,
                      count: int = 2000, tol: float = TOL) -> LocalCocoReport:
    """Find a ball around ``x`` on which ``grad f`` is cocoercive.

    On a ball of radius ``safe_radius(x) / 4`` the local constant
    ``beta_local`` is estimated as the sampled Lipschitz sup of ``grad f``.
    The claim "grad f is 1/beta_local-cocoercive on the ball" is then tested
    on the same sample plus pairs anchored at ``x`` with separations well
    below the sampling ladder.  On falsification the radius is halved (at
    most 20 times).  Every attempt is recorded in ``history``; near a point
    where the gradient is not locally Lipschitz the recorded ``beta_local``
    keeps growing.
    """
    domain = f.domain if domain is None else domain
    x = as_vector(x, f.dim)
    radius = domain.safe_radius(x) / 4.0 if domain.contains(x) else -1.0
    if not radius > 0:
        raise ValueError(f"point {x.tolist()} is not inside the domain")
    grad = gradient_operator(f)
    history = []
    report = None
    for attempt in range(MAX_HALVINGS + 1):
        if radius < RADIUS_FLOOR:
            break
        ball = Ball(x, radius)
        mod = estimate_moduli(grad, ball, seed + attempt, count, DEFAULT_SCALES, tol=tol)
        beta_local = mod.lipschitz_sup
        cert = check_cocoercive(mod, 1.0 / beta_local, tol)
        if not cert.falsified:
            cert = _anchored_check(grad, x, radius, beta_local, seed + attempt, tol, cert)
        cert.claim["domain"] = domain_to_dict(ball)
        history.append({"radius": radius, "beta_local": beta_local, "verdict": cert.verdict})
        report = LocalCocoReport(x, radius, beta_local, cert, history)
        if not cert.falsified:
            return report
        radius /= 2.0
    if report is None or radius < RADIUS_FLOOR:
        claim = {"operator": grad.label, "property": "locally_cocoercive"}
        cert = Certificate(claim, "falsified", math.inf, tol,
                           witness=report.certificate.witness if report else None,
                           reason="falsified at all scales down to the radius floor")
        return LocalCocoReport(x, radius, report.beta_local if report else math.inf, cert, history)
    report.certificate.reason = f"falsified after {MAX_HALVINGS} halvings"
    return report


def _anchored_check(grad: VectorOperator, x, radius, beta_local, seed, tol, cert) -> Certificate:
    tx = grad(x)
    modulus = 1.0 / beta_local
    worst_k = None
    worst = -math.inf
    probes = _anchored_pairs(x, radius, seed)
    for k, (a, b) in enumerate(probes):
        dt = tx - grad(b)
        dx = a - b
        nt2 = float(np.sum(dt * dt))
        if nt2 == 0.0:
            continue
        margin = 1.0 - float(np.sum(dt * dx)) / nt2 / modulus
        if margin > worst:
            worst, worst_k = margin, k
    cert.pairs_used += len(probes)
    cert.margin = max(cert.margin, worst)
    if worst > tol:
        a, b = probes[worst_k]
        dt = tx - grad(b)
        cert.verdict = "falsified"
        cert.witness = {
            "kind": "pair",
            "index": cert.pairs_used - len(probes) + worst_k,
            "x": a.tolist(),
            "y": b.tolist(),
            "margin": worst,
            "inner": float(np.sum(dt * (a - b))),
            "dT_norm": float(np.linalg.norm(dt)),
            "dx_norm": float(np.linalg.norm(a - b)),
        }
    return cert


# ---------------------------------------------------------------------------
# finite-dimensional slices


def orthonormal_basis(vectors, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Modified Gram-Schmidt; drops vectors that add less than ``rank_tol``
    (relative to their norm) to the span.  Returns basis vectors as columns."""
    basis = []
    for v in vectors:
        w = np.array(v, dtype=float)
        nv = float(np.linalg.norm(w))
        if nv == 0.0:
            continue
        for q in basis:
            w = w - (q @ w) * q
        for q in basis:
            w = w - (q @ w) * q
        nw = float(np.linalg.norm(w))
        if nw > rank_tol * nv:
            basis.append(w / nw)
    if not basis:
        return np.zeros((len(vectors[0]), 0))
    return np.column_stack(basis)


def _slice_gradient(f: ScalarFunction, basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient of ``c -> f(B c)`` at the coordinates of ``x`` (``x`` in span B)."""
    if f.gradient is not None:
        return basis.T @ np.asarray(f.gradient(x))
    r = f.domain.safe_radius(x)
    h = min(1e-6 * (1.0 + float(np.linalg.norm(x))), r / 4.0)
    return np.array([(f.value(x + h * q) - f.value(x - h * q)) / (2.0 * h) for q in basis.T])


def slice_check(f: ScalarFunction, domain=None, x=None, y=None, seed: int = 0,
                extra_dirs: int = 2, tol: float = TOL) -> Certificate:
    """Compare gradient differences of ``f`` restricted to subspaces through x, y.

    For ``F = span{x, y}`` and ``span{x, y, d_i}`` (random ``d_i``) the slice
    gradient difference ``P_F (grad f(x) - grad f(y))`` must not exceed the
    full one in norm; for ``F+ = span{x, y, grad f(x) - grad f(y)}`` the two
    must coincide.
    """
    domain = f.domain if domain is None else domain
    x = as_vector(x, f.dim)
    y = as_vector(y, f.dim)
    if np.array_equal(x, y):
        raise ValueError("slice_check needs x != y")
    for p in (x, y):
        if not domain.contains(p):
            raise ValueError(f"point {p.tolist()} is outside the domain")
    rng = np.random.default_rng(seed)
    gx = np.asarray(f.gradient(x)) if f.gradient is not None else None
    gy = np.asarray(f.gradient(y)) if f.gradient is not None else None
    if gx is None:
        eye = np.eye(f.dim)
        gx = _slice_gradient(f, eye, x)
        gy = _slice_gradient(f, eye, y)
    dg = gx - gy
    full = float(np.linalg.norm(dg))

    spans = [[x, y]] + [[x, y, rng.standard_normal(f.dim)] for _ in range(extra_dirs)]
    worst = -math.inf
    witness = None
    claim = {"function": f.label, "property": "slice_projection", "x": x.tolist(), "y": y.tolist()}
    checked = 0
    for vecs in spans:
        basis = orthonormal_basis(vecs)
        if basis.shape[1] == 0:
            continue
        part = float(np.linalg.norm(_slice_gradient(f, basis, x) - _slice_gradient(f, basis, y)))
        margin = (part - full) / (1.0 + full)
        checked += 1
        if margin > worst:
            worst = margin
            if margin > tol:
                witness = {"kind": "subspace", "basis": basis.T.tolist(), "slice_norm": part,
                           "full_norm": full, "margin": margin}
    plus = orthonormal_basis([x, y, dg])
    part = float(np.linalg.norm(_slice_gradient(f, plus, x) - _slice_gradient(f, plus, y)))
    eq_margin = abs(part - full) / (1.0 + full)
    checked += 1
    cert = Certificate(claim, "consistent", max(worst, eq_margin), tol, checked)
    if witness is None and eq_margin > tol:
        witness = {"kind": "subspace", "basis": plus.T.tolist(), "slice_norm": part,
                   "full_norm": full, "margin": eq_margin, "equality": True}
    if witness is not None:
        cert.verdict = "falsified"
        cert.witness = witness
    return cert
