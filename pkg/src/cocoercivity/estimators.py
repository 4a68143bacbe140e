"""Finite differences, modulus estimation and sampled falsification.

Sampling can refute a "for all x, y" claim but never establish it, so the
verdict vocabulary is ``falsified`` / ``consistent``; ``proved`` is reserved
for quadratics where the eigenvalues settle the question exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_SCALES,
    DEGENERATE_SEPARATION,
    DomainError,
    PairSample,
    as_vector,
    domain_to_dict,
    sample_pairs,
    sample_points,
)
from .eigen import jacobi_eigh, spectral_bounds
from .funclib import ScalarFunction, VectorOperator

__all__ = [
    "EvaluationError",
    "ShiftedPointError",
    "TOL",
    "HESS_TOL",
    "fd_gradient",
    "fd_hessian",
    "spectral_bounds",
    "ModulusReport",
    "Certificate",
    "estimate_moduli",
    "check_lipschitz",
    "check_cocoercive",
    "verify_witness",
    "bregman",
    "three_point_residual",
    "descent_gap",
    "convexity_check",
    "hessian_norm_check",
    "prove_quadratic",
]

# relative tolerance on every defining inequality
TOL = 1e-8
# relative tolerance on finite-difference Hessian spectra
HESS_TOL = 1e-5
# ||dT|| below this (times 1 + ||Tx||) makes the cocoercivity ratio meaningless
DEGENERATE_DT = 1e-12
REFINE_STEPS = 64
REFINE_PAIRS = 4


class EvaluationError(ArithmeticError):
    """A function returned a non-finite value at an interior point."""


class ShiftedPointError(DomainError):
    """The shifted point of the descent inequality left the domain."""


def _finite(v, what: str):
    if not np.all(np.isfinite(v)):
        raise EvaluationError(f"non-finite {what}")
    return v


def _interior(f, x) -> tuple[np.ndarray, float]:
    x = as_vector(x, f.dim)
    if not f.domain.contains(x):
        raise DomainError(f"{f.label}: point {x.tolist()} outside the domain")
    return x, f.domain.safe_radius(x)


def fd_gradient(f: ScalarFunction, x, h: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient with step ``min(1e-6 (1 + ||x||), r/4)``,
    ``r`` the safe radius at ``x``."""
    x, r = _interior(f, x)
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    h = min(float(h), r / 4.0)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f.value(x + e) - f.value(x - e)) / (2.0 * h)
    return _finite(g, f"gradient of {f.label}")


def fd_hessian(f: ScalarFunction, x, h: Optional[float] = None) -> np.ndarray:
    """Second-order central-difference Hessian, symmetrized.

    Differences the analytic gradient when ``f`` has one (columns
    ``(g(x + h e_i) - g(x - h e_i)) / 2h``), otherwise uses the four-point
    value stencil.  Step ``min(1e-4 (1 + ||x||), r/4)``.
    """
    x, r = _interior(f, x)
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(x)))
    h = min(float(h), r / 4.0)
    n = x.size
    hm = np.empty((n, n))
    eye = np.eye(n) * h
    if f.gradient is not None:
        for i in range(n):
            hm[:, i] = (np.asarray(f.gradient(x + eye[i])) - np.asarray(f.gradient(x - eye[i]))) / (2.0 * h)
    else:
        f0 = f.value(x)
        for i in range(n):
            hm[i, i] = (f.value(x + eye[i]) - 2.0 * f0 + f.value(x - eye[i])) / (h * h)
            for j in range(i + 1, n):
                hm[i, j] = hm[j, i] = (
                    f.value(x + eye[i] + eye[j]) - f.value(x + eye[i] - eye[j])
                    - f.value(x - eye[i] + eye[j]) + f.value(x - eye[i] - eye[j])
                ) / (4.0 * h * h)
    _finite(hm, f"Hessian of {f.label}")
    return 0.5 * (hm + hm.T)


def _grad(f: ScalarFunction, x: np.ndarray) -> np.ndarray:
    if f.gradient is not None:
        return _finite(np.asarray(f.gradient(x), dtype=float), f"gradient of {f.label}")
    return fd_gradient(f, x)


# ---------------------------------------------------------------------------
# moduli


@dataclass
class ModulusReport:
    """Sampled extremes of the Lipschitz and cocoercivity ratios of an operator.

    ``lipschitz_sup`` is the largest ``||dT|| / ||dx||``; ``coco_inf`` the
    smallest ``<dT, dx> / ||dT||^2`` over pairs with non-degenerate ``dT``.
    Per-pair data is kept for building certificates.
    """

    operator: str
    lipschitz_sup: float
    coco_inf: float
    lip_witness: Optional[PairSample]
    coco_witness: Optional[PairSample]
    monotone_violation: Optional[PairSample]
    pairs_used: int
    pairs_skipped: int
    seed: int
    domain: object = field(repr=False, default=None)
    pairs: list = field(repr=False, default_factory=list)
    lip: np.ndarray = field(repr=False, default=None)
    coco: np.ndarray = field(repr=False, default=None)
    inner: np.ndarray = field(repr=False, default=None)
    dt_norm: np.ndarray = field(repr=False, default=None)
    dx_norm: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "type": "ModulusReport",
            "operator": self.operator,
            "lipschitz_sup": _num(self.lipschitz_sup),
            "coco_inf": _num(self.coco_inf),
            "lip_witness": _pair_dict(self.lip_witness),
            "coco_witness": _pair_dict(self.coco_witness),
            "monotone_violation": _pair_dict(self.monotone_violation),
            "pairs_used": self.pairs_used,
            "pairs_skipped": self.pairs_skipped,
            "seed": self.seed,
        }


def _num(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _pair_dict(p: Optional[PairSample]) -> Optional[dict]:
    if p is None:
        return None
    return {"x": p.x.tolist(), "y": p.y.tolist(), "scale": p.scale}


def _refine(t: VectorOperator, domain, pair: PairSample, steps: int) -> list[PairSample]:
    """Secant power iteration: keep x, point y along the last image difference.

    For a gradient field the secant map is a symmetric averaged Hessian, so
    this drives the pair toward the top curvature direction where both the
    Lipschitz ratio is largest and the cocoercivity ratio smallest.
    """
    x = pair.x
    tx = np.asarray(t.apply(x), dtype=float)
    s = float(np.linalg.norm(pair.y - x))
    d = (pair.y - x) / s
    out = []
    for _ in range(steps):
        y = x + s * d
        if not domain.contains(y):
            s = min(s, 0.999 * domain.safe_radius(x))
            if s < DEGENERATE_SEPARATION:
                break
            y = x + s * d
        dt = np.asarray(t.apply(y), dtype=float) - tx
        out.append(PairSample(x, y, pair.scale))
        n = float(np.linalg.norm(dt))
        if not math.isfinite(n) or n <= DEGENERATE_DT * (1.0 + float(np.linalg.norm(tx))):
            break
        d_new = dt / n
        if np.linalg.norm(d_new - d) < 1e-15:
            break
        d = d_new
    return out


def estimate_moduli(t: VectorOperator, domain=None, seed: int = 0, count: int = 2000,
                    scales: Sequence[float] = DEFAULT_SCALES, refine: int = REFINE_STEPS,
                    tol: float = TOL) -> ModulusReport:
    """Estimate Lipschitz and cocoercivity moduli of ``t`` from sampled pairs.

    The sample from :func:`sample_pairs` is extended by secant power
    refinement of the few most extreme pairs.  Extremes break ties by the
    lowest pair index.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    domain = t.domain if domain is None else domain
    pairs = sample_pairs(domain, seed, count, scales)
    data = _ratios(t, pairs)
    if refine > 0:
        lip0, coco0 = data[0], data[1]
        picks = list(np.argsort(-lip0, kind="stable")[:REFINE_PAIRS])
        defined = np.flatnonzero(~np.isnan(coco0))
        picks += list(defined[np.argsort(coco0[defined], kind="stable")[:REFINE_PAIRS]])
        extra = []
        for i in dict.fromkeys(int(i) for i in picks):
            extra.extend(_refine(t, domain, pairs[i], refine))
        if extra:
            more = _ratios(t, extra)
            data = tuple(np.concatenate([a, b]) for a, b in zip(data, more))
            pairs = pairs + extra
    lip, coco, inner, dt_norm, dx_norm = data

    defined = ~np.isnan(coco)
    lip_i = int(np.argmax(lip))
    coco_i = int(np.nanargmin(coco)) if defined.any() else None
    bad = np.flatnonzero(inner < -tol * dt_norm * dx_norm)
    return ModulusReport(
        operator=t.label,
        lipschitz_sup=float(lip[lip_i]),
        coco_inf=float(coco[coco_i]) if coco_i is not None else math.nan,
        lip_witness=pairs[lip_i],
        coco_witness=pairs[coco_i] if coco_i is not None else None,
        monotone_violation=pairs[int(bad[0])] if bad.size else None,
        pairs_used=len(pairs),
        pairs_skipped=int(np.sum(~defined)),
        seed=seed,
        domain=domain,
        pairs=pairs,
        lip=lip,
        coco=coco,
        inner=inner,
        dt_norm=dt_norm,
        dx_norm=dx_norm,
    )


def _ratios(t: VectorOperator, pairs: list[PairSample]):
    m = len(pairs)
    lip = np.empty(m)
    coco = np.full(m, np.nan)
    inner = np.empty(m)
    dt_norm = np.empty(m)
    dx_norm = np.empty(m)
    cache = {}

    def image(x):
        key = id(x)
        if key not in cache:
            if not t.domain.contains(x):
                raise DomainError(f"{t.label}: point {x.tolist()} outside the domain")
            cache[key] = (x, _finite(np.asarray(t.apply(x), dtype=float), f"value of {t.label}"))
        return cache[key][1]

    for k, p in enumerate(pairs):
        tx = image(p.x)
        dt = tx - image(p.y)
        dx = p.x - p.y
        # elementwise product then sum keeps exact cancellations exact
        ip = float(np.sum(dt * dx))
        nt2 = float(np.sum(dt * dt))
        nx2 = float(np.sum(dx * dx))
        nt = math.sqrt(nt2)
        nx = math.sqrt(nx2)
        lip[k] = math.sqrt(nt2 / nx2)
        if nt >= DEGENERATE_DT * (1.0 + math.sqrt(float(np.sum(tx * tx)))):
            coco[k] = ip / nt2
        inner[k] = ip
        dt_norm[k] = nt
        dx_norm[k] = nx
    return lip, coco, inner, dt_norm, dx_norm


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    """Verdict on a named claim.

    ``margin`` is the worst relative violation seen (positive means the
    defining inequality failed by that fraction).  A falsified certificate
    always carries a witness that can be re-checked with :func:`verify_witness`.
    """

    claim: dict
    verdict: str
    margin: float
    tolerance: float
    pairs_used: int = 0
    witness: Optional[dict] = None
    reason: str = ""

    @property
    def falsified(self) -> bool:
        return self.verdict == "falsified"

    @property
    def consistent(self) -> bool:
        return self.verdict in ("consistent", "proved")

    def to_dict(self) -> dict:
        return {
            "type": "Certificate",
            "claim": self.claim,
            "verdict": self.verdict,
            "margin": _num(self.margin),
            "tolerance": self.tolerance,
            "pairs_used": self.pairs_used,
            "witness": self.witness,
            "reason": self.reason,
        }


def _pick_witness(margins: np.ndarray, size: np.ndarray, idx: np.ndarray) -> int:
    # largest margin, then largest ||dT||, then lowest index
    order = np.lexsort((-idx, size, margins))
    return int(idx[order[-1]])


def _pair_witness(report: ModulusReport, k: int, margin: float) -> dict:
    p = report.pairs[k]
    return {
        "kind": "pair",
        "index": k,
        "x": p.x.tolist(),
        "y": p.y.tolist(),
        "margin": float(margin),
        "inner": float(report.inner[k]),
        "dT_norm": float(report.dt_norm[k]),
        "dx_norm": float(report.dx_norm[k]),
    }


def _claim(report: ModulusReport, prop: str, modulus: float) -> dict:
    claim = {"operator": report.operator, "property": prop, "modulus": float(modulus)}
    if report.domain is not None:
        claim["domain"] = domain_to_dict(report.domain)
    return claim


def check_lipschitz(report: ModulusReport, beta: float, tol: float = TOL) -> Certificate:
    """Test ``||Tx - Ty|| <= beta ||x - y||`` on every pair of ``report``."""
    margins = report.lip / beta - 1.0
    worst = float(np.max(margins))
    cert = Certificate(_claim(report, "lipschitz", beta), "consistent", worst, tol, len(report.pairs))
    if worst > tol:
        idx = np.flatnonzero(margins > tol)
        k = _pick_witness(margins[idx], report.dt_norm[idx], idx)
        cert.verdict = "falsified"
        cert.witness = _pair_witness(report, k, margins[k])
    return cert


def check_cocoercive(report: ModulusReport, modulus: float, tol: float = TOL) -> Certificate:
    """Test ``<Tx - Ty, x - y> >= modulus ||Tx - Ty||^2`` on every
    non-degenerate pair of ``report``."""
    defined = np.flatnonzero(~np.isnan(report.coco))
    if defined.size == 0:
        return Certificate(_claim(report, "cocoercive", modulus), "consistent", -math.inf, tol, 0,
                           reason="every pair degenerate")
    margins = 1.0 - report.coco[defined] / modulus
    worst = float(np.max(margins))
    cert = Certificate(_claim(report, "cocoercive", modulus), "consistent", worst, tol, int(defined.size))
    if worst > tol:
        sel = margins > tol
        k = _pick_witness(margins[sel], report.dt_norm[defined][sel], defined[sel])
        cert.verdict = "falsified"
        cert.witness = _pair_witness(report, k, 1.0 - report.coco[k] / modulus)
    return cert


def verify_witness(t: VectorOperator, cert: Certificate) -> bool:
    """Re-evaluate the defining inequality at a pair witness.

    True iff the violation reproduces beyond the certificate's tolerance.
    """
    w = cert.witness
    if w is None or w.get("kind") != "pair":
        return False
    x, y = np.asarray(w["x"]), np.asarray(w["y"])
    dt = t(x) - t(y)
    dx = x - y
    mod = cert.claim["modulus"]
    tol = cert.tolerance
    if cert.claim["property"] == "lipschitz":
        return bool(np.linalg.norm(dt) > mod * np.linalg.norm(dx) * (1.0 + tol))
    if cert.claim["property"] == "cocoercive":
        return bool(float(np.sum(dt * dx)) < mod * float(dt @ dt) * (1.0 - tol))
    raise ValueError(f"cannot re-check property {cert.claim['property']!r}")


# ---------------------------------------------------------------------------
# Bregman machinery


def bregman(f: ScalarFunction, x, y, grad: Optional[np.ndarray] = None) -> float:
    """``D_f(x, y) = f(x) - f(y) - <grad f(y), x - y>``."""
    x, _ = _interior(f, x)
    y, _ = _interior(f, y)
    gy = _grad(f, y) if grad is None else np.asarray(grad, dtype=float)
    return float(f.value(x) - f.value(y) - gy @ (x - y))


def three_point_residual(f: ScalarFunction, x, y, z) -> float:
    """``|D_d(z, x) - D_f(z, x)|`` with ``d = D_f(., y)``.

    Both sides are assembled from separate evaluations; the residual is
    zero in exact arithmetic.
    """
    x, _ = _interior(f, x)
    y, _ = _interior(f, y)
    z, _ = _interior(f, z)
    gx, gy = _grad(f, x), _grad(f, y)
    fx, fy, fz = f.value(x), f.value(y), f.value(z)

    def d(w, fw):
        return fw - fy - float(gy @ (w - y))

    lhs = d(z, fz) - d(x, fx) - float((gx - gy) @ (z - x))
    rhs = fz - fx - float(gx @ (z - x))
    return abs(lhs - rhs)


def descent_gap(f: ScalarFunction, beta: float, x, y, t: float) -> float:
    """``D_f(x, y) - t (1 - beta t / 2) ||grad f(x) - grad f(y)||^2``.

    Nonnegative whenever ``(beta/2)||.||^2 - f`` is convex.  Raises
    :class:`ShiftedPointError` if ``x + t (grad f(y) - grad f(x))`` leaves
    the domain.
    """
    if not 0.0 < t < 2.0 / beta:
        raise ValueError(f"t must lie in (0, 2/beta) = (0, {2.0 / beta:g})")
    x, _ = _interior(f, x)
    y, _ = _interior(f, y)
    gx, gy = _grad(f, x), _grad(f, y)
    z = x + t * (gy - gx)
    if not f.domain.contains(z):
        raise ShiftedPointError(f"shifted point {z.tolist()} left the domain")
    dg = gx - gy
    return float(f.value(x) - f.value(y) - gy @ (x - y)) - t * (1.0 - beta * t / 2.0) * float(dg @ dg)


# ---------------------------------------------------------------------------
# sampled convexity and curvature checks


def convexity_check(f: ScalarFunction, domain=None, seed: int = 0, count: int = 500,
                    tol: float = TOL, hess_tol: float = HESS_TOL) -> Certificate:
    """Midpoint-convexity probe on pairs plus a Hessian probe at points.

    Fails if ``f((x+y)/2) > (f(x)+f(y))/2`` beyond ``tol`` (relative) on some
    pair, or if ``lambda_min(fd_hessian) < -hess_tol (1 + ||H||)`` at some
    point.  A Hessian witness is preferred when both probes fail.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    domain = f.domain if domain is None else domain
    claim = {"function": f.label, "property": "convex", "domain": domain_to_dict(domain)}

    pairs = sample_pairs(domain, seed, count)
    mid_margin = np.empty(len(pairs))
    for k, p in enumerate(pairs):
        fx, fy = f.value(p.x), f.value(p.y)
        fm = f.value(0.5 * (p.x + p.y))
        _finite([fx, fy, fm], f"value of {f.label}")
        mid_margin[k] = (fm - 0.5 * (fx + fy)) / (1.0 + 0.5 * (abs(fx) + abs(fy)))

    points = sample_points(domain, seed + 1, count)
    hess_margin = np.empty(len(points))
    lam_min = np.empty(len(points))
    for k, x in enumerate(points):
        hm = fd_hessian(f, x)
        lo, hi = spectral_bounds(hm)
        lam_min[k] = lo
        hess_margin[k] = -lo / (1.0 + max(abs(lo), abs(hi)))

    worst = max(float(np.max(mid_margin)) / tol, float(np.max(hess_margin)) / hess_tol)
    cert = Certificate(claim, "consistent", float(max(np.max(mid_margin), np.max(hess_margin))),
                       tol, len(pairs) + len(points))
    if np.max(hess_margin) > hess_tol:
        k = int(np.argmax(hess_margin))
        cert.verdict = "falsified"
        cert.witness = {"kind": "point", "x": points[k].tolist(), "lambda_min": float(lam_min[k]),
                        "margin": float(hess_margin[k])}
    elif np.max(mid_margin) > tol:
        k = int(np.argmax(mid_margin))
        p = pairs[k]
        cert.verdict = "falsified"
        cert.witness = {"kind": "midpoint", "x": p.x.tolist(), "y": p.y.tolist(),
                        "margin": float(mid_margin[k])}
    cert.reason = f"worst normalized margin {worst:.3g} of tolerance"
    return cert


def hessian_norm_check(f: ScalarFunction, beta: float, domain=None, seed: int = 0,
                       count: int = 500, tol: float = HESS_TOL) -> Certificate:
    """Check ``||fd_hessian(f)(x) / beta|| <= 1 + tol`` at sampled points."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    domain = f.domain if domain is None else domain
    claim = {"function": f.label, "property": "hessian_norm", "modulus": float(beta),
             "domain": domain_to_dict(domain)}
    points = sample_points(domain, seed, count)
    margins = np.empty(len(points))
    for k, x in enumerate(points):
        lo, hi = spectral_bounds(fd_hessian(f, x) / beta)
        margins[k] = max(abs(lo), abs(hi)) - 1.0
    worst = float(np.max(margins))
    cert = Certificate(claim, "consistent", worst, tol, len(points))
    if worst > tol:
        k = int(np.argmax(margins))
        cert.verdict = "falsified"
        cert.witness = {"kind": "point", "x": points[k].tolist(), "norm": float(margins[k] + 1.0),
                        "margin": float(margins[k])}
    return cert


def prove_quadratic(f: ScalarFunction, beta: float, prop: str = "lipschitz") -> Certificate:
    """Decide a claim about a quadratic exactly from its eigenvalues.

    For psd ``Q`` the gradient ``Qx - b`` is beta-Lipschitz, is
    1/beta-cocoercive, and ``(beta/2)||x||^2 - f`` is convex, each iff
    ``lambda_max(Q) <= beta``.
    """
    if f.quadratic_form is None:
        raise ValueError(f"{f.label} is not a quadratic")
    if prop not in ("lipschitz", "cocoercive", "convex_gap"):
        raise ValueError(f"unknown property {prop!r}")
    w, v = jacobi_eigh(f.quadratic_form)
    lam = float(w[-1])
    claim = {"function": f.label, "property": prop, "modulus": float(beta),
             "domain": domain_to_dict(f.domain)}
    margin = lam / beta - 1.0
    if lam <= beta:
        return Certificate(claim, "proved", margin, 0.0,
                           reason=f"lambda_max(Q) = {lam!r} <= beta")
    top = v[:, -1]
    x = _deep_point(f.domain)
    y = x + 0.5 * f.domain.safe_radius(x) * top
    return Certificate(claim, "falsified", margin, 0.0,
                       witness={"kind": "pair", "x": x.tolist(), "y": y.tolist(), "margin": margin},
                       reason=f"lambda_max(Q) = {lam!r} > beta; witness along the top eigenvector")


def _deep_point(domain) -> np.ndarray:
    anchor = getattr(domain, "anchor", None)
    if anchor is not None:
        return np.array(anchor)
    lo, hi = domain.bounding_box()
    return 0.5 * (lo + hi)
