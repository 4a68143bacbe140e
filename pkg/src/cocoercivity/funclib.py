"""Catalog of functions, operators and closed-form proximal maps.

Every catalog entry is an immutable object; evaluations are pure.
Catalog identifiers used by the JSON problem format are listed in
:data:`CATALOG_IDS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Box, DimensionError, DomainError, as_vector
from .eigen import spectral_bounds

__all__ = [
    "CATALOG_IDS",
    "ScalarFunction",
    "VectorOperator",
    "UnsupportedOperatorError",
    "example31_value",
    "example31_gradient",
    "example31_second_derivative",
    "example31",
    "quadratic",
    "quadratic_gradient",
    "rotation",
    "rotation_operator",
    "gradient_operator",
    "linear_operator",
    "scaled_identity",
    "L1",
    "BoxIndicator",
    "BallIndicator",
    "QuadraticPenalty",
    "LinearMonotone",
    "prox",
    "prox_operator",
    "resolvent",
    "yosida",
    "yosida_operator",
    "moreau_envelope",
    "one_minus",
    "two_t_minus_id",
    "bh_companions",
]

CATALOG_IDS = ("example31", "rotation", "quadratic", "l1", "box", "ball")

# symmetric psd check: smallest eigenvalue may dip this far below zero (relative)
PSD_TOL = 1e-12
MEMBER_SLACK = 1e-12


class UnsupportedOperatorError(TypeError):
    pass


@dataclass(frozen=True)
class ScalarFunction:
    """A real function on an open convex domain, with optional derivatives."""

    domain: object
    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "f"
    # set for quadratics so eigenvalues can decide claims exactly
    quadratic_form: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def _check(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        if not self.domain.contains(v):
            raise DomainError(f"{self.label}: point {v.tolist()} outside the domain")
        return v

    def __call__(self, x) -> float:
        return float(self.value(self._check(x)))

    def grad(self, x) -> np.ndarray:
        if self.gradient is None:
            raise AttributeError(f"{self.label} has no analytic gradient")
        return np.asarray(self.gradient(self._check(x)), dtype=float)

    def hess(self, x) -> np.ndarray:
        if self.hessian is None:
            raise AttributeError(f"{self.label} has no analytic Hessian")
        return np.asarray(self.hessian(self._check(x)), dtype=float)


@dataclass(frozen=True)
class VectorOperator:
    """A map from an open convex domain into the same space."""

    domain: object
    apply: Callable[[np.ndarray], np.ndarray]
    label: str = "T"

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        if not self.domain.contains(v):
            raise DomainError(f"{self.label}: point {v.tolist()} outside the domain")
        out = np.asarray(self.apply(v), dtype=float)
        if out.shape != v.shape:
            raise DimensionError(f"{self.label}: output shape {out.shape} != input shape {v.shape}")
        return out


# ---------------------------------------------------------------------------
# The one-dimensional convex function on (-4, 4) that is C^1 but not C^2.
# On (-4, 0) the value is 4/(4 - x): this matches the derivative 4/(4 - x)^2
# and makes f continuous at 0.


def _ex31_arg(x) -> float:
    x = float(x)
    if not -4.0 < x < 4.0:
        raise DomainError(f"example31 is defined on (-4, 4), got {x}")
    return x


def example31_value(x: float) -> float:
    x = _ex31_arg(x)
    if x >= 0.0:
        return x ** 1.5 / 8.0 + 4.0 / (4.0 - x)
    return 4.0 / (4.0 - x)


def example31_gradient(x: float) -> float:
    x = _ex31_arg(x)
    if x >= 0.0:
        return 3.0 / 16.0 * math.sqrt(x) + 4.0 / (4.0 - x) ** 2
    return 4.0 / (4.0 - x) ** 2


def example31_second_derivative(x: float) -> float:
    """Second derivative; +inf at 0 where the sqrt term's curvature blows up."""
    x = _ex31_arg(x)
    tail = 8.0 / (4.0 - x) ** 3
    if x > 0.0:
        return 3.0 / 32.0 / math.sqrt(x) + tail
    if x == 0.0:
        return math.inf
    return tail


def example31(domain=None) -> ScalarFunction:
    """The catalog function as a ScalarFunction on a 1-d domain inside (-4, 4)."""
    domain = Box([-4.0], [4.0]) if domain is None else domain
    return ScalarFunction(
        domain=domain,
        value=lambda v: example31_value(v[0]),
        gradient=lambda v: np.array([example31_gradient(v[0])]),
        hessian=lambda v: np.array([[example31_second_derivative(v[0])]]),
        label="example31",
    )


# ---------------------------------------------------------------------------
# quadratics and linear maps


def _check_psd(q: np.ndarray) -> np.ndarray:
    q = np.array(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {q.shape}")
    if not np.array_equal(q, q.T):
        raise ValueError("matrix must be exactly symmetric")
    lo, _ = spectral_bounds(q)
    if lo < -PSD_TOL * max(1.0, float(np.linalg.norm(q))):
        raise ValueError(f"matrix is not positive semidefinite (lambda_min={lo:.3g})")
    q.setflags(write=False)
    return q


def quadratic_gradient(q, b, x) -> np.ndarray:
    """Gradient ``Q x - b`` of ``0.5 <x, Q x> - <b, x>``."""
    q = _check_psd(q)
    x = as_vector(x, q.shape[0])
    b = np.zeros_like(x) if b is None else as_vector(b, x.size)
    return q @ x - b


def quadratic(q, b=None, domain=None, label: str = "quadratic") -> ScalarFunction:
    """``0.5 <x, Q x> - <b, x>`` for symmetric positive semidefinite ``Q``."""
    q = _check_psd(q)
    n = q.shape[0]
    b = np.zeros(n) if b is None else as_vector(b, n)
    if domain is None:
        domain = Box(-np.ones(n), np.ones(n))
    if domain.dim != n:
        raise DimensionError("domain dimension does not match Q")
    return ScalarFunction(
        domain=domain,
        value=lambda x: 0.5 * float(x @ q @ x) - float(b @ x),
        gradient=lambda x: q @ x - b,
        hessian=lambda x: q.copy(),
        label=label,
        quadratic_form=q,
    )


def rotation(x) -> np.ndarray:
    """Quarter turn ``(x1, x2) -> (-x2, x1)``: monotone, 1-Lipschitz, not cocoercive."""
    v = as_vector(x)
    if v.size != 2:
        raise DimensionError("rotation is defined on R^2")
    return np.array([-v[1], v[0]])


def rotation_operator(domain=None) -> VectorOperator:
    domain = Box([-1.0, -1.0], [1.0, 1.0]) if domain is None else domain
    if domain.dim != 2:
        raise DimensionError("rotation needs a 2-d domain")
    return VectorOperator(domain, rotation, "rotation")


def gradient_operator(f: ScalarFunction) -> VectorOperator:
    if f.gradient is None:
        raise ValueError(f"{f.label} has no analytic gradient")
    return VectorOperator(f.domain, f.gradient, f"grad({f.label})")


def linear_operator(m, domain=None, label: str = "linear") -> VectorOperator:
    m = np.array(m, dtype=float)
    n = m.shape[0]
    domain = Box(-np.ones(n), np.ones(n)) if domain is None else domain
    return VectorOperator(domain, lambda x: m @ x, label)


def scaled_identity(c: float, domain, label: Optional[str] = None) -> VectorOperator:
    c = float(c)
    return VectorOperator(domain, lambda x: c * x, label or f"{c:g}*Id")


def one_minus(t: VectorOperator) -> VectorOperator:
    """``x -> x - T x``."""
    return VectorOperator(t.domain, lambda x: x - t.apply(x), f"Id-{t.label}")


def two_t_minus_id(t: VectorOperator) -> VectorOperator:
    """``x -> 2 T x - x``."""
    return VectorOperator(t.domain, lambda x: 2.0 * t.apply(x) - x, f"2{t.label}-Id")


# ---------------------------------------------------------------------------
# prox-friendly convex functions


@dataclass(frozen=True)
class L1:
    """``weight * ||x||_1``; prox is componentwise soft thresholding."""

    weight: float = 1.0
    kind: str = field(default="l1", init=False)

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError("l1 weight must be >= 0")

    def __call__(self, x) -> float:
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, mu: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(np.abs(x) - mu * self.weight, 0.0)

    def to_dict(self) -> dict:
        return {"id": "l1", "weight": self.weight}


@dataclass(frozen=True)
class BoxIndicator:
    """Indicator of the closed box ``[lower, upper]``; prox is clipping."""

    lower: np.ndarray
    upper: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or not np.all(lo <= hi):
            raise ValueError("box indicator needs lower <= upper of equal length")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.0 if np.all((self.lower <= x) & (x <= self.upper)) else math.inf

    def prox(self, mu: float, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"id": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class BallIndicator:
    """Indicator of the closed ball; prox is radial projection."""

    center: np.ndarray
    radius: float
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be > 0")

    def __call__(self, x) -> float:
        # projections land on the sphere only up to roundoff
        inside = np.linalg.norm(np.asarray(x) - self.center) <= self.radius * (1.0 + MEMBER_SLACK)
        return 0.0 if inside else math.inf

    def prox(self, mu: float, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.center
        n = float(np.linalg.norm(d))
        if n <= self.radius:
            return self.center + d
        return self.center + d * (self.radius / n)

    def to_dict(self) -> dict:
        return {"id": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class QuadraticPenalty:
    """``0.5 <y, Q y> - <b, y>``; prox solves ``(I + mu Q) y = x + mu b``."""

    q: np.ndarray
    b: Optional[np.ndarray] = None
    kind: str = field(default="quadratic", init=False)

    def __post_init__(self):
        q = _check_psd(self.q)
        object.__setattr__(self, "q", q)
        b = np.zeros(q.shape[0]) if self.b is None else as_vector(self.b, q.shape[0])
        object.__setattr__(self, "b", b)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.q @ x) - float(self.b @ x)

    def prox(self, mu: float, x) -> np.ndarray:
        n = self.q.shape[0]
        return np.linalg.solve(np.eye(n) + mu * self.q, np.asarray(x, dtype=float) + mu * self.b)

    def to_dict(self) -> dict:
        return {"id": "quadratic", "Q": self.q.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True)
class LinearMonotone:
    """A monotone linear map ``x -> M x`` (``M`` need not be symmetric)."""

    m: np.ndarray
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("linear map must be square")
        lo, _ = spectral_bounds(0.5 * (m + m.T))
        if lo < -PSD_TOL * max(1.0, float(np.linalg.norm(m))):
            raise ValueError(f"linear map is not monotone (lambda_min of sym part = {lo:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __call__(self, x) -> np.ndarray:
        return self.m @ np.asarray(x, dtype=float)

    def resolvent(self, lam: float, x) -> np.ndarray:
        n = self.m.shape[0]
        return np.linalg.solve(np.eye(n) + lam * self.m, np.asarray(x, dtype=float))


PROX_KINDS = (L1, BoxIndicator, BallIndicator, QuadraticPenalty)


def prox(phi, mu: float, x) -> np.ndarray:
    """``argmin_y phi(y) + ||y - x||^2 / (2 mu)`` for a prox-friendly ``phi``."""
    if not mu > 0:
        raise ValueError("mu must be > 0")
    if not isinstance(phi, PROX_KINDS):
        raise UnsupportedOperatorError(f"no closed-form prox for {type(phi).__name__}")
    return phi.prox(float(mu), as_vector(x))


def prox_operator(phi, mu: float, domain) -> VectorOperator:
    mu = float(mu)
    return VectorOperator(domain, lambda x: phi.prox(mu, x), f"prox[{phi.kind},{mu:g}]")


def resolvent(a, lam: float, x) -> np.ndarray:
    """``(Id + lam A)^{-1} x`` for A a subdifferential of a prox-friendly
    function or a monotone linear map."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if isinstance(a, PROX_KINDS):
        return a.prox(float(lam), as_vector(x))
    if isinstance(a, LinearMonotone):
        return a.resolvent(float(lam), as_vector(x, a.m.shape[0]))
    raise UnsupportedOperatorError(f"unsupported operator representation {type(a).__name__}")


def yosida(a, lam: float, x) -> np.ndarray:
    """Yosida approximation ``(x - J_lam x) / lam``; it is lam-cocoercive."""
    x = as_vector(x)
    return (x - resolvent(a, lam, x)) / lam


def yosida_operator(a, lam: float, domain) -> VectorOperator:
    lam = float(lam)
    return VectorOperator(domain, lambda x: yosida(a, lam, x), f"yosida[{getattr(a, 'kind', 'A')},{lam:g}]")


def moreau_envelope(phi, lam: float, domain, label: Optional[str] = None) -> ScalarFunction:
    """Moreau envelope of a prox-friendly ``phi``; its gradient is the Yosida map.

    C^{1,+} with a (1/lam)-Lipschitz gradient, but not C^2 for l1 and the
    indicators.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lambda must be > 0")

    def value(x):
        p = phi.prox(lam, x)
        return float(phi(p)) + float(np.sum((x - p) ** 2)) / (2.0 * lam)

    def gradient(x):
        return (x - phi.prox(lam, x)) / lam

    return ScalarFunction(domain, value, gradient, None, label or f"env[{phi.kind},{lam:g}]")


def bh_companions(f: ScalarFunction, beta: float) -> tuple[ScalarFunction, ScalarFunction]:
    """``g = 0.5||x||^2 - f/beta`` and ``h = (2/beta) f - 0.5||x||^2``.

    g is convex iff grad f is beta-Lipschitz; grad h is 1-Lipschitz iff
    grad f is 1/beta-cocoercive.
    """
    beta = float(beta)
    if not beta > 0:
        raise ValueError("beta must be > 0")

    def g_val(x):
        return 0.5 * float(x @ x) - f.value(x) / beta

    def h_val(x):
        return 2.0 / beta * f.value(x) - 0.5 * float(x @ x)

    g_grad = h_grad = None
    if f.gradient is not None:
        def g_grad(x):
            return x - np.asarray(f.gradient(x)) / beta

        def h_grad(x):
            return 2.0 / beta * np.asarray(f.gradient(x)) - x

    g_hess = h_hess = None
    if f.hessian is not None:
        def g_hess(x):
            return np.eye(x.size) - np.asarray(f.hessian(x)) / beta

        def h_hess(x):
            return 2.0 / beta * np.asarray(f.hessian(x)) - np.eye(x.size)

    g = ScalarFunction(f.domain, g_val, g_grad, g_hess, f"g[{f.label},{beta:g}]")
    h = ScalarFunction(f.domain, h_val, h_grad, h_hess, f"h[{f.label},{beta:g}]")
    return g, h
