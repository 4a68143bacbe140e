"""Forward-backward solvers for ``0 in A x + B x``.

``A`` is the subdifferential of a prox-friendly function (or a monotone
linear map, through its resolvent) and ``B`` a single-valued operator that
is ``beta``-cocoercive: ``<Bx - By, x - y> >= beta ||Bx - By||^2``.  Note
the convention: here ``beta`` is the cocoercivity modulus itself, so the
step size must satisfy ``0 < mu < 2 beta``.

Both solvers iterate the same update kernel, so an explicit Euler run with
``dt = 1`` reproduces the fixed-point trace bit for bit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DomainError, as_vector
from .estimators import estimate_moduli
from .funclib import VectorOperator, resolvent

__all__ = [
    "InclusionProblem",
    "SolveTrace",
    "Admissibility",
    "fb_residual",
    "forward_backward",
    "dyn_integrate",
    "admissibility",
    "trace_to_csv",
    "MAX_ITER",
    "TOL",
]

MAX_ITER = 100_000
TOL = 1e-10
# residual growth factor (over 1 + initial residual) that counts as divergence
BLOWUP = 1e10


@dataclass(frozen=True)
class InclusionProblem:
    phi: object
    b_op: VectorOperator
    x0: np.ndarray
    beta: Optional[float] = None
    domain: object = None

    def __post_init__(self):
        x0 = as_vector(self.x0, self.b_op.dim)
        object.__setattr__(self, "x0", x0)
        if self.domain is None:
            object.__setattr__(self, "domain", self.b_op.domain)
        if self.domain.dim != x0.size:
            raise ValueError("domain dimension does not match x0")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be > 0")

    def forward(self, x: np.ndarray) -> np.ndarray:
        if not self.domain.contains(x):
            raise DomainError(f"iterate {x.tolist()} left the domain of {self.b_op.label}")
        return np.asarray(self.b_op.apply(x), dtype=float)


@dataclass
class SolveTrace:
    iterates: list
    residuals: list
    mu: float
    mode: str
    dt: Optional[float] = None
    converged: bool = False
    diverged: bool = False
    tol: float = TOL
    times: list = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]

    @property
    def x(self) -> np.ndarray:
        return self.iterates[-1]

    def to_dict(self) -> dict:
        fr = self.final_residual
        return {
            "type": "SolveTrace",
            "mode": self.mode,
            "mu": self.mu,
            "dt": self.dt,
            "iterations": len(self.iterates) - 1,
            "converged": self.converged,
            "diverged": self.diverged,
            "final_residual": fr if math.isfinite(fr) else None,
            "x_final": [v if math.isfinite(v) else None for v in self.x.tolist()],
        }


@dataclass
class Admissibility:
    admissible: bool
    mu: float
    beta: float
    source: str

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "mu": self.mu,
                "beta": self.beta if math.isfinite(self.beta) else None,
                "two_beta": 2 * self.beta if math.isfinite(self.beta) else None,
                "source": self.source}


def _backward_point(p: InclusionProblem, mu: float, x: np.ndarray) -> np.ndarray:
    return resolvent(p.phi, mu, x - mu * p.forward(x))


def fb_residual(p: InclusionProblem, mu: float, x) -> float:
    """``||x - prox_{mu phi}(x - mu B x)||``; zero exactly at solutions."""
    if not mu > 0:
        raise ValueError("mu must be > 0")
    x = as_vector(x, p.x0.size)
    return float(np.linalg.norm(x - _backward_point(p, mu, x)))


def _step(x: np.ndarray, z: np.ndarray, dt: float) -> np.ndarray:
    # dt == 1 is the plain fixed-point update
    return z if dt == 1.0 else x + dt * (z - x)


def _run(p: InclusionProblem, mu: float, tol: float, max_iter: int, dt: float,
         mode: str, rk4: bool = False) -> SolveTrace:
    if not mu > 0:
        raise ValueError("mu must be > 0")
    x = p.x0.copy()
    trace = SolveTrace([x], [], float(mu), mode, None if mode == "fixed_point" else dt, tol=tol)
    if mode != "fixed_point":
        trace.times.append(0.0)
    limit = None
    for k in range(max_iter + 1):
        z = _backward_point(p, mu, x)
        r = float(np.linalg.norm(x - z))
        trace.residuals.append(r)
        if limit is None:
            limit = BLOWUP * (1.0 + r)
        if not math.isfinite(r) or r > limit:
            trace.diverged = True
            break
        if r <= tol:
            trace.converged = True
            break
        if k == max_iter:
            break
        if rk4:
            x = _rk4_step(p, mu, x, z, dt)
        else:
            x = _step(x, z, dt)
        if not np.all(np.isfinite(x)):
            trace.diverged = True
            trace.residuals.append(math.inf)
            trace.iterates.append(x)
            break
        trace.iterates.append(x)
        if trace.times is not None and mode != "fixed_point":
            trace.times.append((k + 1) * dt)
    return trace


def _rk4_step(p, mu, x, z, dt):
    def field_at(v):
        return _backward_point(p, mu, v) - v

    k1 = z - x
    k2 = field_at(x + 0.5 * dt * k1)
    k3 = field_at(x + 0.5 * dt * k2)
    k4 = field_at(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def forward_backward(p: InclusionProblem, mu: float, tol: float = TOL,
                     max_iter: int = MAX_ITER) -> SolveTrace:
    """Iterate ``x <- prox_{mu phi}(x - mu B x)`` until the residual is <= tol.

    Step-size admissibility is not enforced; see :func:`admissibility`.
    A residual blowing past ``1e10 (1 + r0)`` or a non-finite iterate ends
    the run with ``diverged`` set.
    """
    return _run(p, mu, tol, max_iter, 1.0, "fixed_point")


def dyn_integrate(p: InclusionProblem, mu: float, dt: float, t_end: float,
                  tol: float = TOL, method: str = "euler") -> SolveTrace:
    """Integrate ``x' = prox_{mu phi}(x - mu B x) - x`` from ``x0``.

    Fixed steps of explicit Euler or classical RK4; stops early once the
    forward-backward residual is <= tol.
    """
    if not 0.0 < dt <= 1.0:
        raise ValueError("dt must lie in (0, 1]")
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    steps = int(math.ceil(t_end / dt - 1e-9))
    return _run(p, mu, tol, steps, float(dt), method, rk4=(method == "rk4"))


def admissibility(p: InclusionProblem, mu: float, seed: int = 0, count: int = 2000) -> Admissibility:
    """Is ``mu`` inside the open interval ``(0, 2 beta)``?

    Uses the problem's claimed ``beta`` when given, otherwise the sampled
    cocoercivity modulus of ``B`` (which can only overestimate the true one).
    """
    if p.beta is not None:
        beta, source = float(p.beta), "claimed"
    else:
        report = estimate_moduli(p.b_op, p.domain, seed, count)
        beta, source = report.coco_inf, "estimated"
    ok = bool(math.isfinite(beta) and beta > 0 and 0.0 < mu < 2.0 * beta)
    return Admissibility(ok, float(mu), float(beta), source)


def trace_to_csv(trace: SolveTrace) -> str:
    """CSV with columns iter, t, x_0..x_{n-1}, residual; 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = trace.iterates[0].size
    w.writerow(["iter", "t"] + [f"x_{i}" for i in range(n)] + ["residual"])
    for k, (x, r) in enumerate(zip(trace.iterates, trace.residuals)):
        t = "" if trace.mode == "fixed_point" else format(trace.times[k], ".17g")
        w.writerow([k, t] + [format(v, ".17g") for v in x] + [format(r, ".17g")])
    return buf.getvalue()
