"""Ambient geometry: vectors, open convex domains and deterministic sampling.

Domains are open sets. Membership uses strict float comparisons with no
epsilon; callers that need to stay away from the boundary go through
:func:`safe_radius`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "DimensionError",
    "DomainError",
    "EmptyDomainError",
    "SamplingError",
    "as_vector",
    "Box",
    "Ball",
    "Intersection",
    "PairSample",
    "contains",
    "safe_radius",
    "sample_points",
    "sample_pairs",
    "domain_from_dict",
    "domain_to_dict",
    "DEFAULT_SCALES",
    "REJECTION_CAP",
    "DEGENERATE_SEPARATION",
]

# relative to the domain diameter
DEFAULT_SCALES = (1e-1, 1e-2, 1e-4, 1e-6)
REJECTION_CAP = 10_000
DEGENERATE_SEPARATION = 1e-14


class DimensionError(ValueError):
    """Vector dimension does not match the problem dimension."""


class DomainError(ValueError):
    """A point lies outside the open domain it is evaluated on."""


class EmptyDomainError(ValueError):
    """An intersection of domains has empty interior."""


class SamplingError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-d float array, checking its dimension."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Box:
    """Open box ``lower < x < upper`` (componentwise)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be 1-d arrays of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if not np.all(lo < hi):
            raise EmptyDomainError("box requires lower < upper componentwise")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x: np.ndarray) -> bool:
        if np.shape(x) != self.lower.shape:
            raise DimensionError(f"expected dimension {self.dim}, got shape {np.shape(x)}")
        return bool((self.lower < x).all() and (x < self.upper).all())

    def safe_radius(self, x: np.ndarray) -> float:
        return float(min(np.min(x - self.lower), np.min(self.upper - x)))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper

    def depth(self, x: np.ndarray) -> float:
        return self.safe_radius(x)


@dataclass(frozen=True)
class Ball:
    """Open Euclidean ball ``||x - center|| < radius``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_vector(self.center)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError("ball radius must be a positive finite number")
        object.__setattr__(self, "center", _freeze(c))
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x: np.ndarray) -> bool:
        if np.shape(x) != self.center.shape:
            raise DimensionError(f"expected dimension {self.dim}, got shape {np.shape(x)}")
        return bool(np.linalg.norm(x - self.center) < self.radius)

    def safe_radius(self, x: np.ndarray) -> float:
        return float(self.radius - np.linalg.norm(x - self.center))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    def depth(self, x: np.ndarray) -> float:
        return self.safe_radius(x)


@dataclass(frozen=True)
class Intersection:
    """Intersection of boxes and balls.

    Construction locates a deep interior point (a Chebyshev-style center)
    and rejects the intersection when no point has positive depth.
    """

    members: tuple
    anchor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        flat = []
        for m in self.members:
            flat.extend(m.members if isinstance(m, Intersection) else [m])
        if not flat:
            raise ValueError("intersection needs at least one member")
        dims = {m.dim for m in flat}
        if len(dims) != 1:
            raise DimensionError(f"intersection members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", tuple(flat))

        lo, hi = self.bounding_box()
        if not np.all(lo < hi):
            raise EmptyDomainError("intersection is empty (bounding boxes are disjoint)")
        anchor = _deepest_point(flat, lo, hi)
        if anchor is None:
            raise EmptyDomainError("intersection has empty interior")
        object.__setattr__(self, "anchor", _freeze(anchor))

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def contains(self, x: np.ndarray) -> bool:
        return all(m.contains(x) for m in self.members)

    def safe_radius(self, x: np.ndarray) -> float:
        return min(m.safe_radius(x) for m in self.members)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.max([m.bounding_box()[0] for m in self.members], axis=0)
        hi = np.min([m.bounding_box()[1] for m in self.members], axis=0)
        return lo, hi

    def depth(self, x: np.ndarray) -> float:
        return min(m.depth(x) for m in self.members)


def _deepest_point(members, lo, hi):
    """Maximize the minimum member depth; None if no interior point exists."""
    lo_f = np.where(np.isfinite(lo), lo, -1e6)
    hi_f = np.where(np.isfinite(hi), hi, 1e6)
    start = 0.5 * (lo_f + hi_f)

    def neg_depth(z):
        return -min(m.depth(z) for m in members)

    best = start
    if neg_depth(start) >= 0:
        res = minimize(neg_depth, start, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 5000 * start.size})
        best = res.x
    for m in members:
        if not m.contains(best):
            return None
    return best


Domain = Box | Ball | Intersection


def contains(domain, x) -> bool:
    """True iff ``x`` lies in the open ``domain``."""
    return domain.contains(as_vector(x, domain.dim))


def safe_radius(domain, x) -> float:
    """Radius of a closed ball around ``x`` that stays inside ``domain``.

    Exact boundary distance for boxes and balls; for intersections the
    minimum over members.
    """
    v = as_vector(x, domain.dim)
    if not domain.contains(v):
        raise DomainError(f"point {v.tolist()} is outside the domain")
    return domain.safe_radius(v)


def diameter(domain) -> float:
    lo, hi = domain.bounding_box()
    return float(np.linalg.norm(hi - lo))


def _draw_point(domain, rng: np.random.Generator) -> np.ndarray:
    lo, hi = domain.bounding_box()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise SamplingError("cannot sample from an unbounded domain")
    for _ in range(REJECTION_CAP):
        x = rng.uniform(lo, hi)
        if domain.contains(x):
            return x
    raise SamplingError(f"rejection sampling exceeded {REJECTION_CAP} attempts")


def sample_points(domain, seed: int, count: int) -> list[np.ndarray]:
    """Draw ``count`` points uniformly from ``domain`` (deterministic in ``seed``)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return [_draw_point(domain, rng) for _ in range(count)]


@dataclass(frozen=True)
class PairSample:
    x: np.ndarray
    y: np.ndarray
    # relative separation class; 1.0 marks an independent pair
    scale: float


def _unit_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        d = rng.standard_normal(dim)
        n = np.linalg.norm(d)
        if n > 1e-12:
            return d / n


def sample_pairs(domain, seed: int, count: int,
                 scales: Sequence[float] = DEFAULT_SCALES) -> list[PairSample]:
    """Sample point pairs for testing two-point inequalities.

    Pairs cycle through one independent pair followed by one local pair per
    entry of ``scales``.  A local pair is ``y = x + s * d`` with ``s`` the
    scale times the domain diameter, shortened to stay inside the domain.
    Pairs closer than ``DEGENERATE_SEPARATION`` are redrawn.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    scales = [float(s) for s in scales]
    if not scales or any(not (s > 0) for s in scales):
        raise ValueError("scales must be a non-empty list of positive numbers")
    rng = np.random.default_rng(seed)
    diam = diameter(domain)
    cycle = len(scales) + 1
    pairs = []
    while len(pairs) < count:
        slot = len(pairs) % cycle
        for _ in range(REJECTION_CAP):
            x = _draw_point(domain, rng)
            if slot == 0:
                y = _draw_point(domain, rng)
                scale = 1.0
            else:
                scale = scales[slot - 1]
                d = _unit_direction(rng, domain.dim)
                step = min(scale * diam, 0.999 * domain.safe_radius(x))
                y = x + step * d
                if not domain.contains(y):
                    continue
            if np.linalg.norm(x - y) >= DEGENERATE_SEPARATION:
                pairs.append(PairSample(x, y, scale))
                break
        else:
            raise SamplingError("could not draw a non-degenerate pair")
    return pairs


def domain_from_dict(spec: dict):
    """Build a domain from its JSON description.

    Accepted forms: ``{"box": {"lower": [...], "upper": [...]}}``,
    ``{"ball": {"center": [...], "radius": r}}`` and
    ``{"intersection": [<domain>, ...]}``.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError("domain must be an object with exactly one of box/ball/intersection")
    (kind, body), = spec.items()
    if kind == "box":
        return Box(body["lower"], body["upper"])
    if kind == "ball":
        return Ball(body["center"], body["radius"])
    if kind == "intersection":
        return Intersection(tuple(domain_from_dict(m) for m in body))
    raise ValueError(f"unknown domain kind {kind!r}")


def domain_to_dict(domain) -> dict:
    if isinstance(domain, Box):
        return {"box": {"lower": domain.lower.tolist(), "upper": domain.upper.tolist()}}
    if isinstance(domain, Ball):
        return {"ball": {"center": domain.center.tolist(), "radius": domain.radius}}
    return {"intersection": [domain_to_dict(m) for m in domain.members]}
