"""Sweep over symmetric intervals for the C^1-but-not-C^2 catalog function.

For each ``alpha`` the claim "f' is cocoercive on (-alpha, alpha) with
modulus 1/f'(alpha)" is tested, in both orientations of the modulus, and
compared with the modulus ``1 / max f''`` on ``(0.5, alpha)``, an interval
bounded away from the point 0 where f'' is unbounded.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .core import Box
from .estimators import check_cocoercive, estimate_moduli
from .funclib import example31, example31_gradient, example31_second_derivative, gradient_operator

DEFAULT_ALPHAS = (1e-3, 0.25, 0.5, 1.0, 2.0, 3.0, 3.5)
# windows (0, w) next to the singular point, clipped to (0, alpha)
ZOOM_WINDOWS = (1e-2, 1e-4)
AWAY_FROM_ZERO = 0.5
GRID_POINTS = 10_001

COLUMNS = (
    "alpha",
    "grid_max_f2",
    "lipschitz_sup",
    "coco_inf",
    "claimed_modulus",
    "verdict",
    "reciprocal_verdict",
    "witness_x",
    "witness_y",
    "witness_separation",
    "alt_modulus",
    "alt_verdict",
)


def grid_max_second_derivative(lo: float, hi: float, points: int = GRID_POINTS) -> float:
    return max(example31_second_derivative(x) for x in np.linspace(lo, hi, points))


def _worst(certs):
    falsified = [c for c in certs if c.falsified]
    if not falsified:
        return certs[0]
    return max(falsified, key=lambda c: c.witness["margin"])


def demo_row(alpha: float, seed: int = 42, count: int = 2000) -> dict:
    alpha = float(alpha)
    if not 0.0 < alpha < 4.0:
        raise ValueError(f"alpha must lie in (0, 4), got {alpha}")
    grad = gradient_operator(example31())
    claimed = 1.0 / example31_gradient(alpha)

    windows = [Box([-alpha], [alpha])]
    windows += [Box([0.0], [min(alpha, w)]) for w in ZOOM_WINDOWS if w < alpha]
    reports = [estimate_moduli(grad, dom, seed + k, count) for k, dom in enumerate(windows)]
    full = reports[0]
    claim = _worst([check_cocoercive(r, claimed) for r in reports])
    recip = _worst([check_cocoercive(r, 1.0 / claimed) for r in reports])

    row = {
        "alpha": alpha,
        "grid_max_f2": None,
        "lipschitz_sup": full.lipschitz_sup,
        "coco_inf": full.coco_inf,
        "claimed_modulus": claimed,
        "verdict": claim.verdict,
        "reciprocal_verdict": recip.verdict,
        "witness_x": None,
        "witness_y": None,
        "witness_separation": None,
        "alt_modulus": None,
        "alt_verdict": None,
    }
    if claim.witness is not None:
        wx, wy = claim.witness["x"][0], claim.witness["y"][0]
        row.update(witness_x=wx, witness_y=wy, witness_separation=abs(wx - wy))
    if alpha > AWAY_FROM_ZERO:
        bound = grid_max_second_derivative(AWAY_FROM_ZERO, alpha)
        away = estimate_moduli(grad, Box([AWAY_FROM_ZERO], [alpha]), seed + len(windows), count)
        row.update(grid_max_f2=bound, alt_modulus=1.0 / bound,
                   alt_verdict=check_cocoercive(away, 1.0 / bound).verdict)
    return row


def demo_example31(alpha_grid=DEFAULT_ALPHAS, seed: int = 42, count: int = 2000) -> list[dict]:
    return [demo_row(a, seed, count) for a in alpha_grid]


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        out = []
        for c in COLUMNS:
            v = row[c]
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(format(v, ".17g") if math.isfinite(v) else "")
            else:
                out.append(v)
        w.writerow(out)
    return buf.getvalue()
