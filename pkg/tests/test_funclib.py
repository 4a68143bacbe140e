import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocoercivity.core import Ball, Box, DimensionError, DomainError, sample_pairs, sample_points
from cocoercivity.estimators import check_cocoercive, estimate_moduli, fd_gradient
from cocoercivity.funclib import (
    L1,
    BallIndicator,
    BoxIndicator,
    LinearMonotone,
    QuadraticPenalty,
    UnsupportedOperatorError,
    bh_companions,
    example31,
    example31_gradient,
    example31_value,
    gradient_operator,
    moreau_envelope,
    one_minus,
    prox,
    prox_operator,
    quadratic,
    quadratic_gradient,
    resolvent,
    rotation,
    scaled_identity,
    two_t_minus_id,
    yosida,
    yosida_operator,
)

PROX_CATALOG = [
    L1(1.0),
    L1(0.3),
    BoxIndicator([0.0, 0.0], [1.0, 1.0]),
    BallIndicator([0.0, 0.0], 1.0),
    QuadraticPenalty([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0]),
]
YOSIDA_CATALOG = PROX_CATALOG + [LinearMonotone([[0.0, -1.0], [1.0, 0.0]]), LinearMonotone(np.zeros((2, 2)))]
WIDE = Box([-5.0, -5.0], [5.0, 5.0])


def soft_threshold(x, k):
    # independent closed form
    return np.array([math.copysign(max(abs(v) - k, 0.0), v) for v in x])


def test_example31_values():
    assert example31_value(0.0) == 1.0
    assert example31_gradient(0.0) == 0.25
    assert example31_value(1.0) == pytest.approx(1.0 / 8 + 4.0 / 3, abs=1e-12)
    assert example31_gradient(1.0) == pytest.approx(3.0 / 16 + 4.0 / 9, abs=1e-12)
    assert example31_gradient(-2.0) == pytest.approx(4.0 / 36, abs=1e-15)
    with pytest.raises(DomainError):
        example31_value(4.0)


def test_example31_is_c1_at_zero():
    h = 1e-9
    assert example31_value(-h) == pytest.approx(example31_value(h), abs=1e-8)
    assert example31_gradient(-h) == pytest.approx(example31_gradient(h), abs=1e-5)


def test_rotation_examples():
    assert np.array_equal(rotation([1.0, 0.0]), [0.0, 1.0])
    assert np.array_equal(rotation([0.0, 0.0]), [0.0, 0.0])
    assert float((rotation([1.0, 0.0]) - rotation([0.0, 0.0])) @ np.array([1.0, 0.0])) == 0.0
    with pytest.raises(DimensionError):
        rotation([1.0, 2.0, 3.0])


def test_quadratic_examples():
    assert np.array_equal(quadratic_gradient(np.diag([1.0, 4.0]), None, [1.0, 1.0]), [1.0, 4.0])
    assert np.array_equal(quadratic_gradient(np.eye(2), [2.0, -1.0], [0.0, 0.0]), [-2.0, 1.0])
    rep = estimate_moduli(gradient_operator(quadratic(np.diag([1.0, 4.0]))), seed=0, count=4000)
    assert rep.lipschitz_sup == pytest.approx(4.0, rel=1e-6)
    with pytest.raises(ValueError):
        quadratic([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        quadratic([[1.0, 0.5], [0.0, 1.0]])


def test_prox_examples():
    assert np.allclose(prox(L1(1.0), 1.0, [2.0, 0.5, -3.0]), [1.0, 0.0, -2.0])
    for mu in (0.1, 1.0, 10.0):
        assert np.array_equal(prox(BoxIndicator([0, 0], [1, 1]), mu, [2.0, -1.0]), [1.0, 0.0])
    assert np.allclose(prox(QuadraticPenalty(np.eye(2)), 1.0, [2.0, 2.0]), [1.0, 1.0])
    with pytest.raises(ValueError):
        prox(L1(1.0), 0.0, [1.0])
    with pytest.raises(UnsupportedOperatorError):
        prox(object(), 1.0, [1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=5), st.floats(0.01, 10), st.floats(0, 5))
def test_l1_prox_matches_soft_threshold(x, mu, w):
    assert np.allclose(prox(L1(w), mu, x), soft_threshold(x, mu * w), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2), st.floats(0.01, 10))
def test_ball_prox_is_projection(x, mu):
    p = prox(BallIndicator([0.0, 0.0], 1.0), mu, x)
    nx = np.linalg.norm(x)
    expected = np.asarray(x) if nx <= 1 else np.asarray(x) / nx
    assert np.allclose(p, expected, atol=1e-12)


def test_resolvent_and_yosida_examples():
    assert resolvent(L1(1.0), 1.0, [2.0])[0] == pytest.approx(1.0)
    zero = LinearMonotone(np.zeros((2, 2)))
    assert np.array_equal(resolvent(zero, 3.0, [1.5, -2.0]), [1.5, -2.0])
    assert resolvent(LinearMonotone([[1.0]]), 1.0, [4.0])[0] == pytest.approx(2.0)
    assert yosida(L1(1.0), 1.0, [2.0])[0] == pytest.approx(1.0)
    assert yosida(L1(1.0), 1.0, [0.5])[0] == pytest.approx(0.5)
    assert np.array_equal(yosida(zero, 2.0, [1.0, 1.0]), [0.0, 0.0])
    with pytest.raises(ValueError):
        LinearMonotone([[-1.0]])


def test_transform_examples():
    dom = Box([-3.0], [3.0])
    ident = scaled_identity(1.0, dom)
    assert np.array_equal(one_minus(ident)(np.array([2.0])), [0.0])
    assert two_t_minus_id(prox_operator(L1(1.0), 1.0, dom))(np.array([2.0]))[0] == 0.0
    rot = one_minus(gradient_operator_from(rotation))
    assert np.array_equal(rot(np.array([0.5, 0.0])), [0.5, -0.5])


def gradient_operator_from(fn):
    from cocoercivity.funclib import VectorOperator
    return VectorOperator(Box([-1.0, -1.0], [1.0, 1.0]), fn, "rot")


def test_companions():
    half = quadratic(np.eye(2))
    g, h = bh_companions(half, 1.0)
    x = np.array([0.3, -0.7])
    assert g(x) == pytest.approx(0.0, abs=1e-15)
    assert h(x) == pytest.approx(0.5 * x @ x)
    g31, _ = bh_companions(example31(), 1.0)
    assert g31(np.array([0.0])) == -1.0


@pytest.mark.parametrize("phi", PROX_CATALOG, ids=lambda p: p.kind)
@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_prox_firmly_nonexpansive(phi, mu):
    for p in sample_pairs(WIDE, 2, 1000):
        dp = phi.prox(mu, p.x) - phi.prox(mu, p.y)
        assert dp @ dp <= dp @ (p.x - p.y) + 1e-12


@pytest.mark.parametrize("a", YOSIDA_CATALOG, ids=lambda a: getattr(a, "kind", "linear"))
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_yosida_cocoercive(a, lam):
    for p in sample_pairs(WIDE, 4, 1000):
        da = yosida(a, lam, p.x) - yosida(a, lam, p.y)
        assert da @ (p.x - p.y) >= lam * (da @ da) - 1e-12


def test_one_minus_projection_half_cocoercive_and_scaled_identity_not():
    t = prox_operator(BoxIndicator([0.0, 0.0], [1.0, 1.0]), 1.0, WIDE)
    s = one_minus(t)
    for p in sample_pairs(WIDE, 1, 1000):
        d = s(p.x) - s(p.y)
        assert d @ (p.x - p.y) >= 0.5 * (d @ d) - 1e-12
    rep = estimate_moduli(one_minus(scaled_identity(1.5, WIDE)), seed=1, count=1000)
    cert = check_cocoercive(rep, 0.5, tol=1e-12)
    assert cert.falsified and cert.witness is not None


@pytest.mark.parametrize("phi", PROX_CATALOG, ids=lambda p: p.kind)
def test_reflected_prox_nonexpansive(phi):
    r = two_t_minus_id(prox_operator(phi, 1.0, WIDE))
    for p in sample_pairs(WIDE, 3, 1000):
        assert np.linalg.norm(r(p.x) - r(p.y)) <= np.linalg.norm(p.x - p.y) + 1e-12


CATALOG_FUNCS = [
    example31(Box([-3.9], [3.9])),
    quadratic(np.diag([1.0, 4.0])),
    quadratic(np.array([[2.0, 1.0], [1.0, 3.0]]), [1.0, -2.0], Ball([0.0, 0.0], 2.0)),
    moreau_envelope(L1(1.0), 0.5, WIDE),
    moreau_envelope(BallIndicator([0.0, 0.0], 1.0), 1.0, WIDE),
]


@pytest.mark.parametrize("f", CATALOG_FUNCS, ids=lambda f: f.label)
def test_analytic_gradient_matches_fd(f):
    for x in sample_points(f.domain, 9, 100):
        g = f.grad(x)
        assert np.linalg.norm(g - fd_gradient(f, x)) <= 1e-5 * (1 + np.linalg.norm(g))


def test_envelope_gradient_is_yosida():
    env = moreau_envelope(L1(1.0), 0.7, WIDE)
    for x in sample_points(WIDE, 0, 20):
        assert np.array_equal(env.grad(x), yosida(L1(1.0), 0.7, x))
        assert np.allclose(yosida_operator(L1(1.0), 0.7, WIDE)(x), env.grad(x))


def test_domain_checked():
    f = example31(Box([0.5], [3.5]))
    with pytest.raises(DomainError):
        f(np.array([0.1]))
