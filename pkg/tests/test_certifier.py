import numpy as np
import pytest

from cocoercivity.certifier import (
    bh_check,
    local_coco_search,
    orthonormal_basis,
    pseudo_gradient,
    slice_check,
)
from cocoercivity.core import Box, sample_pairs
from cocoercivity.funclib import example31, example31_second_derivative, quadratic, rotation_operator


def grid_max_f2(lo, hi, n=10_001):
    # independent oracle: closed-form second derivative on a dense grid
    xs = np.linspace(lo, hi, n)
    return max(3 / 32 / np.sqrt(x) + 8 / (4 - x) ** 3 if x > 0 else 8 / (4 - x) ** 3 for x in xs)


def test_grid_oracle_agrees_with_library():
    for x in (-1.0, 0.5, 2.0, 3.5):
        assert example31_second_derivative(x) == pytest.approx(grid_max_f2(x, x, 1), rel=1e-14)


def test_bh_quadratic_examples():
    f = quadratic(np.diag([1.0, 4.0]))
    rep = bh_check(f, beta=4.0, seed=0)
    assert rep.verdicts() == ("consistent",) * 3 and rep.consistency
    assert rep.descent_check >= -1e-10
    rep = bh_check(f, beta=3.0, seed=0)
    assert rep.verdicts() == ("falsified",) * 3 and rep.consistency
    w = rep.verdict_a.witness
    d = np.abs(np.subtract(w["x"], w["y"]))
    assert d[1] > d[0]


def test_bh_example31_at_grid_oracle():
    beta = grid_max_f2(0.5, 3.5)
    rep = bh_check(example31(Box([0.5], [3.5])), beta=beta, seed=0)
    assert rep.verdicts() == ("consistent",) * 3 and rep.consistency


def test_rotation_diagnostic():
    rep = bh_check(pseudo_gradient(rotation_operator()), beta=1.0, seed=0)
    assert rep.verdict_a.consistent
    assert rep.verdict_c.falsified
    assert abs(rep.verdict_c.witness["inner"]) <= 1e-12
    assert rep.verdict_c.witness["dT_norm"] >= 0.1
    assert not rep.consistency


def test_local_quadratic_any_center():
    f = quadratic(np.eye(2))
    rep = local_coco_search(f, x=[0.2, -0.3], seed=0)
    assert rep.radius == pytest.approx(f.domain.safe_radius(np.array([0.2, -0.3])) / 4)
    assert rep.beta_local == pytest.approx(1.0, abs=1e-12)
    q = np.array([[2.0, 1.0], [1.0, 3.0]])
    lmax = np.linalg.eigvalsh(q)[-1]
    for c in ([0.0, 0.0], [0.5, 0.5], [-0.8, 0.1]):
        rep = local_coco_search(quadratic(q), x=c, seed=1)
        assert rep.certificate.consistent
        assert rep.beta_local == pytest.approx(lmax, rel=0.02)


def test_local_example31():
    rep = local_coco_search(example31(), x=[2.0], seed=0)
    assert rep.radius == pytest.approx(0.5)
    assert rep.beta_local == pytest.approx(grid_max_f2(1.5, 2.5), rel=0.05)
    assert 1 / rep.beta_local == pytest.approx(0.411, rel=0.05)
    assert rep.certificate.consistent


def test_local_example31_at_zero_escalates():
    rep = local_coco_search(example31(), x=[0.0], seed=0)
    assert rep.certificate.falsified
    betas = [h["beta_local"] for h in rep.history]
    assert len(betas) > 5
    assert betas[-1] > 100 * betas[0]


def test_orthonormal_basis():
    b = orthonormal_basis([np.array([1.0, 0.0, 0.0]), np.array([2.0, 0.0, 0.0]), np.array([1.0, 1.0, 0.0])])
    assert b.shape == (3, 2)
    assert np.allclose(b.T @ b, np.eye(2))


def test_slice_examples():
    f = quadratic(np.eye(3), domain=Box(-2 * np.ones(3), 2 * np.ones(3)))
    cert = slice_check(f, x=[0.5, 0.1, -0.2], y=[-0.3, 0.4, 0.9], seed=0)
    assert cert.consistent
    g = quadratic(np.diag([1.0, 4.0, 9.0]), domain=Box(-2 * np.ones(3), 2 * np.ones(3)))
    cert = slice_check(g, x=[1.0, 0.0, 0.0], y=[0.0, 0.0, 1.0], seed=0)
    assert cert.consistent
    assert cert.margin <= 1e-12


def test_slice_strict_when_direction_excluded():
    g = quadratic(np.diag([1.0, 4.0, 9.0]), domain=Box(-2 * np.ones(3), 2 * np.ones(3)))
    x, y = np.array([0.5, 0.5, 0.0]), np.array([0.0, 0.0, 0.0])
    basis = orthonormal_basis([x, y])
    full = np.linalg.norm(g.grad(x) - g.grad(y))
    part = np.linalg.norm(basis.T @ (g.grad(x) - g.grad(y)))
    assert part < full


@pytest.mark.parametrize("f", [quadratic(np.array([[2.0, 1.0], [1.0, 3.0]])), example31()],
                         ids=["quadratic", "example31"])
def test_slice_holds_on_samples(f):
    for k, p in enumerate(sample_pairs(f.domain, 4, 200)):
        assert slice_check(f, x=p.x, y=p.y, seed=k).consistent
