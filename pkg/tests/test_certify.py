import math

import numpy as np
import pytest

from hilbertpoints import (
    Field,
    TrivialFieldError,
    UnsupportedExponentError,
    dual_witness,
    expand,
    gradient_residual,
    inner_product,
    make_case_b,
    p_norm,
    projection_apply,
    projection_pnorm,
    sup_witness,
    two_valued_check,
)
from hilbertpoints.certify import pnorm_gradient
from reference import projection_norm_cvx

NORMS_12 = Field.build([[1.0], [2.0]], [0.5, 0.5])
PS = (1, 1.5, 3, 4, math.inf)


def two_valued(rng, n=5, d=3):
    v = rng.normal(size=(n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v[1] = 0.0
    return Field.build(1.7 * v, rng.dirichlet(np.ones(n)))


def test_constant_norm_field():
    phi = Field.build([[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]])
    v = two_valued_check(phi)
    assert v.is_hilbert
    assert v.level == pytest.approx(1.0)
    assert v.support == frozenset({0, 1, 2})


def test_case_b_expansion_two_valued():
    phi = expand(make_case_b([1.0, 0.0]))
    assert phi.atom_norms().tolist() == [2.0, 0.0, 0.0, 2.0]
    v = two_valued_check(phi)
    assert v.is_hilbert and v.level == 2.0 and v.support == frozenset({0, 3})


def test_norms_one_two_not_two_valued():
    v = two_valued_check(NORMS_12)
    assert v.is_hilbert is False
    assert v.margin == pytest.approx(0.5)


def test_trivial_field_rejected():
    zero = Field.build(np.zeros((2, 2)))
    for fn in (two_valued_check, lambda f: projection_pnorm(f, 3),
               lambda f: gradient_residual(f, 3), lambda f: dual_witness(f, 3)):
        with pytest.raises(TrivialFieldError):
            fn(zero)


@pytest.mark.parametrize("c", [-3, -1, 0.5, 10])
def test_scale_invariance(c):
    rng = np.random.default_rng(4)
    for phi in (NORMS_12, two_valued(rng)):
        assert two_valued_check(c * phi).is_hilbert == two_valued_check(phi).is_hilbert
        for p in PS:
            assert gradient_residual(c * phi, p) == pytest.approx(
                gradient_residual(phi, p), rel=1e-9, abs=1e-15)


def test_projection_apply():
    rng = np.random.default_rng(5)
    phi = Field.build(rng.normal(size=(4, 2)))
    f = Field.build(rng.normal(size=(4, 2)))
    assert np.allclose(projection_apply(phi, phi).values, phi.values, atol=1e-12)
    g = f - projection_apply(phi, f)
    assert inner_product(g, phi) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(projection_apply(phi, g).values, 0.0, atol=1e-12)
    assert np.allclose(projection_apply(phi, phi + g).values, phi.values, atol=1e-12)
    once = projection_apply(phi, f)
    assert np.allclose(projection_apply(phi, once).values, once.values, atol=1e-12)


def test_projection_norm_examples():
    rng = np.random.default_rng(6)
    phi = two_valued(rng)
    for p in PS:
        assert projection_pnorm(phi, p) == pytest.approx(1.0, abs=1e-12)
    for p in PS:
        assert projection_pnorm(NORMS_12, p) > 1.0
    assert projection_pnorm(Field.build(rng.normal(size=(5, 3))), 2) == pytest.approx(1.0, abs=1e-12)


def test_projection_norm_one_two_against_solver():
    closed = projection_pnorm(NORMS_12, 4)
    assert closed == pytest.approx(1.043601301622251, rel=1e-12)
    assert abs(projection_norm_cvx([[1.0], [2.0]], [0.5, 0.5], 4) - closed) <= 1e-6


def test_dual_witness_self_dual_at_two():
    rng = np.random.default_rng(7)
    phi = Field.build(rng.normal(size=(4, 3)))
    psi = dual_witness(phi, 2).psi
    assert np.allclose(psi.values, phi.values / inner_product(phi, phi), rtol=1e-12)


def test_dual_witness_two_valued_hoelder_equality():
    phi = two_valued(np.random.default_rng(8))
    psi = dual_witness(phi, 4).psi
    assert inner_product(phi, psi) == pytest.approx(1.0, abs=1e-9)
    assert p_norm(psi, 4 / 3) * p_norm(phi, 4) == pytest.approx(1.0, abs=1e-9)


def test_dual_witness_one_two_leaves_span():
    # ||psi||_q ||phi||_p = 1 holds for every phi; what fails off the
    # two-valued set is that psi is a multiple of phi
    psi = dual_witness(NORMS_12, 4).psi
    assert inner_product(NORMS_12, psi) == pytest.approx(1.0, abs=1e-12)
    assert p_norm(psi, 4 / 3) * p_norm(NORMS_12, 4) == pytest.approx(1.0, abs=1e-12)
    resid = psi - projection_apply(NORMS_12, psi)
    assert p_norm(resid, 2) > 0.1 * p_norm(psi, 2)


def test_dual_witness_rejects_sup():
    with pytest.raises(UnsupportedExponentError):
        dual_witness(NORMS_12, math.inf)


def test_sup_witness():
    phi = two_valued(np.random.default_rng(9))
    psi = sup_witness(phi)
    assert p_norm(psi, math.inf) == pytest.approx(1.0)
    assert p_norm(projection_apply(phi, psi), math.inf) <= 1 + 1e-12
    bad = sup_witness(NORMS_12)
    assert p_norm(projection_apply(NORMS_12, bad), math.inf) > 1.0


def test_gradient_residual_examples():
    rng = np.random.default_rng(10)
    assert gradient_residual(two_valued(rng), 3) <= 1e-12
    assert gradient_residual(Field.build(rng.normal(size=(5, 2))), 2) <= 1e-12
    assert gradient_residual(NORMS_12, 4) > 0


def test_residual_direction_decreases_norm():
    # the tangent part of the gradient is a descent direction; central
    # differences confirm a strictly negative slope along its negative
    g = pnorm_gradient(NORMS_12, 4)
    d = g - projection_apply(NORMS_12, g)
    assert inner_product(d, NORMS_12) == pytest.approx(0.0, abs=1e-14)
    h = 1e-6
    slope = (p_norm(NORMS_12 - h * d, 4) - p_norm(NORMS_12 + h * d, 4)) / (2 * h)
    assert slope < -1e-3
    assert slope == pytest.approx(-inner_product(g, d), rel=1e-6)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(11)
    for p in (1.5, 3, 4):
        for _ in range(10):
            phi = Field.build(rng.uniform(-2, 2, (4, 3)), rng.dirichlet(np.ones(4)))
            g = pnorm_gradient(phi, p)
            h = Field.build(rng.normal(size=(4, 3)), phi.weights)
            h = phi.with_values(h.values)
            step = 1e-6
            fd = (p_norm(phi + step * h, p) - p_norm(phi - step * h, p)) / (2 * step)
            assert fd == pytest.approx(inner_product(g, h), rel=1e-5)
