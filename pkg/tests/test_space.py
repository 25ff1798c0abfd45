import math

import numpy as np
import pytest

from hilbertpoints import (
    Field,
    ProbSpace,
    StructuralError,
    conjugate,
    covariance,
    expectation,
    inner_product,
    make_case_c,
    expand,
    p_norm,
    parse_exponent,
)
from hilbertpoints.rademacher import RademacherSum
from reference import enumerate_sum, pnorm_loop

PS = (1, 1.5, 2, 3, 4, math.inf)


def test_single_atom_norm_is_value_norm():
    phi = Field.build([[3.0, 0.0]])
    for p in PS:
        assert p_norm(phi, p) == pytest.approx(3.0, rel=1e-12)


def test_sup_norm_is_max():
    phi = Field.build([[1.0, 0.0], [2.0, 0.0]], [0.5, 0.5])
    assert p_norm(phi, math.inf) == 2.0
    assert p_norm(phi, "inf") == 2.0


def test_case_c_expansion_four_norm():
    phi = expand(make_case_c([1.0, 0.0], [0.0, 1.0]))
    assert sorted(np.round(phi.atom_norms(), 12)) == [0, 0, 2, 2, 2, 2, 2, 2]
    assert p_norm(phi, 4) == pytest.approx(2 * (6 / 8) ** 0.25, rel=1e-12)


def test_norm_matches_loop():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n, d = rng.integers(1, 7), rng.integers(1, 5)
        v, w = rng.normal(size=(n, d)), rng.dirichlet(np.ones(n))
        phi = Field.build(v, w)
        for p in PS:
            assert p_norm(phi, p) == pytest.approx(pnorm_loop(v, w, p), rel=1e-12)


def test_zero_field_norm_is_zero():
    assert p_norm(Field.build(np.zeros((3, 2))), 3) == 0.0


def test_inner_product_examples():
    f = Field.build([[1.0, 1.0]])
    assert inner_product(f, f) == pytest.approx(2.0)
    g = Field.build([[1.0, 0.0], [0.0, 0.0]])
    h = Field.build([[0.0, 0.0], [0.0, 5.0]])
    assert inner_product(g, h) == 0.0
    e1 = Field.build(enumerate_sum([[1.0, 0.0], [0.0, 0.0]]))
    e2 = Field.build(enumerate_sum([[0.0, 0.0], [0.0, 1.0]]))
    assert inner_product(e1, e2) == 0.0


def test_inner_product_rejects_mismatch():
    f = Field.build([[1.0], [2.0]])
    with pytest.raises(StructuralError):
        inner_product(f, Field.build([[1.0], [2.0], [3.0]]))
    with pytest.raises(StructuralError):
        inner_product(f, Field.build([[1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(StructuralError):
        inner_product(f, Field.build([[1.0], [2.0]], [0.25, 0.75]))


def test_expectation_examples():
    c = np.array([1.5, -2.0])
    assert np.allclose(expectation(Field.build([c, c, c], [0.2, 0.3, 0.5])), c)
    assert np.allclose(expectation(Field.build([c])), c)
    s = RademacherSum([[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
    assert np.allclose(expectation(expand(s)), 0.0, atol=1e-15)


def test_covariance_examples():
    rng = np.random.default_rng(2)
    const = Field.build(np.ones((4, 2)))
    g = Field.build(rng.normal(size=(4, 2)))
    assert covariance(const, g) == pytest.approx(0.0, abs=1e-15)
    xs = [[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]]
    phi = expand(RademacherSum(xs))
    assert covariance(phi, phi) == pytest.approx(sum(np.dot(x, x) for x in xs), rel=1e-12)
    det = Field.build([[2.0, 0.0]])
    assert covariance(det, det) == 0.0


def test_weights_validated():
    with pytest.raises(StructuralError):
        ProbSpace([0.5, 0.6])
    with pytest.raises(StructuralError):
        ProbSpace([1.5, -0.5])


def test_zero_weight_atoms_are_dropped():
    phi = Field.build([[1.0], [7.0], [2.0]], [0.5, 0.0, 0.5])
    assert phi.space.n_atoms == 2
    assert phi.values[:, 0].tolist() == [1.0, 2.0]


def test_json_round_trip_and_defaults():
    phi = Field.build([[1.0, 2.0], [3.0, 4.0]], [0.25, 0.75])
    back = Field.from_json(phi.to_json())
    assert np.array_equal(back.values, phi.values)
    assert np.array_equal(back.weights, phi.weights)
    uni = Field.from_json({"values": [[1.0], [2.0]]})
    assert uni.weights.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("data, needle", [
    ({"weights": [1.0]}, "values"),
    ({"values": [[1.0, 2.0], [3.0]]}, "values"),
    ({"values": [[1.0]], "dim": 2}, "dim"),
    ({"values": [[1.0], [2.0]], "weights": [1.0]}, "weights"),
])
def test_json_errors_name_the_field(data, needle):
    with pytest.raises(StructuralError, match=needle):
        Field.from_json(data)


def test_exponents():
    assert parse_exponent("inf") == math.inf
    assert conjugate(1) == math.inf
    assert conjugate(math.inf) == 1.0
    assert conjugate(4) == pytest.approx(4 / 3)
    with pytest.raises(ValueError):
        parse_exponent(0.5)
