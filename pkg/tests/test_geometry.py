import math

import numpy as np
import pytest

from hilbertpoints import VectorFamily, lemma1a_decompose, lemma1b_orthogonality, lemma3_check, subset_sum
from hilbertpoints.geometry import (
    GeometryError,
    PreconditionError,
    lemma2_search,
    orthogonality_bound,
    random_lemma1a_instance,
    random_lemma1b_triple,
    random_orthogonal_family,
)
from hilbertpoints.space import SizeError

S3 = math.sqrt(3)
CUBE = VectorFamily(np.ones(3), -2 * np.eye(3))


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_subset_sums():
    assert subset_sum(CUBE, []).tolist() == [1.0, 1.0, 1.0]
    assert subset_sum(CUBE, [0, 1]).tolist() == [-1.0, -1.0, 1.0]
    full = subset_sum(CUBE, [0, 1, 2])
    assert full.tolist() == [-1.0, -1.0, -1.0]
    assert np.linalg.norm(full) == pytest.approx(math.sqrt(3))
    with pytest.raises(IndexError):
        subset_sum(CUBE, [3])


def test_family_rejects_zero_vectors():
    with pytest.raises(GeometryError):
        VectorFamily(np.zeros(2), [[1.0, 0.0]])
    with pytest.raises(GeometryError):
        VectorFamily([1.0, 0.0], [[0.0, 0.0]])


def test_decompose_basic_and_rotated():
    u0, u1, u2 = np.array([1.0, 0.0]), np.array([-0.5, S3 / 2]), np.array([-0.5, -S3 / 2])
    assert np.allclose(lemma1a_decompose(u0, u1, u2), [0.0, 1.0], atol=1e-12)
    for theta in np.linspace(0.1, 6.0, 12):
        r = rot(theta)
        v = lemma1a_decompose(r @ u0, r @ u1, r @ u2)
        assert np.allclose(v, r @ [0.0, 1.0], atol=1e-12)
        assert abs(np.dot(v, r @ u0)) <= 1e-12
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)
        assert np.allclose(r @ u1, -0.5 * (r @ u0) + S3 / 2 * v, atol=1e-12)
        assert np.allclose(r @ u2, -0.5 * (r @ u0) - S3 / 2 * v, atol=1e-12)


def test_decompose_precondition():
    with pytest.raises(PreconditionError, match="u2"):
        lemma1a_decompose([1.0, 0.0], [-1.0, 0.0], [0.0, 0.0])


def test_orthogonality_example_and_rotations():
    u0, u1, u2 = np.array([1.0, 0, 0]), np.array([-1.0, 1, 0]), np.array([-1.0, -1, 0])
    for v in (u0 + u1, u0 + u2, u0 + u1 + u2):
        assert np.linalg.norm(v) == 1.0
    assert lemma1b_orthogonality(u0, u1, u2) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(10):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert abs(lemma1b_orthogonality(q @ u0, q @ u1, q @ u2)) <= orthogonality_bound(u0, 1e-9)


def test_orthogonality_precondition():
    with pytest.raises(PreconditionError):
        lemma1b_orthogonality([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


def test_subset_norms_cube_and_five():
    rep = lemma3_check(CUBE)
    assert rep.all_equal and len(rep.norms) == 8
    assert np.allclose(rep.norms, math.sqrt(3), rtol=1e-12)
    five = lemma3_check(VectorFamily(np.ones(5), -2 * np.eye(5)))
    assert len(five.norms) == 32
    assert np.allclose(five.norms, math.sqrt(5), rtol=1e-12)


def test_subset_preconditions():
    with pytest.raises(PreconditionError):
        lemma3_check(VectorFamily([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(PreconditionError):
        lemma3_check(VectorFamily(np.ones(2), -2 * np.eye(2)))
    with pytest.raises(SizeError):
        lemma3_check(VectorFamily(np.ones(17), -2 * np.eye(17)))


def test_generators_satisfy_hypotheses():
    rng = np.random.default_rng(1)
    for _ in range(50):
        u0, u1, u2, v = random_lemma1a_instance(rng, 4)
        assert np.allclose(lemma1a_decompose(u0, u1, u2), v, atol=1e-9 * np.linalg.norm(u0))
        t = random_lemma1b_triple(rng, 3)
        c = np.linalg.norm(t[0])
        for w in (t[0] + t[1], t[0] + t[2], t[0] + t[1] + t[2]):
            assert np.linalg.norm(w) == pytest.approx(c, rel=1e-12)
        assert lemma3_check(random_orthogonal_family(rng, 4, 5)).all_equal


def test_four_vector_search_small():
    res = lemma2_search(np.random.default_rng(2), 2000)
    assert res.realizable > 0
    assert res.violations == ()
    assert res.closest_gap < 0
