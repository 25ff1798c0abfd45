import math

import numpy as np
import pytest

from hilbertpoints import (
    Field,
    OracleOptions,
    Status,
    TrivialFieldError,
    hilbert_oracle,
    inner_product,
    p_norm,
    two_valued_check,
)
from reference import scalar_two_atom_minimum

NORMS_12 = Field.build([[1.0], [2.0]], [0.5, 0.5])
# ||phi||_4 - min ||phi + f||_4 over the one-dimensional orthogonal
# complement, computed by scalar minimization in reference.py
DELTA_12 = 0.07133777729794999


def test_two_valued_minimum_at_zero():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(5, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v[3] = 0
    phi = Field.build(v, rng.dirichlet(np.ones(5)))
    out = hilbert_oracle(phi, 3)
    assert out.is_hilbert is True and out.status is Status.HILBERT
    assert out.details["best_objective"] == pytest.approx(p_norm(phi, 3), rel=1e-12)
    assert out.support == frozenset({0, 1, 2, 4})


def test_every_field_is_hilbert_at_two():
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert hilbert_oracle(Field.build(rng.normal(size=(4, 3))), 2).is_hilbert is True


def test_norms_one_two_violation():
    out = hilbert_oracle(NORMS_12, 4)
    assert out.is_hilbert is False
    f = out.violation
    assert abs(inner_product(f, NORMS_12)) <= 1e-9
    achieved = p_norm(NORMS_12 + f, 4)
    assert achieved < p_norm(NORMS_12, 4)
    assert out.details["delta"] == pytest.approx(p_norm(NORMS_12, 4) - achieved, rel=1e-12)
    ref = scalar_two_atom_minimum(1.0, 2.0, 4)
    assert p_norm(NORMS_12, 4) - ref == pytest.approx(DELTA_12, rel=1e-9)
    assert out.details["delta"] == pytest.approx(DELTA_12, rel=1e-6)


@pytest.mark.parametrize("p", [1, 1.5, 3, 4, math.inf])
def test_agrees_with_two_valued_on_small_sweep(p):
    rng = np.random.default_rng(2)
    for _ in range(8):
        phi = Field.build(rng.uniform(-2, 2, (4, 2)), rng.dirichlet(np.ones(4)))
        assert hilbert_oracle(phi, p).is_hilbert == two_valued_check(phi).is_hilbert


def test_violation_lives_on_full_space_with_zero_atoms():
    phi = Field.build([[1.0], [0.0], [2.0]], [0.25, 0.5, 0.25])
    out = hilbert_oracle(phi, 3)
    assert out.is_hilbert is False
    assert out.violation.values[1].tolist() == [0.0]
    assert p_norm(phi + out.violation, 3) < p_norm(phi, 3)


def test_seeded_determinism():
    phi = Field.build([[1.0, 0.5], [0.2, -1.0], [2.0, 0.0]])
    a = hilbert_oracle(phi, math.inf, OracleOptions(seed=3))
    b = hilbert_oracle(phi, math.inf, OracleOptions(seed=3))
    assert a.to_json() == b.to_json()


def test_budget_exhaustion_is_indeterminate():
    rng = np.random.default_rng(4)
    v = rng.normal(size=(4, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    phi = Field.build(v)
    out = hilbert_oracle(phi, 1, OracleOptions(max_iters=1, restarts=4))
    assert out.is_hilbert is None
    assert out.status is Status.INDETERMINATE
    assert out.to_json()["status"] == "indeterminate"


def test_options_validated():
    with pytest.raises(ValueError):
        OracleOptions(max_iters=0)
    with pytest.raises(ValueError):
        OracleOptions(tol=0)


def test_trivial_field():
    with pytest.raises(TrivialFieldError):
        hilbert_oracle(Field.build(np.zeros((3, 1))), 3)
