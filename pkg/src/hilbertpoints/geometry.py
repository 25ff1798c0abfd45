"""Elementary Hilbert-space geometry behind the Rademacher classification.

Three facts about vectors ``u0, u1, ...`` whose partial sums ``u0 + u(K)``
all have norm 0 or ``|u0|``:

* two summands with ``u0 + u1 + u2 = 0`` sit at 120 degrees around ``u0``
  (``lemma1a_decompose``);
* two summands whose full sum keeps norm ``|u0|`` are orthogonal
  (``lemma1b_orthogonality``);
* with three or more summands no partial sum can vanish (``lemma3_check``,
  and the randomized ``lemma2_search``).

Tolerances are relative to ``|u0|``.  Index sets are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .space import SizeError

__all__ = [
    "GeometryError",
    "PreconditionError",
    "VectorFamily",
    "subset_sum",
    "subset_masks",
    "lemma1a_decompose",
    "lemma1b_orthogonality",
    "orthogonality_bound",
    "Lemma3Report",
    "lemma3_check",
    "Lemma2Result",
    "lemma2_search",
    "random_lemma1a_instance",
    "random_lemma1b_triple",
    "random_orthogonal_family",
]

SUBSET_GUARD = 16
SQRT3 = math.sqrt(3.0)


class GeometryError(ValueError):
    """Vectors do not have the shape a construction requires."""


class PreconditionError(GeometryError):
    """A lemma was called on data that violates its hypotheses.

    ``expected`` and ``found`` carry the failing norm pair when there is one.
    """

    def __init__(self, msg: str, expected: float | None = None,
                 found: float | None = None):
        super().__init__(msg)
        self.expected = expected
        self.found = found


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class VectorFamily:
    """A base vector ``u0`` and nonzero summands ``us[j]``."""

    u0: np.ndarray
    us: np.ndarray

    def __post_init__(self):
        u0 = _vec(self.u0)
        us = np.asarray(self.us, dtype=float)
        if us.ndim == 1:
            us = us.reshape(1, -1)
        if us.ndim != 2 or us.shape[1] != u0.size:
            raise GeometryError("summands must be vectors of the same dimension as u0")
        if not np.linalg.norm(u0) > 0:
            raise GeometryError("u0 must be nonzero")
        if us.size and not np.all(np.linalg.norm(us, axis=1) > 0):
            raise GeometryError("every summand must be nonzero")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "us", us)

    @property
    def dim(self) -> int:
        return self.u0.size

    def __len__(self) -> int:
        return len(self.us)


def subset_sum(fam: VectorFamily, K: Iterable[int]) -> np.ndarray:
    """``u0 + sum(us[j] for j in K)``."""
    K = list(K)
    for j in K:
        if not 0 <= j < len(fam):
            raise IndexError(f"index {j} outside 0..{len(fam) - 1}")
    return fam.u0 + fam.us[K].sum(axis=0)


def subset_masks(m: int) -> np.ndarray:
    """0/1 matrix, row ``i`` holding the bits of ``i`` (bit j in column j)."""
    idx = np.arange(2 ** m)
    return (idx[:, None] >> np.arange(m)[None, :]) & 1


def _close(a: float, b: float, tol: float, scale: float) -> bool:
    return abs(a - b) <= tol * scale


def lemma1a_decompose(u0, u1, u2, tol: float = 1e-9) -> np.ndarray:
    """Return v with ``v _|_ u0``, ``|v| = |u0|`` and
    ``u1 = -u0/2 + (sqrt3/2) v``, ``u2 = -u0/2 - (sqrt3/2) v``.

    Requires ``|u0| = |u0+u1| = |u0+u2|`` and ``u0 + u1 + u2 = 0``.  v is
    read off from u1.
    """
    u0, u1, u2 = _vec(u0), _vec(u1), _vec(u2)
    c = float(np.linalg.norm(u0))
    if c == 0:
        raise PreconditionError("u0 is zero")
    for name, u in (("u1", u1), ("u2", u2)):
        if np.linalg.norm(u) <= tol * c:
            raise PreconditionError(f"{name} is zero")
    for name, u in (("|u0+u1| = |u0|", u0 + u1), ("|u0+u2| = |u0|", u0 + u2)):
        if not _close(np.linalg.norm(u), c, tol, c):
            raise PreconditionError(f"{name} fails: {np.linalg.norm(u)!r} vs {c!r}")
    rest = float(np.linalg.norm(u0 + u1 + u2))
    if rest > tol * c:
        raise PreconditionError(f"|u0+u1+u2| = 0 fails: {rest!r}")
    return (2.0 / SQRT3) * (u1 + 0.5 * u0)


def orthogonality_bound(u0, tol: float) -> float:
    """Largest |<u1, u2>| compatible with the four norms of
    ``lemma1b_orthogonality`` agreeing to relative tol."""
    c2 = float(np.dot(_vec(u0), _vec(u0)))
    return (3 * tol + tol * tol) * c2


def lemma1b_orthogonality(u0, u1, u2, tol: float = 1e-9) -> float:
    """Return ``<u1, u2>`` for a triple with
    ``|u0| = |u0+u1| = |u0+u2| = |u0+u1+u2|``.

    The polarization identity
    ``2<u1,u2> = |u0+u1+u2|^2 - |u0+u1|^2 - |u0+u2|^2 + |u0|^2``
    forces the result to zero, up to ``orthogonality_bound(u0, tol)``.
    """
    u0, u1, u2 = _vec(u0), _vec(u1), _vec(u2)
    c = float(np.linalg.norm(u0))
    if c == 0:
        raise PreconditionError("u0 is zero")
    for name, u in (("u1", u1), ("u2", u2)):
        if np.linalg.norm(u) <= tol * c:
            raise PreconditionError(f"{name} is zero")
    for name, u in (("|u0+u1|", u0 + u1), ("|u0+u2|", u0 + u2),
                    ("|u0+u1+u2|", u0 + u1 + u2)):
        n = float(np.linalg.norm(u))
        if not _close(n, c, tol, c):
            raise PreconditionError(f"{name} = |u0| fails: {n!r} vs {c!r}")
    return float(np.dot(u1, u2))


@dataclass(frozen=True)
class Lemma3Report:
    level: float
    masks: tuple[int, ...]
    norms: tuple[float, ...]
    violations: tuple[int, ...]

    @property
    def all_equal(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "subsets": [{"mask": m, "norm": n} for m, n in zip(self.masks, self.norms)],
            "violations": list(self.violations),
            "all_equal": self.all_equal,
        }


def lemma3_check(fam: VectorFamily, tol: float = 1e-9) -> Lemma3Report:
    """Enumerate ``|u0 + u(K)|`` over every subset K of the summands.

    Hypotheses (checked): at least three summands, ``|u0 + u_j| = |u0|`` for
    each j, and every subset norm within tol of 0 or of ``|u0|``.  Subsets
    whose norm is 0 are listed as violations; under the hypotheses there
    are none.
    """
    m = len(fam)
    if m < 3:
        raise PreconditionError(f"need at least 3 summands, got {m}")
    if m > SUBSET_GUARD:
        raise SizeError(f"{m} summands exceed the subset guard {SUBSET_GUARD}")
    c = float(np.linalg.norm(fam.u0))
    for j in range(m):
        n = float(np.linalg.norm(fam.u0 + fam.us[j]))
        if not _close(n, c, tol, c):
            raise PreconditionError(f"|u0 + u_{j}| = |u0| fails: {n!r} vs {c!r}", c, n)
    bits = subset_masks(m)
    norms = np.linalg.norm(fam.u0 + bits @ fam.us, axis=1)
    near_zero = norms <= tol * c
    near_level = np.abs(norms - c) <= tol * c
    bad = np.flatnonzero(~(near_zero | near_level))
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(
            f"subset mask {i}: norm {norms[i]!r} is neither 0 nor |u0| = {c!r}",
            c, float(norms[i]))
    return Lemma3Report(
        level=c,
        masks=tuple(range(2 ** m)),
        norms=tuple(float(x) for x in norms),
        violations=tuple(int(i) for i in np.flatnonzero(near_zero)),
    )


# ---------------------------------------------------------------------------
# generators of hypothesis-satisfying data


def _unit_perp(rng: np.random.Generator, basis: np.ndarray, dim: int) -> np.ndarray:
    """Random unit vector orthogonal to the rows of ``basis``."""
    for _ in range(100):
        z = rng.standard_normal(dim)
        if len(basis):
            q, _ = np.linalg.qr(basis.T)
            z = z - q @ (q.T @ z)
        n = np.linalg.norm(z)
        if n > 1e-6:
            return z / n
    raise GeometryError("no room for an orthogonal direction")


def random_lemma1a_instance(rng: np.random.Generator, dim: int = 3):
    """``(u0, u1, u2, v)`` built from the 120-degree formulas."""
    if dim < 2:
        raise GeometryError("need dim >= 2")
    u0 = rng.standard_normal(dim)
    v = _unit_perp(rng, u0[None], dim) * np.linalg.norm(u0)
    u1 = -0.5 * u0 + (SQRT3 / 2) * v
    u2 = -0.5 * u0 - (SQRT3 / 2) * v
    return u0, u1, u2, v


def random_lemma1b_triple(rng: np.random.Generator, dim: int = 3):
    """Triple with ``|u0| = |u0+u1| = |u0+u2| = |u0+u1+u2|``.

    Writes ``u_i = -a_i u0 + w_i`` with ``w_i _|_ u0``.  Then
    ``|u0+u_i| = |u0|`` iff ``|w_i|^2 = (2a_i - a_i^2)|u0|^2``, and the
    fourth norm matches iff ``<u1,u2> = 0``, i.e.
    ``<w1,w2> = -a1 a2 |u0|^2``; that is feasible iff ``a1 + a2 <= 2``.
    """
    if dim < 3:
        raise GeometryError("need dim >= 3 for a generic triple")
    u0 = rng.standard_normal(dim)
    c = np.linalg.norm(u0)
    a1 = rng.uniform(0.05, 1.9)
    a2 = rng.uniform(0.05, 2.0 - a1)
    r1 = math.sqrt(2 * a1 - a1 * a1) * c
    r2 = math.sqrt(2 * a2 - a2 * a2) * c
    e1 = _unit_perp(rng, u0[None], dim)
    e2 = _unit_perp(rng, np.vstack([u0, e1]), dim)
    cos = -a1 * a2 * c * c / (r1 * r2)
    sin = math.sqrt(max(0.0, 1 - cos * cos))
    w1 = r1 * e1
    w2 = r2 * (cos * e1 + sin * e2)
    return u0, -a1 * u0 + w1, -a2 * u0 + w2


def random_orthogonal_family(rng: np.random.Generator, size: int,
                             dim: int | None = None) -> VectorFamily:
    """Family from an orthogonal sum: ``u0 = sum x_j`` and ``u_j = -2 x_j``.

    Every subset sum is a sign change of ``sum x_j`` and has norm ``|u0|``.
    """
    dim = dim or size
    if dim < size:
        raise GeometryError("orthogonal family needs dim >= size")
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    xs = q[:, :size].T * rng.uniform(0.2, 2.0, size)[:, None]
    return VectorFamily(xs.sum(axis=0), -2 * xs)


@dataclass(frozen=True)
class Lemma2Result:
    trials: int
    realizable: int
    violations: tuple
    closest_gap: float

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "realizable": self.realizable,
            "violations": [list(map(list, v)) for v in self.violations],
            "closest_gap": self.closest_gap,
        }


# Any hypothesis-satisfying quadruple, with |u0| = 1, has Gram entries
# <u0,u_j> = -s_j/2, |u_j|^2 = s_j in (0, 4], and <u_i,u_j> = c_ij where
# |u0 + u_i + u_j|^2 = 1 + 2 c_ij forces c_ij in {-1/2, 0}, while
# |u0 + u1 + u2 + u3|^2 = 1 + 2 (c12 + c13 + c23) must be 0 or 1.  So the
# only candidates with a vanishing norm have exactly one c_ij = -1/2.
_PAIRS = ((1, 2), (1, 3), (2, 3))
_SPECIAL_S = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0)


def _gram(s: np.ndarray, pair: int | None) -> np.ndarray:
    g = np.zeros((4, 4))
    g[0, 0] = 1.0
    g[0, 1:] = g[1:, 0] = -s / 2
    g[1:, 1:][np.diag_indices(3)] = s
    if pair is not None:
        i, j = _PAIRS[pair]
        g[i, j] = g[j, i] = -0.5
    return g


def _quadruple_norms(vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u0, u = vecs[0], vecs[1:]
    singles = np.linalg.norm(u0 + u, axis=1)
    sums = [u0 + u[0] + u[1], u0 + u[0] + u[2], u0 + u[1] + u[2], u0 + u.sum(axis=0)]
    return singles, np.linalg.norm(sums, axis=1)


def lemma2_search(rng: np.random.Generator, trials: int,
                  tol: float = 1e-9) -> Lemma2Result:
    """Randomized search for quadruples that satisfy the hypotheses of the
    four-vector lemma but have a vanishing pair or triple sum.

    Candidates are drawn in Gram-matrix coordinates (see the note above),
    which cover the whole hypothesis set; each PSD candidate is realized as
    vectors in R^4 and its norms rechecked directly.  ``closest_gap`` is
    the largest minimum eigenvalue over candidates with a vanishing sum,
    i.e. how close such a candidate came to being realizable.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    realizable = 0
    violations = []
    closest = -math.inf
    for _ in range(trials):
        s = np.where(rng.random(3) < 0.5, rng.uniform(0.0, 4.0, 3),
                     rng.choice(_SPECIAL_S, 3))
        s = np.maximum(s, 1e-6)
        pair = None if rng.random() < 0.25 else int(rng.integers(3))
        g = _gram(s, pair)
        lam, vec = np.linalg.eigh(g)
        if pair is not None:
            closest = max(closest, float(lam[0]))
        if lam[0] < -tol:
            continue
        # rows are the realized u0..u3, since vecs @ vecs.T == g
        vecs = vec * np.sqrt(np.clip(lam, 0, None))
        c = float(np.linalg.norm(vecs[0]))
        singles, sums = _quadruple_norms(vecs)
        if not np.all(np.abs(singles - c) <= tol * c):
            continue
        zero = sums <= tol * c
        level = np.abs(sums - c) <= tol * c
        if not np.all(zero | level):
            continue
        realizable += 1
        if zero.any():
            violations.append(vecs.tolist())
    return Lemma2Result(trials, realizable, tuple(violations), closest)
