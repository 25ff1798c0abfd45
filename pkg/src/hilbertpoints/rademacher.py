"""Finite Rademacher sums ``phi(w) = sum_j w_j x_j`` and their classification.

A sum is a Hilbert point (for p != 2) exactly when its nonzero coefficients
are, up to order and signs, one of

* (a) pairwise orthogonal vectors,
* (b) a repeated vector ``x, x``,
* (c) ``u, u/2 + (sqrt3/2) v, u/2 - (sqrt3/2) v`` with ``u _|_ v``, ``|u| = |v|``.

``classify`` reaches the label by following the flip-vector case analysis
(``|J| = 0, 1, 2, >= 3``) rather than matching the three patterns directly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    SUBSET_GUARD,
    GeometryError,
    PreconditionError,
    VectorFamily,
    lemma1a_decompose,
    lemma3_check,
    subset_masks,
)
from .space import Field, ProbSpace, SizeError, StructuralError, p_norm

__all__ = [
    "TrivialSumError",
    "RademacherSum",
    "Case",
    "CaseLabel",
    "EXPAND_GUARD",
    "JOINT_GUARD",
    "sign_patterns",
    "expand",
    "classify",
    "make_case_a",
    "make_case_b",
    "make_case_c",
    "independence_inequality_check",
]

EXPAND_GUARD = 24
JOINT_GUARD = 20
SQRT3 = math.sqrt(3.0)


class TrivialSumError(ValueError):
    """Every coefficient is zero."""


@dataclass(frozen=True, eq=False)
class RademacherSum:
    xs: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if xs.ndim != 2 or xs.shape[0] < 1 or xs.shape[1] < 1:
            raise StructuralError("xs must be a nonempty list of equal-length vectors")
        if not np.all(np.isfinite(xs)):
            raise StructuralError("xs must be finite")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    @property
    def k(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def to_json(self) -> dict:
        return {"dim": self.dim, "xs": self.xs.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> RademacherSum:
        if not isinstance(data, dict):
            raise StructuralError("sum: expected a JSON object")
        xs = data.get("xs")
        if not isinstance(xs, list) or not xs:
            raise StructuralError("sum: 'xs' must be a nonempty list")
        try:
            arr = np.array(xs, dtype=float)
        except (TypeError, ValueError):
            raise StructuralError("sum: 'xs' must be a list of numeric vectors")
        if arr.ndim != 2:
            raise StructuralError("sum: 'xs' rows must all have the same length")
        if "dim" in data and data["dim"] != arr.shape[1]:
            raise StructuralError(
                f"sum: 'dim' is {data['dim']} but vectors have length {arr.shape[1]}"
            )
        return cls(arr)


def sign_patterns(k: int) -> np.ndarray:
    """``(2^k, k)`` matrix of +-1; row i has sign -1 in column j iff bit j of i is set."""
    return 1 - 2 * subset_masks(k)


def expand(s: RademacherSum) -> Field:
    """The sum as a field on ``{-1, 1}^k`` with uniform weights, atoms in
    binary counting order."""
    if s.k > EXPAND_GUARD:
        raise SizeError(f"k = {s.k} exceeds the expansion guard {EXPAND_GUARD}")
    n = 2 ** s.k
    return Field(ProbSpace(np.full(n, 1.0 / n)), sign_patterns(s.k) @ s.xs)


class Case(str, enum.Enum):
    A = "CaseA"
    B = "CaseB"
    C = "CaseC"
    NOT_HILBERT = "NotHilbert"


@dataclass(frozen=True)
class CaseLabel:
    """Classification result.

    ``witnesses``: case A, the nonzero coefficients in input order; case B,
    the repeated vector; case C, the pair ``(u, v)``.  For NotHilbert,
    ``reason`` says which step failed and ``norms`` holds the offending pair
    (expected, found).
    """

    case: Case
    witnesses: tuple = ()
    reason: str | None = None
    norms: tuple[float, float] | None = None
    trace: dict = field(default_factory=dict, compare=False)

    @property
    def is_hilbert(self) -> bool:
        return self.case is not Case.NOT_HILBERT

    def to_json(self) -> dict:
        out = {"case": self.case.value,
               "witnesses": [np.asarray(w).tolist() for w in self.witnesses]}
        if self.reason is not None:
            out["reason"] = self.reason
            out["norms"] = list(self.norms) if self.norms else None
        out.update(self.trace)
        return out


def _not_hilbert(reason: str, expected: float, found: float, **trace) -> CaseLabel:
    return CaseLabel(Case.NOT_HILBERT, reason=reason,
                     norms=(float(expected), float(found)), trace=trace)


def _base_signs(y: np.ndarray, tol: float) -> np.ndarray:
    """Signs maximizing ``|sum eps_j y_j|``; ties go to the lexicographically
    smallest bit tuple (bit 0 = +1)."""
    bits = subset_masks(len(y))
    norms = np.linalg.norm((1 - 2 * bits) @ y, axis=1)
    top = norms.max()
    tied = np.flatnonzero(norms >= top * (1 - tol))
    best = min(tied, key=lambda i: tuple(bits[i]))
    return 1 - 2 * bits[best]


def classify(s: RademacherSum, tol: float = 1e-9) -> CaseLabel:
    """Decide which of the cases (a), (b), (c) the sum belongs to, if any.

    Coefficients with ``|x_j| <= tol * max |x|`` count as zero.  After
    flipping signs so that ``u0 = sum y_j`` has maximal norm, a Hilbert
    point must have every flip vector ``u0 - 2 y_j`` of norm 0 or ``|u0|``.
    The set J of coefficients with ``|u0 - 2 y_j| = |u0|`` then drives the
    case split.  Each branch ends by checking the coefficients against the
    case it arrived at, so a non-NotHilbert label always describes the
    input.
    """
    xs = s.xs
    lengths = np.linalg.norm(xs, axis=1)
    scale = lengths.max()
    if scale == 0:
        raise TrivialSumError("trivial sum: every coefficient is zero")
    idx = np.flatnonzero(lengths > tol * scale)
    if len(idx) > EXPAND_GUARD:
        raise SizeError(f"{len(idx)} nonzero coefficients exceed {EXPAND_GUARD}")
    signs = _base_signs(xs[idx], tol)
    y = signs[:, None] * xs[idx]
    u0 = y.sum(axis=0)
    c0 = float(np.linalg.norm(u0))
    flips = np.linalg.norm(u0 - 2 * y, axis=1)
    in_j = np.abs(flips - c0) <= tol * c0
    half = flips <= tol * c0
    trace = {"base_norm": c0, "J": [int(idx[i]) for i in np.flatnonzero(in_j)]}
    odd = np.flatnonzero(~(in_j | half))
    if odd.size:
        i = int(odd[0])
        return _not_hilbert(
            f"flip vector for x_{idx[i]} has norm neither 0 nor |u0|",
            c0, flips[i], **trace)
    J = np.flatnonzero(in_j)
    H = np.flatnonzero(half)

    if len(J) == 0:
        if len(H) != 2:
            return _not_hilbert(
                f"{len(H)} coefficients equal u0/2; a repeated pair needs 2",
                2, len(H), **trace)
        a, b = y[H]
        if np.linalg.norm(a - b) > tol * c0:
            return _not_hilbert("repeated coefficients differ",
                                0.0, np.linalg.norm(a - b), **trace)
        return CaseLabel(Case.B, (0.5 * (a + b),), trace=trace)

    if len(J) == 1:
        if len(H):
            # u0 - y_J = |H| u0 / 2 forces |u0 - 2 y_J| = ||H| - 1| |u0|
            return _not_hilbert(
                "single J-vector alongside u0/2 coefficients",
                c0, abs(len(H) - 1) * c0, **trace)
        return CaseLabel(Case.A, (xs[idx[J[0]]],), trace=trace)

    if len(J) == 2:
        a, b = J
        pair = float(np.linalg.norm(u0 - 2 * (y[a] + y[b])))
        if abs(pair - c0) <= tol * c0:
            if len(H):
                # flipping a J-vector and a u0/2 coefficient leaves -2 y_a,
                # which would need |y_a| = |u0|/2 and then |y_a + y_b| to be
                # 0 or |u0|/2, impossible for orthogonal y_a, y_b
                return _not_hilbert("u0/2 coefficient next to an orthogonal pair",
                                    0.0, len(H), **trace)
            return _orthogonal_or_not(xs[idx[J]], y[J], c0, tol, trace)
        if pair <= tol * c0:
            try:
                v = lemma1a_decompose(u0, -2 * y[a], -2 * y[b], tol)
            except PreconditionError as exc:
                return _not_hilbert(f"120-degree decomposition failed: {exc}",
                                    0.0, pair, **trace)
            if len(H) != 1:
                return _not_hilbert(
                    f"{len(H)} coefficients equal u0/2; case (c) needs exactly 1",
                    1, len(H), **trace)
            u = 0.5 * u0
            # y_a = u/2 - (sqrt3/2)(v/2); orient the witness so that the
            # earlier J-coefficient is u/2 + (sqrt3/2) v_w
            vw = -0.5 * v
            want = (u, 0.5 * u + 0.5 * SQRT3 * vw, 0.5 * u - 0.5 * SQRT3 * vw)
            got = (y[H[0]], y[a], y[b])
            err = max(float(np.linalg.norm(g - w)) for g, w in zip(got, want))
            geom = max(abs(float(np.dot(u, vw))) / c0,
                       abs(float(np.linalg.norm(vw) - np.linalg.norm(u))))
            if err > tol * c0 or geom > tol * c0:
                return _not_hilbert("coefficients miss the case (c) template",
                                    0.0, max(err, geom), **trace)
            return CaseLabel(Case.C, (u, vw), trace=trace)
        return _not_hilbert("double flip has norm neither 0 nor |u0|",
                            c0, pair, **trace)

    if len(H):
        return _not_hilbert("u0/2 coefficient next to three or more J-vectors",
                            0.0, len(H), **trace)
    if len(J) <= SUBSET_GUARD:
        try:
            report = lemma3_check(VectorFamily(u0, -2 * y[J]), tol)
        except PreconditionError as exc:
            return _not_hilbert(f"subset sums not two-valued: {exc}",
                                c0, exc.found if exc.found is not None else 0.0,
                                **trace)
        if not report.all_equal:
            m = report.violations[0]
            return _not_hilbert(f"subset mask {m} sums to zero",
                                c0, report.norms[m], **trace)
    return _orthogonal_or_not(xs[idx[J]], y[J], c0, tol, trace)


def _orthogonal_or_not(orig: np.ndarray, y: np.ndarray, c0: float, tol: float,
                       trace: dict) -> CaseLabel:
    gram = y @ y.T
    off = np.abs(gram - np.diag(np.diag(gram)))
    worst = float(off.max()) if len(y) > 1 else 0.0
    if worst > tol * c0 * c0:
        return _not_hilbert("J-vectors are not pairwise orthogonal",
                            0.0, worst, **trace)
    return CaseLabel(Case.A, tuple(orig), trace=trace)


def make_case_a(vs, tol: float = 1e-9) -> RademacherSum:
    """Sum with pairwise orthogonal, nonzero coefficients ``vs``."""
    vs = np.array(vs, dtype=float)
    if vs.ndim != 2 or len(vs) == 0:
        raise GeometryError("case (a) needs a nonempty list of vectors")
    n = np.linalg.norm(vs, axis=1)
    if not np.all(n > 0):
        raise GeometryError("case (a) coefficients must be nonzero")
    cos = np.abs(vs @ vs.T) / np.outer(n, n)
    np.fill_diagonal(cos, 0.0)
    if cos.max() > tol:
        i, j = np.unravel_index(cos.argmax(), cos.shape)
        raise GeometryError(f"vectors {i} and {j} are not orthogonal")
    return RademacherSum(vs)


def make_case_b(x) -> RademacherSum:
    """``x, x`` with x nonzero."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if not np.linalg.norm(x) > 0:
        raise GeometryError("case (b) needs a nonzero vector")
    return RademacherSum(np.vstack([x, x]))


def make_case_c(u, v, tol: float = 1e-9) -> RademacherSum:
    """``u, u/2 + (sqrt3/2) v, u/2 - (sqrt3/2) v`` for ``|u| = |v| > 0``, ``u _|_ v``.

    Its expansion has norms 0 and ``2|u|`` only.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.shape != v.shape:
        raise GeometryError("u and v must have the same dimension")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if not nu > 0:
        raise GeometryError("u must be nonzero")
    if abs(nu - nv) > tol * nu:
        raise GeometryError(f"|u| = {nu} but |v| = {nv}")
    if abs(np.dot(u, v)) > tol * nu * nv:
        raise GeometryError("u and v are not orthogonal")
    return RademacherSum(np.vstack([u, 0.5 * u + 0.5 * SQRT3 * v,
                                    0.5 * u - 0.5 * SQRT3 * v]))


def independence_inequality_check(s: RademacherSum, f_coeffs: RademacherSum,
                                  p, slack: float = 1e-12) -> bool:
    """Check ``||f||_p <= ||f + phi||_p`` for phi built from ``s`` on the first
    k signs and f from ``f_coeffs`` on the next m, so that f and phi are
    independent."""
    if s.dim != f_coeffs.dim:
        raise StructuralError("phi and f coefficients differ in dimension")
    k, m = s.k, f_coeffs.k
    if k + m > JOINT_GUARD:
        raise SizeError(f"k + m = {k + m} exceeds the joint guard {JOINT_GUARD}")
    signs = sign_patterns(k + m)
    space = ProbSpace(np.full(2 ** (k + m), 2.0 ** -(k + m)))
    phi = Field(space, signs[:, :k] @ s.xs)
    f = Field(space, signs[:, k:] @ f_coeffs.xs)
    lhs = p_norm(f, p)
    rhs = p_norm(f + phi, p)
    return lhs <= rhs + slack * max(1.0, rhs)
