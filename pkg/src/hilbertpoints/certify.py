"""Closed-form routes to the Hilbert-point property.

Away from p = 2 a nontrivial field is a Hilbert point exactly when its
pointwise norm takes one positive value on its support.  Each function here
tests that condition from a different angle: the norm profile itself, the
operator norm of the rank-one projection onto phi, and the first-order
optimality of phi for ``min ||phi + f||_p`` over ``<f, phi> = 0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .space import (
    STRUCT_TOL,
    Field,
    _check_compatible,
    conjugate,
    inner_product,
    p_norm,
    parse_exponent,
)

__all__ = [
    "TrivialFieldError",
    "UnsupportedExponentError",
    "Status",
    "HilbertVerdict",
    "DualWitness",
    "DEFAULT_TOL",
    "MARGIN_THRESHOLD",
    "norm_spread",
    "is_near_boundary",
    "two_valued_check",
    "projection_apply",
    "projection_pnorm",
    "dual_witness",
    "sup_witness",
    "pnorm_gradient",
    "gradient_residual",
]

DEFAULT_TOL = 1e-9
# Instances whose norm spread lies strictly between tol and this are
# reported as near-boundary; floating point cannot settle them.
MARGIN_THRESHOLD = 1e-3


class TrivialFieldError(ValueError):
    """The field is identically zero; Hilbert points are nontrivial."""


class UnsupportedExponentError(ValueError):
    pass


class Status(str, enum.Enum):
    HILBERT = "hilbert"
    NOT_HILBERT = "not_hilbert"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class HilbertVerdict:
    """Outcome of a Hilbert-point test.

    ``is_hilbert`` is None only when an iterative method could not decide;
    callers must handle that case rather than treat it as a boolean.
    ``level`` and ``support`` are the constant C and the set E of the
    two-valued description; ``violation`` is a direction f with
    ``<f, phi> = 0`` and ``||phi + f||_p < ||phi||_p`` when one was found.
    """

    is_hilbert: bool | None
    level: float
    support: frozenset[int]
    margin: float
    violation: Field | None = None
    details: dict = field(default_factory=dict, compare=False)

    @property
    def status(self) -> Status:
        if self.is_hilbert is None:
            return Status.INDETERMINATE
        return Status.HILBERT if self.is_hilbert else Status.NOT_HILBERT

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "is_hilbert": self.is_hilbert,
            "level": self.level,
            "support": sorted(self.support),
            "margin": self.margin,
        }
        if self.violation is not None:
            out["violation"] = self.violation.to_json()
        out.update(self.details)
        return out


@dataclass(frozen=True)
class DualWitness:
    """Representer psi of the norming functional of phi in L^q."""

    psi: Field
    p: float


def _require_nontrivial(phi: Field) -> np.ndarray:
    norms = phi.atom_norms()
    if not np.any(norms > 0):
        raise TrivialFieldError("trivial field: phi vanishes identically")
    return norms


def _support_mask(norms: np.ndarray, tol: float) -> np.ndarray:
    return norms > tol * norms.max()


def norm_spread(phi: Field, tol: float = DEFAULT_TOL) -> float:
    """(max - min)/max over atom norms that are not numerically zero."""
    norms = _require_nontrivial(phi)
    kept = norms[_support_mask(norms, tol)]
    return float((kept.max() - kept.min()) / kept.max())


def is_near_boundary(margin: float, tol: float = DEFAULT_TOL,
                     threshold: float = MARGIN_THRESHOLD) -> bool:
    return tol < margin <= threshold


def two_valued_check(phi: Field, tol: float = DEFAULT_TOL) -> HilbertVerdict:
    """Test whether the atom norms of phi take only the values 0 and C.

    Norms at most ``tol * max`` count as zero; the remaining ones must sit
    within ``tol * max`` of their maximum.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    norms = _require_nontrivial(phi)
    top = norms.max()
    keep = _support_mask(norms, tol)
    kept = norms[keep]
    ok = bool(np.all(top - kept <= tol * top))
    return HilbertVerdict(
        is_hilbert=ok,
        level=float(kept.mean()),
        support=frozenset(np.flatnonzero(keep).tolist()),
        margin=float((kept.max() - kept.min()) / top),
    )


def projection_apply(phi: Field, f: Field) -> Field:
    """Orthogonal projection of f onto span(phi) in the L^2 pairing."""
    _require_nontrivial(phi)
    _check_compatible(phi, f)
    return phi * (inner_product(f, phi) / inner_product(phi, phi))


def projection_pnorm(phi: Field, p) -> float:
    """Operator norm of ``f -> <f, phi> phi / ||phi||_2^2`` on L^p.

    For a rank-one map this is ``||phi||_p ||phi||_q / ||phi||_2^2``; by
    Hoelder it is at least 1, with equality exactly for two-valued phi.
    """
    _require_nontrivial(phi)
    p = parse_exponent(p)
    q = conjugate(p)
    return p_norm(phi, p) * p_norm(phi, q) / p_norm(phi, 2) ** 2


def _power_direction(phi: Field, norms: np.ndarray, p: float) -> np.ndarray:
    """Rows ``||phi(w)||^(p-2) phi(w)``, zero where phi(w) = 0."""
    out = np.zeros_like(phi.values)
    nz = norms > 0
    out[nz] = (norms[nz] ** (p - 2))[:, None] * phi.values[nz]
    return out


def dual_witness(phi: Field, p) -> DualWitness:
    """psi = ||phi(w)||^(p-2) phi(w) / ||phi||_p^p, so that <phi, psi> = 1."""
    norms = _require_nontrivial(phi)
    p = parse_exponent(p)
    if math.isinf(p):
        raise UnsupportedExponentError(
            "dual_witness needs finite p; use sup_witness for p = inf"
        )
    scale = p_norm(phi, p)
    # normalize first so the power does not overflow for large norms
    unit = phi.with_values(phi.values / scale)
    psi = _power_direction(unit, norms / scale, p) / scale
    return DualWitness(phi.with_values(psi), p)


def sup_witness(phi: Field) -> Field:
    """phi / |phi| atomwise (zero where phi vanishes).

    It has sup-norm 1, and ``||P_phi psi||_inf <= 1`` holds exactly when
    ``||phi||_1 ||phi||_inf <= ||phi||_2^2``, i.e. when phi is two-valued.
    """
    norms = _require_nontrivial(phi)
    out = np.zeros_like(phi.values)
    nz = norms > 0
    out[nz] = phi.values[nz] / norms[nz, None]
    return phi.with_values(out)


def pnorm_gradient(phi: Field, p) -> Field:
    """L^2 representer of the derivative of ``f -> ||f||_p`` at phi.

    The directional derivative along h is ``inner_product(grad, h)``.  For
    p = 1 the zero atoms get the zero subgradient.
    """
    norms = _require_nontrivial(phi)
    p = parse_exponent(p)
    if math.isinf(p):
        raise UnsupportedExponentError("the sup norm is not differentiable")
    scale = p_norm(phi, p)
    # ||phi(w)||^(p-2) phi(w) / ||phi||_p^(p-1), evaluated on phi/||phi||_p
    g = _power_direction(phi.with_values(phi.values / scale), norms / scale, p)
    return phi.with_values(g)


def gradient_residual(phi: Field, p) -> float:
    """Sine of the angle between span(phi) and the (sub)gradient of the
    p-norm at phi, taken in the L^2 pairing.

    Zero means phi already minimizes ``||phi + f||_p`` over the hyperplane
    ``<f, phi> = 0``.  The value is invariant under ``phi -> c phi``.  For
    p = inf it is the distance from the subdifferential to span(phi),
    relative to the closest subgradient.
    """
    norms = _require_nontrivial(phi)
    p = parse_exponent(p)
    w = phi.weights
    top = norms.max()
    support = norms > STRUCT_TOL * top
    if math.isinf(p):
        # Subgradients are convex combinations of e_w phi(w)/(mu(w)|phi(w)|)
        # over maximal atoms A; minimizing over the simplex and over
        # c in g - c*phi gives dist^2 = s / (mu(A) (M^2 mu(A) + s)) and
        # |g*|^2 = 1/mu(A), with s the L^2 mass of phi outside A.
        active = norms >= top * (1 - STRUCT_TOL)
        mass = float(w[active].sum())
        s = float(np.dot(w[~active], (norms[~active] / top) ** 2))
        return math.sqrt(s / (mass + s))
    unit = phi.values / top
    g = np.zeros_like(unit)
    g[support] = ((norms[support] / top) ** (p - 2))[:, None] * unit[support]
    gphi = float(np.dot(w, np.einsum("ij,ij->i", g, unit)))
    pp = float(np.dot(w, np.einsum("ij,ij->i", unit, unit)))
    # form the residual explicitly; gg - gphi^2/pp cancels catastrophically
    r = g - (gphi / pp) * unit
    rr = float(np.dot(w, np.einsum("ij,ij->i", r, r)))
    gg = float(np.dot(w, np.einsum("ij,ij->i", g, g)))
    return math.sqrt(rr / gg)
