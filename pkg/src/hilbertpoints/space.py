"""Finite probability spaces and R^d-valued fields on them.

Every measure here is atomic with strictly positive weights, so essential
suprema are plain maxima and every field is bounded.  That makes all L^p
norms finite and the L^2 pairing defined for every pair of fields, whatever
the exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "StructuralError",
    "SizeError",
    "ProbSpace",
    "Field",
    "parse_exponent",
    "conjugate",
    "p_norm",
    "inner_product",
    "expectation",
    "covariance",
]

STRUCT_TOL = 1e-12


class StructuralError(ValueError):
    """Raised when fields or spaces do not fit together."""


class SizeError(ValueError):
    """An enumeration would exceed its size guard."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProbSpace:
    """Atom weights of a finite probability space."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise StructuralError("weights must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise StructuralError("every atom weight must be finite and > 0")
        if abs(w.sum() - 1.0) > STRUCT_TOL * max(1.0, len(w)):
            raise StructuralError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, n: int) -> ProbSpace:
        return cls(np.full(n, 1.0 / n))

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    def same_as(self, other: ProbSpace) -> bool:
        return self is other or (
            self.n_atoms == other.n_atoms
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class Field:
    """An R^d-valued function on a ProbSpace, one row of ``values`` per atom."""

    space: ProbSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[1] < 1:
            raise StructuralError("values must be an (atoms, dim) array")
        if v.shape[0] != self.space.n_atoms:
            raise StructuralError(
                f"{v.shape[0]} value vectors for {self.space.n_atoms} atoms"
            )
        if not np.all(np.isfinite(v)):
            raise StructuralError("values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def build(cls, values, weights: Sequence[float] | None = None) -> Field:
        """Make a field, defaulting to uniform weights.

        Zero-weight atoms are dropped together with their values.
        """
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if weights is None:
            return cls(ProbSpace.uniform(len(v)), v)
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(v),):
            raise StructuralError(f"{len(w)} weights for {len(v)} value vectors")
        keep = w != 0
        return cls(ProbSpace(w[keep]), v[keep])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.space.weights

    def atom_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def with_values(self, values) -> Field:
        return Field(self.space, values)

    def __add__(self, other: Field) -> Field:
        _check_compatible(self, other)
        return Field(self.space, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        _check_compatible(self, other)
        return Field(self.space, self.values - other.values)

    def __mul__(self, c: float) -> Field:
        return Field(self.space, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.space, -self.values)

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "dim": self.dim,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> Field:
        """Parse ``{"weights": [...], "dim": d, "values": [[...], ...]}``.

        ``weights`` is optional; missing means uniform.
        """
        if not isinstance(data, dict):
            raise StructuralError("field: expected a JSON object")
        if "values" not in data:
            raise StructuralError("field: missing 'values'")
        values = data["values"]
        if not isinstance(values, list) or not values:
            raise StructuralError("field: 'values' must be a nonempty list")
        try:
            v = np.array(values, dtype=float)
        except (TypeError, ValueError):
            raise StructuralError("field: 'values' must be a list of numeric vectors")
        if v.ndim != 2:
            raise StructuralError("field: 'values' rows must all have the same length")
        if "dim" in data and data["dim"] != v.shape[1]:
            raise StructuralError(
                f"field: 'dim' is {data['dim']} but vectors have length {v.shape[1]}"
            )
        return cls.build(v, data.get("weights"))


def _check_compatible(f: Field, g: Field) -> None:
    if not f.space.same_as(g.space):
        raise StructuralError("fields live on different probability spaces")
    if f.dim != g.dim:
        raise StructuralError(f"dimension mismatch: {f.dim} vs {g.dim}")


def parse_exponent(p) -> float:
    """Accept a real ``p >= 1`` or ``inf``/``"inf"``; return a float."""
    if isinstance(p, str):
        s = p.strip().lower()
        p = math.inf if s in ("inf", "infinity", "oo") else float(s)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    return p


def conjugate(p: float) -> float:
    p = parse_exponent(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def _weighted_pnorm(norms: np.ndarray, weights: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(norms.max())
    top = norms.max()
    if top == 0:
        return 0.0
    # scale by the max so large p cannot overflow
    return float(top * np.dot(weights, (norms / top) ** p) ** (1.0 / p))


def p_norm(f: Field, p) -> float:
    return _weighted_pnorm(f.atom_norms(), f.weights, parse_exponent(p))


def inner_product(f: Field, g: Field) -> float:
    _check_compatible(f, g)
    return float(np.dot(f.weights, np.einsum("ij,ij->i", f.values, g.values)))


def expectation(f: Field) -> np.ndarray:
    return f.weights @ f.values


def covariance(f: Field, g: Field) -> float:
    """E<f, g> - <E f, E g>; zero exactly when f and g are uncorrelated."""
    _check_compatible(f, g)
    return inner_product(f, g) - float(np.dot(expectation(f), expectation(g)))
