"""Direct numerical test of the Hilbert-point inequality.

``hilbert_oracle`` minimizes ``h -> ||h||_p`` over the affine hyperplane
``<h, phi> = ||phi||_2^2`` (that is, ``h = phi + f`` with ``<f, phi> = 0``)
and compares the result with ``||phi||_p``.  The objective is convex, so a
strict improvement anywhere is a disproof, and a certified stationary point
is a global minimum.

All restarts are advanced together as one batched array, shape
``(restarts, atoms, dim)``, with per-restart step sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certify import (
    HilbertVerdict,
    TrivialFieldError,
    norm_spread,
)
from .space import STRUCT_TOL, Field, p_norm, parse_exponent

__all__ = ["OracleOptions", "hilbert_oracle"]

# relative objective drop that is certainly not rounding noise
IMPROVEMENT_FLOOR = 1e-11
_ARMIJO = 1e-4
_MAX_HALVINGS = 60
_STALL_WINDOW = 100
_FLOOR = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class OracleOptions:
    seed: int = 0
    max_iters: int = 5000
    tol: float = 1e-6
    restarts: int = 16

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 0 or self.tol <= 0:
            raise ValueError(f"invalid oracle options: {self}")


class _Problem:
    """Weighted geometry restricted to the support of phi, phi scaled to max norm 1."""

    def __init__(self, u: np.ndarray, w: np.ndarray):
        self.u = u
        self.w = w
        self.uu = float(np.dot(w, np.einsum("nd,nd->n", u, u)))

    def ip(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("rnd,rnd->rn", a, b) @ self.w

    def tangent(self, d: np.ndarray) -> np.ndarray:
        c = np.einsum("rnd,nd->rn", d, self.u) @ self.w / self.uu
        return d - c[:, None, None] * self.u

    def onto_plane(self, h: np.ndarray) -> np.ndarray:
        c = (np.einsum("rnd,nd->rn", h, self.u) @ self.w - self.uu) / self.uu
        return h - c[:, None, None] * self.u

    def value(self, h: np.ndarray, r: float) -> np.ndarray:
        n = np.linalg.norm(h, axis=2)
        top = n.max(axis=1)
        if math.isinf(r):
            return top
        safe = np.where(top > 0, top, 1.0)
        return top * (((n / safe[:, None]) ** r) @ self.w) ** (1.0 / r)

    def value_grad(self, h: np.ndarray, r: float):
        """Value and L^2 representer of the gradient of ||.||_r, 1 <= r < inf."""
        n = np.linalg.norm(h, axis=2)
        f = self.value(h, r)
        ratio = n / f[:, None]
        nz = n > 0
        coef = np.zeros_like(n)
        coef[nz] = ratio[nz] ** (r - 2)
        g = coef[:, :, None] * h / f[:, None, None]
        return f, g

    def subgradient(self, h: np.ndarray, r: float) -> np.ndarray:
        n = np.linalg.norm(h, axis=2)
        if r == 1:
            g = np.zeros_like(h)
            nz = n > 0
            g[nz] = h[nz] / n[nz][:, None]
            return g
        rows = np.arange(h.shape[0])
        i = n.argmax(axis=1)
        g = np.zeros_like(h)
        g[rows, i] = h[rows, i] / (n[rows, i] * self.w[i])[:, None]
        return g

    def stationarity(self, h: np.ndarray, r: float) -> np.ndarray:
        _, g = self.value_grad(h, r)
        d = self.tangent(g)
        return np.sqrt(self.ip(d, d) / self.ip(g, g))


class _Tracker:
    """Best point per restart under the true objective."""

    def __init__(self, prob: _Problem, p: float, h: np.ndarray):
        self.prob, self.p = prob, p
        self.h = h.copy()
        self.val = prob.value(h, p)

    def offer(self, h: np.ndarray) -> np.ndarray:
        v = self.prob.value(h, self.p)
        better = v < self.val
        self.h[better] = h[better]
        self.val = np.where(better, v, self.val)
        return better


def _descend(prob: _Problem, h: np.ndarray, r: float, budget: int,
             stat_tol: float, tracker: _Tracker, enough) -> tuple[np.ndarray, int]:
    """Projected gradient descent on ||.||_r with Armijo backtracking.

    Stops early once ``enough(stat, tracker)`` holds.
    """
    h = prob.onto_plane(h)
    steps = np.ones(h.shape[0])
    done = np.zeros(h.shape[0], dtype=bool)
    it = 0
    for it in range(1, budget + 1):
        f, g = prob.value_grad(h, r)
        d = prob.tangent(g)
        dd = prob.ip(d, d)
        stat = np.sqrt(dd / prob.ip(g, g))
        if done.all() or enough(stat, tracker):
            break
        steps = np.where(done, steps, steps * 2.0)
        pending = ~done
        new = h.copy()
        fnew = f.copy()
        for _ in range(_MAX_HALVINGS):
            trial = prob.onto_plane(h - steps[:, None, None] * d)
            ft = prob.value(trial, r)
            ok = pending & (ft <= f - _ARMIJO * steps * dd)
            new[ok] = trial[ok]
            fnew[ok] = ft[ok]
            pending &= ~ok
            if not pending.any():
                break
            steps = np.where(pending, steps * 0.5, steps)
        # no acceptable step, or progress at the rounding floor
        done |= pending | (f - fnew <= _FLOOR * f)
        h = new
        tracker.offer(h)
    return h, it


def _subgradient(prob: _Problem, h: np.ndarray, r: float, budget: int,
                 gain_tol: float, stop_below: float,
                 tracker: _Tracker) -> tuple[np.ndarray, int]:
    """Projected subgradient with steps c/sqrt(k).

    A restart stops once its best value has not moved for a while; all stop
    once any point beats ``stop_below``.
    """
    best = prob.value(h, r)
    best_h = h.copy()
    last_gain = np.zeros(h.shape[0], dtype=int)
    c = 0.2 * math.sqrt(prob.uu)
    k = 0
    for k in range(1, budget + 1):
        d = prob.tangent(prob.subgradient(h, r))
        dn = np.sqrt(prob.ip(d, d))
        live = (dn > 0) & (k - last_gain < _STALL_WINDOW)
        if not live.any():
            break
        scale = np.where(live, c / math.sqrt(k) / np.where(dn > 0, dn, 1.0), 0.0)
        h = prob.onto_plane(h - scale[:, None, None] * d)
        v = prob.value(h, r)
        gain = v < best * (1 - gain_tol)
        last_gain = np.where(gain, k, last_gain)
        better = v < best
        best = np.where(better, v, best)
        best_h[better] = h[better]
        tracker.offer(h)
        if tracker.val.min() < stop_below:
            break
    return best_h, k


# continuation exponents used to polish the non-smooth cases
_POLISH = {1.0: (1.5, 1.2, 1.05), math.inf: (4.0, 16.0, 64.0)}


def hilbert_oracle(phi: Field, p, opts: OracleOptions | None = None) -> HilbertVerdict:
    """Decide the Hilbert-point property of phi by direct minimization.

    Returns ``is_hilbert=False`` with a violating direction when some
    feasible f lowers ``||phi + f||_p`` by more than rounding noise,
    ``is_hilbert=True`` when the search converged without finding one, and
    ``is_hilbert=None`` when it did neither within ``opts.max_iters``.
    """
    opts = opts or OracleOptions()
    p = parse_exponent(p)
    norms = phi.atom_norms()
    if not np.any(norms > 0):
        raise TrivialFieldError("trivial field: phi vanishes identically")
    top = float(norms.max())
    # atoms where phi vanishes cannot help: f there only adds norm
    support = norms > STRUCT_TOL * top
    w = phi.weights[support]
    u = phi.values[support] / top
    prob = _Problem(u, w)
    rng = np.random.default_rng(opts.seed)

    starts = np.empty((opts.restarts + 1,) + u.shape)
    starts[0] = u
    if opts.restarts:
        noise = rng.standard_normal((opts.restarts,) + u.shape)
        starts[1:] = u + prob.tangent(noise)

    tracker = _Tracker(prob, p, starts)
    base = float(prob.value(u[None], p)[0])
    smooth = 1 < p < math.inf
    iters = 0
    if smooth:
        # convexity: one stationary restart already sits at the global minimum
        h, iters = _descend(prob, starts, p, opts.max_iters, opts.tol * 1e-3, tracker,
                            lambda stat, t: bool(np.any(stat <= opts.tol * 1e-3)))
    else:
        decisive = base * (1 - opts.tol)

        def settled(stat, t):
            return t.val.min() < decisive or bool(np.any(t.val[1:] <= base * (1 + opts.tol)))

        h, iters = _subgradient(prob, starts, p, opts.max_iters, opts.tol,
                                decisive, tracker)
        for r in _POLISH[p]:
            # a drop above tol is already decisive; polishing further only
            # sharpens the violation
            if settled(None, tracker) or iters >= opts.max_iters:
                break
            h, used = _descend(prob, h, r, opts.max_iters - iters, opts.tol * 1e-3,
                               tracker, settled)
            iters += used

    best_i = int(np.argmin(tracker.val))
    best_val = float(tracker.val[best_i])
    drop = 1.0 - best_val / base
    converged = tracker.val[1:] <= base * (1 + opts.tol)
    details = {
        "p": "inf" if math.isinf(p) else p,
        "objective_at_phi": base * top,
        "best_objective": best_val * top,
        "relative_drop": drop,
        "restarts_converged": int(converged.sum()),
        "iterations": iters,
    }

    margin = norm_spread(phi)
    kept = norms[support]
    common = dict(
        level=float(kept.mean()),
        support=frozenset(np.flatnonzero(support).tolist()),
        margin=margin,
    )

    if drop > IMPROVEMENT_FLOOR:
        hv = prob.onto_plane(tracker.h[best_i][None])[0]
        f = np.zeros_like(phi.values)
        f[support] = (hv - u) * top
        violation = phi.with_values(f)
        achieved = p_norm(phi + violation, p)
        details["best_objective"] = achieved
        details["delta"] = p_norm(phi, p) - achieved
        return HilbertVerdict(False, violation=violation, details=details, **common)

    if smooth:
        stat = float(prob.stationarity(tracker.h[best_i][None], p)[0])
        details["stationarity"] = stat
        certified = stat <= opts.tol
    else:
        certified = bool(converged.any())
    return HilbertVerdict(True if certified else None, details=details, **common)
