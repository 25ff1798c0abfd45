"""Instance generators, cross-validation, and the randomized falsification
harness behind ``hilbertpoints search``.

Per-trial randomness comes from ``np.random.default_rng([seed, index])``, so
a trial's outcome depends only on the seed and its index, not on how trials
are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .certify import (
    DEFAULT_TOL,
    MARGIN_THRESHOLD,
    gradient_residual,
    is_near_boundary,
    norm_spread,
    projection_pnorm,
    two_valued_check,
)
from .geometry import lemma2_search
from .oracle import OracleOptions, hilbert_oracle
from .rademacher import (
    RademacherSum,
    classify,
    expand,
    make_case_a,
    make_case_b,
    make_case_c,
)
from .space import Field

__all__ = [
    "DEFAULT_PS",
    "ROUTE_TOL",
    "trial_rng",
    "random_field",
    "random_two_valued_field",
    "theorem1_instance",
    "random_orthogonal",
    "random_sum",
    "cross_validate",
    "classifier_trial",
    "SearchOutcome",
    "run_search",
    "parallel_map",
]

DEFAULT_PS = (1.0, 1.5, 3.0, 4.0, math.inf)
ROUTE_TOL = 1e-9
SEARCH_MODES = ("theorem1", "classifier", "lemma2")
_LEMMA2_CHUNK = 1000


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def random_field(rng, max_atoms: int = 5, max_dim: int = 4,
                 min_margin: float = MARGIN_THRESHOLD) -> Field:
    """Field with 2..max_atoms atoms, Dirichlet weights and entries
    uniform in [-2, 2], redrawn until its norm spread exceeds min_margin."""
    while True:
        n = int(rng.integers(2, max_atoms + 1))
        d = int(rng.integers(1, max_dim + 1))
        phi = Field.build(rng.uniform(-2, 2, (n, d)), rng.dirichlet(np.ones(n)))
        if np.any(phi.atom_norms() > 0) and norm_spread(phi) > min_margin:
            return phi


def random_two_valued_field(rng, max_atoms: int = 5, max_dim: int = 4) -> Field:
    """Field whose atom norms are 0 or a common C, with at least one C."""
    n = int(rng.integers(2, max_atoms + 1))
    d = int(rng.integers(1, max_dim + 1))
    v = rng.uniform(-2, 2, (n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= rng.uniform(0.25, 2.0)
    zero = rng.random(n) < 0.3
    zero[rng.integers(n)] = False
    v[zero] = 0.0
    return Field.build(v, rng.dirichlet(np.ones(n)))


def theorem1_instance(rng, max_atoms: int = 5, max_dim: int = 4) -> Field:
    """Even mix of two-valued fields and fields well off the boundary."""
    if rng.random() < 0.5:
        return random_two_valued_field(rng, max_atoms, max_dim)
    return random_field(rng, max_atoms, max_dim)


def random_orthogonal(rng, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


_GRID = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


def random_sum(rng, max_k: int = 4, max_dim: int = 3) -> RademacherSum:
    """Random nonzero Rademacher sum.

    A third are grid sums (entries in {-1, -1/2, 0, 1/2, 1}), a third are
    grid sums plus N(0, 0.1^2) noise, and a third are rotated instances of
    the three Hilbert cases with signs flipped, zeros padded and order
    shuffled.
    """
    while True:
        d = int(rng.integers(1, max_dim + 1))
        kind = rng.integers(3)
        if kind < 2:
            k = int(rng.integers(1, max_k + 1))
            xs = rng.choice(_GRID, (k, d))
            if kind == 1:
                xs = xs + 0.1 * rng.standard_normal((k, d))
        else:
            xs = _random_case_sum(rng, max_k, d)
            if xs is None:
                continue
        if np.any(xs):
            return RademacherSum(xs)


def _random_case_sum(rng, max_k: int, d: int):
    case = rng.integers(3)
    q = random_orthogonal(rng, d)
    if case == 0:
        m = int(rng.integers(1, min(d, max_k) + 1))
        vs = q[:m] * rng.uniform(0.3, 2.0, (m, 1))
        xs = make_case_a(vs).xs
    elif case == 1:
        if max_k < 2:
            return None
        xs = make_case_b(q[0] * rng.uniform(0.3, 2.0)).xs
    else:
        if d < 2 or max_k < 3:
            return None
        c = rng.uniform(0.3, 2.0)
        xs = make_case_c(c * q[0], c * q[1]).xs
    pad = int(rng.integers(0, max_k - len(xs) + 1))
    xs = np.vstack([xs, np.zeros((pad, d))])
    xs = xs * rng.choice([-1.0, 1.0], (len(xs), 1))
    return xs[rng.permutation(len(xs))]


def _fmt_p(p: float):
    return "inf" if math.isinf(p) else p


def cross_validate(phi: Field, p: float, tol: float = DEFAULT_TOL,
                   opts: OracleOptions | None = None,
                   route_tol: float = ROUTE_TOL) -> dict:
    """Run all four routes at one exponent and compare them.

    ``agree`` is None when the oracle is indeterminate.  ``disagreement`` is
    True only when the routes split on an instance that is not
    near-boundary.
    """
    tv = two_valued_check(phi, tol)
    expected = True if p == 2 else tv.is_hilbert
    proj = projection_pnorm(phi, p)
    resid = gradient_residual(phi, p)
    oracle = hilbert_oracle(phi, p, opts)
    routes = {
        "two_valued": expected,
        "projection": abs(proj - 1.0) <= route_tol,
        "gradient": resid <= route_tol,
        "oracle": oracle.is_hilbert,
    }
    values = set(routes.values())
    agree = None if oracle.is_hilbert is None else len(values) == 1
    near = is_near_boundary(tv.margin, tol)
    out = {
        "p": _fmt_p(p),
        "is_hilbert": expected,
        "margin": tv.margin,
        "near_boundary": near,
        "routes": routes,
        "projection_pnorm": proj,
        "gradient_residual": resid,
        "oracle": oracle.to_json(),
        "agree": agree,
        "disagreement": (agree is not True) and not near,
    }
    if oracle.violation is not None:
        out["delta"] = oracle.details.get("delta")
    return out


def classifier_trial(s: RademacherSum, tol: float = DEFAULT_TOL) -> dict:
    label = classify(s, tol)
    tv = two_valued_check(expand(s), tol)
    near = is_near_boundary(tv.margin, tol, 1e-6)
    return {
        "case": label.case.value,
        "two_valued": tv.is_hilbert,
        "margin": tv.margin,
        "near_boundary": near,
        "disagreement": label.is_hilbert != tv.is_hilbert and not near,
    }


@dataclass
class SearchOutcome:
    mode: str
    trials: int
    seed: int
    failures: int = 0
    counterexample: dict | None = None
    summary: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"mode": self.mode, "trials": self.trials, "seed": self.seed,
               "failures": self.failures, "summary": self.summary}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


def _theorem1_trial(i: int, seed: int, dims: int, ps, opts: OracleOptions) -> dict:
    rng = trial_rng(seed, i)
    phi = theorem1_instance(rng, max_dim=dims)
    o = replace(opts, seed=int(rng.integers(2 ** 63)))
    rows = [cross_validate(phi, p, opts=o) for p in ps]
    bad = [r for r in rows if r["disagreement"]]
    return {"index": i, "hilbert": rows[0]["is_hilbert"],
            "fail": bool(bad), "instance": phi.to_json() if bad else None,
            "detail": bad[0] if bad else None}


def _classifier_trial(i: int, seed: int, dims: int) -> dict:
    rng = trial_rng(seed, i)
    s = random_sum(rng, max_dim=dims)
    r = classifier_trial(s)
    return {"index": i, "case": r["case"], "fail": r["disagreement"],
            "instance": s.to_json() if r["disagreement"] else None, "detail": r}


def _lemma2_chunk(i: int, seed: int, size: int) -> dict:
    res = lemma2_search(trial_rng(seed, i), size)
    return {"index": i, "realizable": res.realizable,
            "violations": [list(v) for v in res.violations],
            "closest_gap": res.closest_gap, "fail": bool(res.violations)}


def _shrink_field(data: dict, still_fails) -> dict:
    """Greedy minimization: drop atoms, then round values, while the
    disagreement persists."""
    best = data
    changed = True
    while changed:
        changed = False
        vals, w = best["values"], best["weights"]
        for i in range(len(vals)):
            if len(vals) <= 1:
                break
            keep = [j for j in range(len(vals)) if j != i]
            tw = sum(w[j] for j in keep)
            cand = {"weights": [w[j] / tw for j in keep], "dim": best["dim"],
                    "values": [vals[j] for j in keep]}
            if still_fails(cand):
                best, changed = cand, True
                break
    for digits in (1, 2, 3, 6):
        cand = dict(best, values=np.round(best["values"], digits).tolist())
        if still_fails(cand):
            return cand
    return best


def _shrink_sum(data: dict, still_fails) -> dict:
    best = data
    changed = True
    while changed:
        changed = False
        xs = best["xs"]
        for i in range(len(xs)):
            if len(xs) <= 1:
                break
            cand = {"dim": best["dim"], "xs": xs[:i] + xs[i + 1:]}
            if np.any(cand["xs"]) and still_fails(cand):
                best, changed = cand, True
                break
    for digits in (1, 2, 3, 6):
        cand = dict(best, xs=np.round(best["xs"], digits).tolist())
        if np.any(cand["xs"]) and still_fails(cand):
            return cand
    return best


def parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=8))


def run_search(mode: str, trials: int, seed: int = 0, dims: int = 3,
               jobs: int = 1, ps=DEFAULT_PS,
               opts: OracleOptions | None = None) -> SearchOutcome:
    """Run ``trials`` randomized checks of one claim.

    ``theorem1``: the four Hilbert-point routes agree on random fields.
    ``classifier``: the Rademacher classifier agrees with brute force.
    ``lemma2``: no quadruple satisfies the four-vector lemma's hypotheses
    with a vanishing sum (trials are Gram candidates).
    """
    if mode not in SEARCH_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {SEARCH_MODES}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    opts = opts or OracleOptions()
    out = SearchOutcome(mode, trials, seed)

    if mode == "lemma2":
        sizes = [min(_LEMMA2_CHUNK, trials - s) for s in range(0, trials, _LEMMA2_CHUNK)]
        rows = parallel_map(partial(_lemma2_star, seed=seed, sizes=sizes), range(len(sizes)), jobs)
        out.summary = {
            "realizable": sum(r["realizable"] for r in rows),
            "closest_gap": max(r["closest_gap"] for r in rows),
        }
        bad = [v for r in rows for v in r["violations"]]
        out.failures = len(bad)
        if bad:
            out.counterexample = {"vectors": bad[0]}
        return out

    if mode == "theorem1":
        fn = partial(_theorem1_trial, seed=seed, dims=dims, ps=tuple(ps), opts=opts)
    else:
        fn = partial(_classifier_trial, seed=seed, dims=dims)
    rows = parallel_map(fn, range(trials), jobs)
    fails = [r for r in rows if r["fail"]]
    out.failures = len(fails)
    if mode == "theorem1":
        out.summary = {"hilbert": sum(bool(r["hilbert"]) for r in rows),
                       "not_hilbert": sum(r["hilbert"] is False for r in rows),
                       "ps": [_fmt_p(p) for p in ps]}
    else:
        counts: dict[str, int] = {}
        for r in rows:
            counts[r["case"]] = counts.get(r["case"], 0) + 1
        out.summary = {"cases": dict(sorted(counts.items()))}
    if fails:
        first = fails[0]
        if mode == "theorem1":
            def still(d):
                phi = Field.from_json(d)
                return any(cross_validate(phi, p, opts=opts)["disagreement"] for p in ps)
            inst = _shrink_field(first["instance"], still)
        else:
            def still(d):
                return classifier_trial(RademacherSum.from_json(d))["disagreement"]
            inst = _shrink_sum(first["instance"], still)
        out.counterexample = {"index": first["index"], "instance": inst,
                              "detail": first["detail"]}
    return out


def _lemma2_star(i: int, seed: int, sizes) -> dict:
    return _lemma2_chunk(i, seed, sizes[i])
